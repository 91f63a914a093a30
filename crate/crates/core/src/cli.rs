//! The `ddfiber` command line.
//!
//! ```text
//! ddfiber <subcommand> --config <path> --out <dir> [--seed N] [--ensemble N] [--plot-script] [--threads N]
//! ```
//!
//! Exit codes: 0 success, 2 missing config file, 3 config syntax, 4 unknown
//! config key, 5 invalid value, 10 numerical failure, 1 I/O failure,
//! 64 bad command line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Config, ConfigError};
use crate::ensemble::{
    contour_noise, min_waveplates, run_ensemble, sweep_lengths, sweep_waveplates, with_threads,
    MinWaveplates,
};
use crate::filter::{cpmg4_audit, decoherence_w_with, FilterSpec};

pub const TOOL_VERSION: &str = concat!("ddfiber ", env!("CARGO_PKG_VERSION"));

const DEFAULTS_HELP: &str = "\
Config defaults (TOML, every key optional, unknown keys rejected):
  [experiment] input_state = \"PLUS45\" (PLUS45|MINUS45|H|V|CUSTOM), custom_state = [re_h, im_h, re_v, im_v],
               fiber_length = 8.0, ensemble_size = 4096, base_seed = 0
  [noise]      mean_seg_len = 1.0, sigma_seg_len = 0.3, sigma_phase = 1.0, mean_phase = 0.0
  [sequence]   kind = \"CPMG\" (CPMG|CP|PDD|UDD|CUSTOM|NONE), pulses = 4, cycles = 1, fractions = [],
               axis = \"X\", pulse_error = { rotation = 0.0, axis_tilt = 0.0 }
  [sweep]      waveplate_counts = [0, 2, 4, 8, 16, 32, 64, 128], lengths = [8, 16, 32, 64],
               waveplates_per_unit_length = 0.5, sigma_len_grid = [0, 0.125, 0.25, 0.375, 0.5],
               sigma_phase_grid = [0, 25, 50, 75, 100], target_fidelity = 0.99, max_count = 4096
  [spectral]   kind = \"LORENTZIAN\" (WHITE|LORENTZIAN|GAUSSIAN_CORR|ONE_OVER_K), amplitude = 1.0,
               correlation_scale = 1.0, cutoff_k = 200/L, k_floor = 1e-4, rel_tol = 1e-10,
               lengths = [0.1, 0.2, ..., 4.0], audit_points = 200
  [metadata]   wavelength_nm, segment_length_m, note (echoed, never used)

Exit codes: 0 ok, 2 missing file, 3 syntax, 4 unknown key, 5 invalid value, 10 numerical failure.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    /// Fidelity of one configured experiment.
    Ensemble,
    /// Fidelity against the number of plates (`sweep.waveplate_counts`).
    SweepWaveplates,
    /// Fidelity against fiber length at fixed plate density.
    SweepLengths,
    /// Fidelity over the (sigma_seg_len, sigma_phase) grid.
    Contour,
    /// Fewest plates reaching `sweep.target_fidelity`, per length in `sweep.lengths`.
    MinWaveplates,
    /// Decoherence function W(L) with and without the configured sequence.
    WCurve,
    /// Four-pulse CPMG filter function: general sum against closed forms.
    FilterTable,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Ensemble => "ensemble",
            Subcommand::SweepWaveplates => "sweep-waveplates",
            Subcommand::SweepLengths => "sweep-lengths",
            Subcommand::Contour => "contour",
            Subcommand::MinWaveplates => "min-waveplates",
            Subcommand::WCurve => "w-curve",
            Subcommand::FilterTable => "filter-table",
        }
    }

    fn stem(&self) -> String {
        self.name().replace('-', "_")
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "ddfiber", version, about = "Waveplate dynamical decoupling in birefringent fiber", after_help = DEFAULTS_HELP)]
pub struct Args {
    #[arg(value_enum)]
    pub subcommand: Subcommand,
    /// Experiment file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides experiment.base_seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides experiment.ensemble_size.
    #[arg(long)]
    pub ensemble: Option<usize>,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long)]
    pub plot_script: bool,
    /// Worker threads for ensemble runs.
    #[arg(long, env = "DDFIBER_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Model(crate::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(e) => e.exit_code(),
            CliError::Model(e) if e.is_numerical() => 10,
            CliError::Model(_) => 5,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Model(e)
    }
}

/// CSV number format: 12 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

/// A finished table, not yet on disk.
struct Table {
    comments: Vec<String>,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: Vec<&'static str>) -> Self {
        Self {
            comments: Vec::new(),
            header,
            rows: Vec::new(),
        }
    }

    fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

struct Outcome {
    table: Table,
    results: Value,
    plot: String,
}

fn estimate_json(e: &crate::ensemble::FidelityEstimate) -> Value {
    json!({ "mean": e.mean, "std_error": e.std_error, "ensemble_size": e.ensemble_size })
}

fn compute(cmd: Subcommand, cfg: &Config) -> Result<Outcome, CliError> {
    let exp = cfg.experiment_config()?;
    let stem = cmd.stem();
    let csv = format!("{stem}.csv");
    let head = |title: &str, xlabel: &str, ylabel: &str| {
        format!(
            "set datafile separator ','\nset datafile commentschars '#'\nset terminal pngcairo size 800,600\n\
             set output '{stem}.png'\nset title '{title}'\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\nset key autotitle columnhead\n"
        )
    };
    let noise_line = format!(
        "noise: mean_seg_len={} sigma_seg_len={} sigma_phase={} mean_phase={}",
        exp.noise.mean_seg_len,
        exp.noise.sigma_seg_len,
        exp.noise.sigma_phase,
        exp.noise.mean_phase
    );
    let seq_line = format!(
        "sequence: kind={} pulses={} cycles={} axis={:?}",
        exp.sequence.kind,
        exp.sequence.total_pulses(),
        exp.sequence.cycles,
        exp.sequence.axis
    );
    let run_line = format!(
        "input_state={} fiber_length={} ensemble_size={} base_seed={}",
        exp.input_state.label(),
        exp.fiber_length,
        exp.ensemble_size,
        exp.base_seed
    );

    let out = match cmd {
        Subcommand::Ensemble => {
            let e = run_ensemble(&exp)?;
            let mut t = Table::new(vec![
                "fiber_length",
                "pulses",
                "mean",
                "std_error",
                "ensemble_size",
            ]);
            t.comments = vec![run_line, noise_line, seq_line];
            t.rows.push(vec![
                num(exp.fiber_length),
                exp.sequence.total_pulses().to_string(),
                num(e.mean),
                num(e.std_error),
                e.ensemble_size.to_string(),
            ]);
            let plot = head("Ensemble fidelity", "pulses", "fidelity")
                + &format!("plot '{csv}' using 2:3:4 with yerrorbars title 'fidelity'\n");
            Outcome {
                table: t,
                results: json!({ "fidelity": estimate_json(&e) }),
                plot,
            }
        }
        Subcommand::SweepWaveplates => {
            let rows = sweep_waveplates(&exp, &cfg.sweep.waveplate_counts)?;
            let mut t = Table::new(vec!["pulses", "mean", "std_error", "ensemble_size"]);
            t.comments = vec![run_line, noise_line, seq_line];
            for (n, e) in &rows {
                t.rows.push(vec![
                    n.to_string(),
                    num(e.mean),
                    num(e.std_error),
                    e.ensemble_size.to_string(),
                ]);
            }
            let results = rows
                .iter()
                .map(|(n, e)| json!({ "pulses": n, "fidelity": estimate_json(e) }))
                .collect();
            let plot = head(
                "Fidelity against number of waveplates",
                "waveplates",
                "fidelity",
            ) + &format!("plot '{csv}' using 1:2:3 with yerrorlines title 'fidelity'\n");
            Outcome {
                table: t,
                results: Value::Array(results),
                plot,
            }
        }
        Subcommand::SweepLengths => {
            let density = cfg.sweep.waveplates_per_unit_length;
            let rows = sweep_lengths(&exp, &cfg.sweep.lengths, density)?;
            let mut t = Table::new(vec![
                "fiber_length",
                "pulses",
                "mean",
                "std_error",
                "ensemble_size",
            ]);
            t.comments = vec![
                run_line,
                noise_line,
                seq_line,
                format!("waveplates_per_unit_length={density}"),
            ];
            for r in &rows {
                t.rows.push(vec![
                    num(r.fiber_length),
                    r.pulses.to_string(),
                    num(r.estimate.mean),
                    num(r.estimate.std_error),
                    r.estimate.ensemble_size.to_string(),
                ]);
            }
            let results = rows
                .iter()
                .map(|r| json!({ "fiber_length": r.fiber_length, "pulses": r.pulses, "fidelity": estimate_json(&r.estimate) }))
                .collect();
            let plot = head("Fidelity against fiber length", "fiber length", "fidelity")
                + &format!("plot '{csv}' using 1:3:4 with yerrorlines title 'fidelity'\n");
            Outcome {
                table: t,
                results: Value::Array(results),
                plot,
            }
        }
        Subcommand::Contour => {
            let grid = contour_noise(&exp, &cfg.sweep.sigma_len_grid, &cfg.sweep.sigma_phase_grid)?;
            let mut t = Table::new(vec![
                "sigma_seg_len",
                "sigma_phase",
                "mean",
                "std_error",
                "ensemble_size",
            ]);
            t.comments = vec![
                run_line,
                noise_line,
                seq_line,
                "row-major, sigma_seg_len outer".into(),
            ];
            let mut results = Vec::new();
            for (i, &sl) in grid.sigma_len.iter().enumerate() {
                for (j, &sp) in grid.sigma_phase.iter().enumerate() {
                    let e = grid.get(i, j);
                    t.rows.push(vec![
                        num(sl),
                        num(sp),
                        num(e.mean),
                        num(e.std_error),
                        e.ensemble_size.to_string(),
                    ]);
                    results.push(json!({ "sigma_seg_len": sl, "sigma_phase": sp, "fidelity": estimate_json(e) }));
                }
            }
            let plot = format!(
                "{}set dgrid3d {},{}\nset pm3d map\nset cblabel 'fidelity'\nsplot '{csv}' using 1:2:3 with pm3d notitle\n",
                head("Fidelity over noise strengths", "sigma_seg_len", "sigma_phase"),
                grid.sigma_len.len(),
                grid.sigma_phase.len()
            );
            Outcome {
                table: t,
                results: Value::Array(results),
                plot,
            }
        }
        Subcommand::MinWaveplates => {
            let target = cfg.sweep.target_fidelity;
            let max_count = cfg.sweep.max_count;
            let mut t = Table::new(vec![
                "fiber_length",
                "min_pulses",
                "achievable",
                "mean",
                "std_error",
            ]);
            t.comments = vec![
                run_line,
                noise_line,
                seq_line,
                format!("target_fidelity={target} max_count={max_count}"),
            ];
            let mut results = Vec::new();
            for &l in &cfg.sweep.lengths {
                let c = crate::ensemble::ExperimentConfig {
                    fiber_length: l,
                    ..exp.clone()
                };
                match min_waveplates(&c, target, max_count)? {
                    MinWaveplates::Found { count, estimate } => {
                        t.rows.push(vec![
                            num(l),
                            count.to_string(),
                            "true".into(),
                            num(estimate.mean),
                            num(estimate.std_error),
                        ]);
                        results.push(json!({ "fiber_length": l, "min_pulses": count, "fidelity": estimate_json(&estimate) }));
                    }
                    MinWaveplates::NotAchievable => {
                        t.rows.push(vec![
                            num(l),
                            String::new(),
                            "false".into(),
                            String::new(),
                            String::new(),
                        ]);
                        results.push(json!({ "fiber_length": l, "min_pulses": "NOT_ACHIEVABLE" }));
                    }
                }
            }
            let plot = head("Minimum number of waveplates", "fiber length", "waveplates")
                + &format!("plot '{csv}' using 1:2 with linespoints title 'min waveplates'\n");
            Outcome {
                table: t,
                results: Value::Array(results),
                plot,
            }
        }
        Subcommand::WCurve => {
            let model = cfg.spectral_model()?;
            let with_seq = cfg.filter_spec()?;
            let tol = cfg.tolerance();
            let mut t = Table::new(vec!["fiber_length", "w_free", "w_sequence"]);
            t.comments =
                vec![
                    format!(
                    "spectral: kind={} amplitude={} correlation_scale={} cutoff_k={} k_floor={}",
                    model.kind,
                    model.amplitude,
                    model.correlation_scale,
                    model.cutoff_k.map_or("200/L".to_string(), |k| k.to_string()),
                    model.k_floor
                ),
                    format!("{seq_line} filter={}", with_seq.label()),
                ];
            let mut results = Vec::new();
            for &l in &cfg.spectral.lengths {
                let free = decoherence_w_with(&model, &FilterSpec::Free, l, tol)?;
                let seq = decoherence_w_with(&model, &with_seq, l, tol)?;
                t.rows.push(vec![num(l), num(free.w), num(seq.w)]);
                results.push(json!({ "fiber_length": l, "w_free": free.w, "w_sequence": seq.w }));
            }
            let plot = head("Decoherence function", "fiber length", "W")
                + &format!("plot '{csv}' using 1:2 with lines title 'no pulses', '' using 1:3 with lines title '{}'\n", with_seq.label());
            Outcome {
                table: t,
                results: Value::Array(results),
                plot,
            }
        }
        Subcommand::FilterTable => {
            let rows = cpmg4_audit(cfg.spectral.audit_points);
            let mut t = Table::new(vec![
                "kl",
                "general",
                "closed_form",
                "closed_form_cos8",
                "abs_diff",
                "rel_diff",
            ]);
            t.comments = vec![
                "four-pulse CPMG, fractions 1/8 3/8 5/8 7/8, kL = j*pi/8".into(),
                "closed_form = 8 sin^4(kL/16) sin^2(kL/2) / cos^2(kL/4), removable points filled by their limit".into(),
                "closed_form_cos8 = 8 sin^4(kL/16) sin^2(kL/2) / cos^2(kL/8)".into(),
            ];
            for r in &rows {
                t.rows.push(vec![
                    num(r.kl),
                    num(r.general),
                    num(r.closed_form),
                    num(r.closed_form_cos8),
                    num(r.abs_diff),
                    num(r.rel_diff),
                ]);
            }
            let agree = rows.iter().filter(|r| r.abs_diff <= 1e-9).count();
            let max_abs = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
            let max_cos8 = rows
                .iter()
                .map(|r| (r.general - r.closed_form_cos8).abs())
                .fold(0.0, f64::max);
            let plot = head("Four-pulse CPMG filter function", "kL", "F(kL)")
                + &format!(
                    "plot '{csv}' using 1:2 with lines title 'general', '' using 1:3 with points title 'closed form', '' using 1:4 with points title 'cos^2(kL/8) form'\n"
                );
            Outcome {
                table: t,
                results: json!({
                    "points": rows.len(),
                    "agreeing_within_1e-9": agree,
                    "max_abs_diff": max_abs,
                    "max_abs_diff_cos8": max_cos8,
                }),
                plot,
            }
        }
    };
    Ok(out)
}

fn run_id(cmd: Subcommand, echo: &str) -> String {
    let mut h = Sha256::new();
    h.update(TOOL_VERSION.as_bytes());
    h.update([0]);
    h.update(cmd.name().as_bytes());
    h.update([0]);
    h.update(echo.as_bytes());
    format!("{:x}", h.finalize())[..12].to_string()
}

/// Files written so far, deleted again unless `commit` is called.
struct Staged {
    files: Vec<PathBuf>,
    created_dir: Option<PathBuf>,
    done: bool,
}

impl Staged {
    fn write(&mut self, path: PathBuf, contents: &str) -> Result<(), CliError> {
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        if self.done {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if let Some(d) = &self.created_dir {
            let _ = fs::remove_dir(d);
        }
    }
}

/// Resolves the configuration for `args`, applying `--seed` and `--ensemble`.
pub fn resolve_config(args: &Args) -> Result<Config, CliError> {
    let mut cfg = Config::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.experiment.base_seed = seed;
    }
    if let Some(n) = args.ensemble {
        cfg.experiment.ensemble_size = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one subcommand and returns the manifest that was written.
pub fn run(args: &Args) -> Result<Value, CliError> {
    let start = Instant::now();
    let cfg = resolve_config(args)?;
    let echo = cfg.to_toml_string();
    let outcome = with_threads(args.threads, || compute(args.subcommand, &cfg))??;

    let created_dir = if args.out.exists() {
        None
    } else {
        fs::create_dir_all(&args.out)
            .map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
        Some(args.out.clone())
    };
    let mut staged = Staged {
        files: Vec::new(),
        created_dir,
        done: false,
    };
    let stem = args.subcommand.stem();
    let run_id = run_id(args.subcommand, &echo);

    let mut table = outcome.table;
    table.comments.insert(
        0,
        format!("{TOOL_VERSION} {} run_id={run_id}", args.subcommand.name()),
    );
    staged.write(args.out.join(format!("{stem}.csv")), &table.render())?;
    if args.plot_script {
        staged.write(args.out.join(format!("{stem}.gp")), &outcome.plot)?;
    }
    let manifest = json!({
        "tool_version": TOOL_VERSION,
        "subcommand": args.subcommand.name(),
        "run_id": run_id,
        "base_seed": cfg.experiment.base_seed,
        "config_echo": echo,
        "outputs": staged.files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "wall_time": start.elapsed().as_secs_f64(),
        "results": outcome.results,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    staged.write(args.out.join("manifest.json"), &(text + "\n"))?;
    staged.done = true;
    Ok(manifest)
}

/// Entry point for the binary. Returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 64 } else { 0 };
        }
    };
    match run(&args) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("ddfiber: {e}");
            e.exit_code()
        }
    }
}

/// Path of the CSV a subcommand writes into `out`.
pub fn csv_path(out: &Path, cmd: Subcommand) -> PathBuf {
    out.join(format!("{}.csv", cmd.stem()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_has_twelve_digits() {
        assert_eq!(num(0.5), "5.00000000000e-1");
        assert_eq!(num(1.0 / 3.0), "3.33333333333e-1");
    }

    #[test]
    fn run_id_depends_on_inputs() {
        assert_eq!(
            run_id(Subcommand::Contour, "a"),
            run_id(Subcommand::Contour, "a")
        );
        assert_ne!(
            run_id(Subcommand::Contour, "a"),
            run_id(Subcommand::Contour, "b")
        );
        assert_ne!(
            run_id(Subcommand::Contour, "a"),
            run_id(Subcommand::WCurve, "a")
        );
        assert_eq!(run_id(Subcommand::Ensemble, "").len(), 12);
    }

    #[test]
    fn bad_command_line() {
        assert_eq!(
            main_with_args(["ddfiber", "frobnicate", "--config", "x", "--out", "y"]),
            64
        );
        assert_eq!(main_with_args(["ddfiber", "ensemble"]), 64);
    }
}
