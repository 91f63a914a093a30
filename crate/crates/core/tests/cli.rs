use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ddfiber::config::Config;
use tempfile::TempDir;

fn ddfiber(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddfiber"))
        .args(args)
        .env_remove("DDFIBER_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        sub,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    ddfiber(&args)
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let missing = tmp.path().join("nope.toml");
    assert_eq!(run("ensemble", &missing, &out, &[]).status.code(), Some(2));

    let cases = [
        ("syntax.toml", "[experiment\nfiber_length = 8\n", 3),
        ("unknown.toml", "[noise]\nsigma_dl_typo = 0.3\n", 4),
        ("negative.toml", "[experiment]\nensemble_size = -3\n", 5),
        (
            "state.toml",
            "[experiment]\ninput_state = \"DIAGONAL\"\n",
            5,
        ),
        (
            "positions.toml",
            "[sequence]\nkind = \"CUSTOM\"\nfractions = [0.7, 0.2]\n",
            5,
        ),
    ];
    for (name, text, code) in cases {
        let cfg = write_config(tmp.path(), name, text);
        let o = run("ensemble", &cfg, &out, &[]);
        assert_eq!(
            o.status.code(),
            Some(code),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!out.exists(), "{name} left output behind");
    }

    let cfg = write_config(tmp.path(), "unknown.toml", "[noise]\nsigma_dl_typo = 0.3\n");
    let stderr = String::from_utf8(run("ensemble", &cfg, &out, &[]).stderr).unwrap();
    assert!(stderr.contains("sigma_dl_typo"), "{stderr}");

    let ok = write_config(tmp.path(), "ok.toml", "");
    assert_eq!(
        run("ensemble", &ok, &out, &["--ensemble", "0"])
            .status
            .code(),
        Some(5)
    );
    assert_eq!(
        run("ensemble", &ok, &out, &["--threads", "0"])
            .status
            .code(),
        Some(5)
    );
    assert!(!out.exists());
}

#[test]
fn numerical_failure_is_reported_and_cleaned_up() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        "loose.toml",
        "[spectral]\nrel_tol = 0.5\nlengths = [3.0]\n",
    );
    let o = run("w-curve", &cfg, &out, &["--plot-script"]);
    assert_eq!(
        o.status.code(),
        Some(10),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(!out.exists());
}

#[test]
fn existing_output_dir_is_kept_on_failure() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    fs::create_dir(&out).unwrap();
    fs::write(out.join("keep.txt"), "x").unwrap();
    let cfg = write_config(
        tmp.path(),
        "loose.toml",
        "[spectral]\nrel_tol = 0.5\nlengths = [3.0]\n",
    );
    assert_eq!(run("w-curve", &cfg, &out, &[]).status.code(), Some(10));
    let left: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(left, vec!["keep.txt"]);
}

#[test]
fn ensemble_without_dephasing_records_unit_fidelity() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        "quiet.toml",
        "[experiment]\nensemble_size = 50\n[noise]\nsigma_phase = 0.0\nmean_phase = 1.3\n",
    );
    let o = run("ensemble", &cfg, &out, &["--seed", "17", "--plot-script"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["results"]["fidelity"]["mean"], 1.0);
    assert_eq!(manifest["base_seed"], 17);
    assert_eq!(manifest["subcommand"], "ensemble");
    assert!(manifest["wall_time"].as_f64().unwrap() >= 0.0);
    assert_eq!(manifest["run_id"].as_str().unwrap().len(), 12);
    for p in manifest["outputs"].as_array().unwrap() {
        assert!(Path::new(p.as_str().unwrap()).exists());
    }
    assert!(out.join("ensemble.gp").exists());
    let script = fs::read_to_string(out.join("ensemble.gp")).unwrap();
    assert!(script.contains("'ensemble.csv'"));
}

#[test]
fn config_echo_round_trips() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let text = "[experiment]\ninput_state = \"MINUS45\"\nensemble_size = 32\n[sequence]\nkind = \"UDD\"\npulses = 6\n\
                [sequence.pulse_error]\nrotation = 0.01\n[metadata]\nwavelength_nm = 1310.0\n";
    let cfg = write_config(tmp.path(), "rt.toml", text);
    assert!(run("ensemble", &cfg, &out, &["--seed", "5"])
        .status
        .success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let echo = manifest["config_echo"].as_str().unwrap();
    let reparsed = Config::from_toml_str(echo).unwrap();
    let mut original = Config::from_toml_str(text).unwrap();
    original.experiment.base_seed = 5;
    assert_eq!(reparsed, original);
    assert_eq!(reparsed.metadata.wavelength_nm, Some(1310.0));
}

#[test]
fn w_curve_zero_amplitude_is_all_ones() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "zero.toml", "[spectral]\namplitude = 0.0\n");
    assert!(run("w-curve", &cfg, &out, &[]).status.success());
    let rows = data_rows(&fs::read_to_string(out.join("w_curve.csv")).unwrap());
    assert_eq!(rows.len(), 40);
    for r in rows {
        assert_eq!(r[1], "1.00000000000e0");
        assert_eq!(r[2], "1.00000000000e0");
    }
}

#[test]
fn csv_schema_and_number_format() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        "sweep.toml",
        "[experiment]\nensemble_size = 64\n[sweep]\nwaveplate_counts = [0, 2, 8]\n",
    );
    assert!(run("sweep-waveplates", &cfg, &out, &[]).status.success());
    let csv = fs::read_to_string(out.join("sweep_waveplates.csv")).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "pulses,mean,std_error,ensemble_size");
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r.len(), 4);
        let mantissa = r[1].split('e').next().unwrap();
        assert_eq!(mantissa.replace(['.', '-'], "").len(), 12, "{}", r[1]);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "[experiment]\nensemble_size = 128\n[noise]\nsigma_phase = 3.0\n[sweep]\nsigma_len_grid = [0.1, 0.4]\nsigma_phase_grid = [0.0, 2.0]\n",
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run("contour", &cfg, &a, &["--threads", "1"])
        .status
        .success());
    assert!(run("contour", &cfg, &b, &["--threads", "2"])
        .status
        .success());
    assert_eq!(
        fs::read(a.join("contour.csv")).unwrap(),
        fs::read(b.join("contour.csv")).unwrap()
    );
    assert_eq!(
        data_rows(&fs::read_to_string(a.join("contour.csv")).unwrap()).len(),
        4
    );
}

#[test]
fn min_waveplates_reports_unreachable_targets() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        "hard.toml",
        "[experiment]\nensemble_size = 128\n[noise]\nsigma_phase = 100.0\n[sweep]\nlengths = [8.0]\ntarget_fidelity = 0.999\nmax_count = 2\n",
    );
    assert!(run("min-waveplates", &cfg, &out, &[]).status.success());
    let rows = data_rows(&fs::read_to_string(out.join("min_waveplates.csv")).unwrap());
    assert_eq!(rows[0][2], "false");
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("NOT_ACHIEVABLE"));
}

#[test]
fn filter_table_has_requested_points() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "f.toml", "[spectral]\naudit_points = 48\n");
    assert!(run("filter-table", &cfg, &out, &["--plot-script"])
        .status
        .success());
    let rows = data_rows(&fs::read_to_string(out.join("filter_table.csv")).unwrap());
    assert_eq!(rows.len(), 48);
    assert!(out.join("filter_table.gp").exists());
}

#[test]
fn help_lists_defaults() {
    let o = ddfiber(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for word in [
        "sweep-waveplates",
        "filter-table",
        "DDFIBER_THREADS",
        "ensemble_size = 4096",
    ] {
        assert!(text.contains(word), "missing {word}");
    }
}
