//! Monte Carlo fidelity over random fiber profiles, and the sweeps built on it.
//!
//! Realization `i` (1-based) always uses random stream `i` of the base seed,
//! so every point of a sweep sees the same fibers (common random numbers) and
//! results do not depend on how work is spread across threads. States are
//! computed in parallel, collected in index order and then averaged
//! sequentially.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{finite, Error, Result};
use crate::jones::{accumulate, apply, fidelity, DensityMatrix2, JonesState};
use crate::noise::{sample_profile, NoiseParams};
use crate::sequence::{build_propagator, PulseAxis, PulseError, PulseSequence, SequenceKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputState {
    Plus45,
    Minus45,
    H,
    V,
    Custom(JonesState),
}

impl InputState {
    pub fn state(&self) -> JonesState {
        match self {
            InputState::Plus45 => JonesState::diagonal(),
            InputState::Minus45 => JonesState::antidiagonal(),
            InputState::H => JonesState::horizontal(),
            InputState::V => JonesState::vertical(),
            InputState::Custom(s) => *s,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            InputState::Plus45 => "PLUS45",
            InputState::Minus45 => "MINUS45",
            InputState::H => "H",
            InputState::V => "V",
            InputState::Custom(_) => "CUSTOM",
        }
    }
}

/// Length-independent description of a pulse sequence.
///
/// A sequence of `pulses` plates is laid out over `L / cycles` and repeated
/// `cycles` times. For `CUSTOM`, `fractions` lists plate positions as
/// fractions of the cycle length.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub pulses: usize,
    pub cycles: usize,
    pub fractions: Vec<f64>,
    pub axis: PulseAxis,
    pub pulse_error: PulseError,
}

impl Default for SequenceSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl SequenceSpec {
    pub fn none() -> Self {
        Self {
            kind: SequenceKind::None,
            pulses: 0,
            cycles: 1,
            fractions: Vec::new(),
            axis: PulseAxis::X,
            pulse_error: PulseError::default(),
        }
    }

    pub fn of_kind(kind: SequenceKind, pulses: usize) -> Self {
        Self {
            kind,
            pulses,
            ..Self::none()
        }
    }

    pub fn cpmg(pulses: usize) -> Self {
        Self::of_kind(SequenceKind::Cpmg, pulses)
    }

    pub fn custom(fractions: Vec<f64>) -> Self {
        Self {
            kind: SequenceKind::Custom,
            pulses: fractions.len(),
            fractions,
            ..Self::none()
        }
    }

    /// Same sequence family with `n` plates in a single cycle. `NONE` and
    /// `CUSTOM` switch to CPMG; `n = 0` gives no plates.
    pub fn with_pulses(&self, n: usize) -> Self {
        let kind = match self.kind {
            SequenceKind::None | SequenceKind::Custom => SequenceKind::Cpmg,
            k => k,
        };
        Self {
            kind: if n == 0 { SequenceKind::None } else { kind },
            pulses: n,
            cycles: 1,
            fractions: Vec::new(),
            ..self.clone()
        }
    }

    pub fn total_pulses(&self) -> usize {
        match self.kind {
            SequenceKind::None => 0,
            SequenceKind::Custom => self.fractions.len() * self.cycles,
            _ => self.pulses * self.cycles,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cycles == 0 {
            return Err(Error::invalid("cycles", "must be at least 1"));
        }
        // laying out over a unit length checks everything but L
        self.build(1.0).map(|_| ())
    }

    pub fn build(&self, fiber_length: f64) -> Result<PulseSequence> {
        if self.cycles == 0 {
            return Err(Error::invalid("cycles", "must be at least 1"));
        }
        let cycle_len = fiber_length / self.cycles as f64;
        let base = match self.kind {
            SequenceKind::None => return PulseSequence::none(fiber_length),
            SequenceKind::Custom => {
                let positions = self.fractions.iter().map(|p| p * cycle_len).collect();
                PulseSequence::custom(positions, cycle_len)?
            }
            kind => {
                if self.pulses == 0 {
                    return PulseSequence::none(fiber_length);
                }
                PulseSequence::generate(kind, self.pulses, cycle_len)?
            }
        };
        let base = base.with_pulse_error(self.pulse_error);
        // CP differs from CPMG only in the plate axis, keep the generator's choice
        let base = if self.kind == SequenceKind::Cp {
            base
        } else {
            base.with_axis(self.axis)
        };
        if self.cycles == 1 {
            Ok(base)
        } else {
            base.repeated_cycles(self.cycles)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub input_state: InputState,
    /// `noise.seed` is ignored, realizations are keyed by `base_seed`.
    pub noise: NoiseParams,
    pub fiber_length: f64,
    pub sequence: SequenceSpec,
    pub ensemble_size: usize,
    pub base_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            input_state: InputState::Plus45,
            noise: NoiseParams::default(),
            fiber_length: 8.0,
            sequence: SequenceSpec::none(),
            ensemble_size: 4096,
            base_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        finite("fiber_length", self.fiber_length)?;
        if self.fiber_length <= 0.0 {
            return Err(Error::invalid("fiber_length", "must be > 0"));
        }
        if self.ensemble_size == 0 {
            return Err(Error::invalid("ensemble_size", "must be at least 1"));
        }
        self.sequence.validate()
    }

    fn with_sequence(&self, sequence: SequenceSpec) -> Self {
        Self {
            sequence,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ensemble_size: usize,
}

impl FidelityEstimate {
    /// `mean - 2 std_error`, the value compared with a target.
    pub fn lower_bound(&self) -> f64 {
        self.mean - 2.0 * self.std_error
    }
}

/// Output states of every realization, in index order.
fn output_states(c: &ExperimentConfig, seq: &PulseSequence) -> Result<Vec<JonesState>> {
    let psi_in = c.input_state.state();
    let noise = NoiseParams {
        seed: c.base_seed,
        ..c.noise
    };
    (1..=c.ensemble_size as u64)
        .into_par_iter()
        .map(|i| {
            let profile = sample_profile(&noise, c.fiber_length, i)?;
            let u = build_propagator(&profile, seq)?;
            Ok(apply(&u, &psi_in))
        })
        .collect()
}

fn estimate(psi_in: &JonesState, states: &[JonesState]) -> Result<(FidelityEstimate, f64)> {
    let mut rho = DensityMatrix2::maximally_mixed();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (i, psi) in states.iter().enumerate() {
        rho = accumulate(&rho, psi, i as u64 + 1)?;
        let f = psi_in.overlap(psi);
        sum += f;
        sum_sq += f * f;
    }
    let n = states.len() as f64;
    let pure_mean = sum / n;
    let std_error = if states.len() > 1 {
        let var = ((sum_sq - n * pure_mean * pure_mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let est = FidelityEstimate {
        mean: fidelity(psi_in, &rho),
        std_error,
        ensemble_size: states.len(),
    };
    Ok((est, pure_mean))
}

/// Fidelity of the input state against the ensemble-averaged output.
///
/// `std_error` comes from the spread of per-realization fidelities, whose
/// mean equals the reported fidelity.
pub fn run_ensemble(c: &ExperimentConfig) -> Result<FidelityEstimate> {
    c.validate()?;
    let seq = c.sequence.build(c.fiber_length)?;
    let states = output_states(c, &seq)?;
    Ok(estimate(&c.input_state.state(), &states)?.0)
}

/// One ensemble per plate count, all on the same fibers.
pub fn sweep_waveplates(
    c: &ExperimentConfig,
    counts: &[usize],
) -> Result<Vec<(usize, FidelityEstimate)>> {
    counts
        .iter()
        .map(|&n| {
            Ok((
                n,
                run_ensemble(&c.with_sequence(c.sequence.with_pulses(n)))?,
            ))
        })
        .collect()
}

/// `round(density * L)`, bumped to the next even number, at least 2.
pub fn pulses_for_length(fiber_length: f64, waveplates_per_unit_length: f64) -> usize {
    let n = (waveplates_per_unit_length * fiber_length).round().max(0.0) as usize;
    (n + n % 2).max(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthPoint {
    pub fiber_length: f64,
    pub pulses: usize,
    pub estimate: FidelityEstimate,
}

pub fn sweep_lengths(
    c: &ExperimentConfig,
    lengths: &[f64],
    waveplates_per_unit_length: f64,
) -> Result<Vec<LengthPoint>> {
    finite("waveplates_per_unit_length", waveplates_per_unit_length)?;
    if waveplates_per_unit_length <= 0.0 {
        return Err(Error::invalid("waveplates_per_unit_length", "must be > 0"));
    }
    lengths
        .iter()
        .map(|&l| {
            let pulses = pulses_for_length(l, waveplates_per_unit_length);
            let cfg = ExperimentConfig {
                fiber_length: l,
                sequence: c.sequence.with_pulses(pulses),
                ..c.clone()
            };
            Ok(LengthPoint {
                fiber_length: l,
                pulses,
                estimate: run_ensemble(&cfg)?,
            })
        })
        .collect()
}

/// Fidelity over a grid of noise strengths. Row `i` holds `sigma_len[i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourTable {
    pub sigma_len: Vec<f64>,
    pub sigma_phase: Vec<f64>,
    pub values: Vec<FidelityEstimate>,
}

impl ContourTable {
    pub fn get(&self, i_len: usize, j_phase: usize) -> &FidelityEstimate {
        &self.values[i_len * self.sigma_phase.len() + j_phase]
    }
}

pub fn contour_noise(
    c: &ExperimentConfig,
    sigma_len_grid: &[f64],
    sigma_phase_grid: &[f64],
) -> Result<ContourTable> {
    let mut values = Vec::with_capacity(sigma_len_grid.len() * sigma_phase_grid.len());
    for &sl in sigma_len_grid {
        for &sp in sigma_phase_grid {
            let cfg = ExperimentConfig {
                noise: NoiseParams {
                    sigma_seg_len: sl,
                    sigma_phase: sp,
                    ..c.noise
                },
                ..c.clone()
            };
            values.push(run_ensemble(&cfg)?);
        }
    }
    Ok(ContourTable {
        sigma_len: sigma_len_grid.to_vec(),
        sigma_phase: sigma_phase_grid.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MinWaveplates {
    Found {
        count: usize,
        estimate: FidelityEstimate,
    },
    NotAchievable,
}

impl MinWaveplates {
    pub fn count(&self) -> Option<usize> {
        match self {
            MinWaveplates::Found { count, .. } => Some(*count),
            MinWaveplates::NotAchievable => None,
        }
    }
}

/// Smallest even plate count whose `mean - 2 std_error` reaches `target`.
///
/// Counts 2, 4, 8, ... are tried until one passes (the last candidate is the
/// largest even count not above `max_count`), then the even counts between
/// the last failure and the first pass are bisected.
pub fn min_waveplates(
    c: &ExperimentConfig,
    target_fidelity: f64,
    max_count: usize,
) -> Result<MinWaveplates> {
    finite("target_fidelity", target_fidelity)?;
    if !(target_fidelity > 0.0 && target_fidelity < 1.0) {
        return Err(Error::invalid("target_fidelity", "must be inside (0, 1)"));
    }
    if max_count < 2 {
        return Err(Error::invalid("max_count", "must be at least 2"));
    }
    let top = max_count - max_count % 2;
    let mut cache = BTreeMap::new();
    let mut eval = |n: usize| -> Result<FidelityEstimate> {
        if let Some(e) = cache.get(&n) {
            return Ok(*e);
        }
        let e = run_ensemble(&c.with_sequence(c.sequence.with_pulses(n)))?;
        cache.insert(n, e);
        Ok(e)
    };

    let mut lo = 0; // largest count known to fail, 0 for none tried
    let mut hi = 2;
    loop {
        if eval(hi)?.lower_bound() >= target_fidelity {
            break;
        }
        if hi == top {
            return Ok(MinWaveplates::NotAchievable);
        }
        lo = hi;
        hi = (hi * 2).min(top);
    }
    // invariant: lo fails (or is 0), hi passes, both even
    while hi - lo > 2 {
        let mid = lo + (((hi - lo) / 2) & !1);
        if eval(mid)?.lower_bound() >= target_fidelity {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(MinWaveplates::Found {
        count: hi,
        estimate: eval(hi)?,
    })
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads` is `None`.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::invalid("threads", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}
