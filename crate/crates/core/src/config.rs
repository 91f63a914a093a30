//! Experiment files.
//!
//! One TOML file describes a run. Every section and key is optional and
//! falls back to the defaults shown by `ddfiber --help`. Unknown keys are
//! rejected by name. The resolved configuration serializes back to TOML
//! that parses to the same value.
//!
//! ```toml
//! [experiment]
//! input_state = "PLUS45"      # PLUS45 | MINUS45 | H | V | CUSTOM
//! fiber_length = 8.0
//! ensemble_size = 4096
//! base_seed = 0
//!
//! [noise]
//! mean_seg_len = 1.0
//! sigma_seg_len = 0.3
//! sigma_phase = 10.0
//!
//! [sequence]
//! kind = "CPMG"               # CPMG | CP | PDD | UDD | CUSTOM | NONE
//! pulses = 4
//! ```

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{ExperimentConfig, InputState, SequenceSpec};
use crate::filter::{FilterSpec, SpectralKind, SpectralModel};
use crate::jones::JonesState;
use crate::noise::NoiseParams;
use crate::quadrature::Tolerance;
use crate::sequence::{PulseAxis, PulseError, SequenceKind};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    MissingFile(String),
    Syntax(String),
    UnknownKeys(Vec<String>),
    Invalid(String),
}

impl ConfigError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ConfigError::MissingFile(_) => 2,
            ConfigError::Syntax(_) => 3,
            ConfigError::UnknownKeys(_) => 4,
            ConfigError::Invalid(_) => 5,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::MissingFile(p) => write!(f, "config file not found: {p}"),
            ConfigError::Syntax(m) => write!(f, "config syntax error: {m}"),
            ConfigError::UnknownKeys(keys) => {
                write!(f, "unknown config key(s): {}", keys.join(", "))
            }
            ConfigError::Invalid(m) => write!(f, "invalid config value: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<crate::Error> for ConfigError {
    fn from(e: crate::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StateTag {
    #[default]
    Plus45,
    Minus45,
    H,
    V,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSection {
    pub input_state: StateTag,
    /// `[re(h), im(h), re(v), im(v)]`, required for `CUSTOM`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub custom_state: Option<[f64; 4]>,
    pub fiber_length: f64,
    pub ensemble_size: usize,
    pub base_seed: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            input_state: StateTag::Plus45,
            custom_state: None,
            fiber_length: 8.0,
            ensemble_size: 4096,
            base_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSection {
    pub mean_seg_len: f64,
    pub sigma_seg_len: f64,
    pub sigma_phase: f64,
    pub mean_phase: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let d = NoiseParams::default();
        Self {
            mean_seg_len: d.mean_seg_len,
            sigma_seg_len: d.sigma_seg_len,
            sigma_phase: d.sigma_phase,
            mean_phase: d.mean_phase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SequenceSection {
    pub kind: SequenceKind,
    pub pulses: usize,
    pub cycles: usize,
    /// Plate positions as fractions of one cycle, `CUSTOM` only.
    pub fractions: Vec<f64>,
    pub axis: PulseAxis,
    pub pulse_error: PulseError,
}

impl Default for SequenceSection {
    fn default() -> Self {
        Self {
            kind: SequenceKind::Cpmg,
            pulses: 4,
            cycles: 1,
            fractions: Vec::new(),
            axis: PulseAxis::X,
            pulse_error: PulseError::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub waveplate_counts: Vec<usize>,
    pub lengths: Vec<f64>,
    pub waveplates_per_unit_length: f64,
    pub sigma_len_grid: Vec<f64>,
    pub sigma_phase_grid: Vec<f64>,
    pub target_fidelity: f64,
    pub max_count: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            waveplate_counts: vec![0, 2, 4, 8, 16, 32, 64, 128],
            lengths: vec![8.0, 16.0, 32.0, 64.0],
            waveplates_per_unit_length: 0.5,
            sigma_len_grid: vec![0.0, 0.125, 0.25, 0.375, 0.5],
            sigma_phase_grid: vec![0.0, 25.0, 50.0, 75.0, 100.0],
            target_fidelity: 0.99,
            max_count: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralSection {
    pub kind: SpectralKind,
    pub amplitude: f64,
    pub correlation_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff_k: Option<f64>,
    pub k_floor: f64,
    pub rel_tol: f64,
    /// Fiber lengths for `w-curve`.
    pub lengths: Vec<f64>,
    /// Number of `kL = j pi / 8` points in `filter-table`.
    pub audit_points: usize,
}

impl Default for SpectralSection {
    fn default() -> Self {
        Self {
            kind: SpectralKind::Lorentzian,
            amplitude: 1.0,
            correlation_scale: 1.0,
            cutoff_k: None,
            k_floor: 1e-4,
            rel_tol: 1e-10,
            lengths: (1..=40).map(|i| i as f64 / 10.0).collect(),
            audit_points: 200,
        }
    }
}

/// Physical context carried along for the record. Never read by any computation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetadataSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment_length_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MetadataSection {
    fn is_empty(&self) -> bool {
        self == &Self::default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub experiment: ExperimentSection,
    pub noise: NoiseSection,
    pub sequence: SequenceSection,
    pub sweep: SweepSection,
    pub spectral: SpectralSection,
    #[serde(skip_serializing_if = "MetadataSection::is_empty")]
    pub metadata: MetadataSection,
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn check_positive_list(name: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.is_empty() {
        return Err(invalid(format!("{name} must not be empty")));
    }
    if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(invalid(format!(
            "{name} entries must be finite and > 0, got {x}"
        )));
    }
    Ok(())
}

fn check_nonneg_list(name: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.is_empty() {
        return Err(invalid(format!("{name} must not be empty")));
    }
    if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(invalid(format!(
            "{name} entries must be finite and >= 0, got {x}"
        )));
    }
    Ok(())
}

impl Config {
    /// Parses TOML text. Unknown keys take precedence over value errors.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        let mut unknown = Vec::new();
        let parsed: Result<Config, _> =
            serde_ignored::deserialize(toml::Value::Table(value), |path| {
                unknown.push(path.to_string());
            });
        if !unknown.is_empty() {
            return Err(ConfigError::UnknownKeys(unknown));
        }
        let cfg = parsed.map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(ConfigError::MissingFile(path.display().to_string()))
            }
            Err(e) => return Err(ConfigError::Syntax(format!("{}: {e}", path.display()))),
        };
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.experiment;
        if e.base_seed > i64::MAX as u64 {
            return Err(invalid("base_seed must fit in a signed 64-bit integer"));
        }
        self.input_state()?;
        self.experiment_config()?.validate()?;

        let s = &self.sweep;
        check_positive_list("sweep.lengths", &s.lengths)?;
        check_nonneg_list("sweep.sigma_len_grid", &s.sigma_len_grid)?;
        check_nonneg_list("sweep.sigma_phase_grid", &s.sigma_phase_grid)?;
        if s.waveplate_counts.is_empty() {
            return Err(invalid("sweep.waveplate_counts must not be empty"));
        }
        if !(s.waveplates_per_unit_length.is_finite() && s.waveplates_per_unit_length > 0.0) {
            return Err(invalid("sweep.waveplates_per_unit_length must be > 0"));
        }
        if !(s.target_fidelity > 0.0 && s.target_fidelity < 1.0) {
            return Err(invalid("sweep.target_fidelity must be inside (0, 1)"));
        }
        if s.max_count < 2 {
            return Err(invalid("sweep.max_count must be at least 2"));
        }

        let sp = &self.spectral;
        self.spectral_model()?;
        if !(sp.rel_tol.is_finite() && sp.rel_tol > 0.0 && sp.rel_tol < 1.0) {
            return Err(invalid("spectral.rel_tol must be inside (0, 1)"));
        }
        check_positive_list("spectral.lengths", &sp.lengths)?;
        if sp.audit_points == 0 {
            return Err(invalid("spectral.audit_points must be at least 1"));
        }
        Ok(())
    }

    pub fn input_state(&self) -> Result<InputState, ConfigError> {
        let e = &self.experiment;
        if e.custom_state.is_some() && e.input_state != StateTag::Custom {
            return Err(invalid(
                "experiment.custom_state is only allowed with input_state = \"CUSTOM\"",
            ));
        }
        Ok(match e.input_state {
            StateTag::Plus45 => InputState::Plus45,
            StateTag::Minus45 => InputState::Minus45,
            StateTag::H => InputState::H,
            StateTag::V => InputState::V,
            StateTag::Custom => {
                let [hr, hi, vr, vi] = e.custom_state.ok_or_else(|| {
                    invalid("input_state = \"CUSTOM\" needs experiment.custom_state")
                })?;
                InputState::Custom(JonesState::new(
                    Complex64::new(hr, hi),
                    Complex64::new(vr, vi),
                )?)
            }
        })
    }

    pub fn sequence_spec(&self) -> SequenceSpec {
        let s = &self.sequence;
        SequenceSpec {
            kind: s.kind,
            pulses: s.pulses,
            cycles: s.cycles,
            fractions: s.fractions.clone(),
            axis: s.axis,
            pulse_error: s.pulse_error,
        }
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig, ConfigError> {
        let e = &self.experiment;
        let n = &self.noise;
        if self.sequence.kind != SequenceKind::Custom && !self.sequence.fractions.is_empty() {
            return Err(invalid(
                "sequence.fractions is only used with kind = \"CUSTOM\"",
            ));
        }
        Ok(ExperimentConfig {
            input_state: self.input_state()?,
            noise: NoiseParams {
                mean_seg_len: n.mean_seg_len,
                sigma_seg_len: n.sigma_seg_len,
                sigma_phase: n.sigma_phase,
                mean_phase: n.mean_phase,
                seed: e.base_seed,
            },
            fiber_length: e.fiber_length,
            sequence: self.sequence_spec(),
            ensemble_size: e.ensemble_size,
            base_seed: e.base_seed,
        })
    }

    pub fn spectral_model(&self) -> Result<SpectralModel, ConfigError> {
        let sp = &self.spectral;
        let mut m = SpectralModel::new(sp.kind, sp.amplitude, sp.correlation_scale)?;
        m.k_floor = sp.k_floor;
        m.cutoff_k = sp.cutoff_k;
        m.validate()?;
        Ok(m)
    }

    pub fn tolerance(&self) -> Tolerance {
        Tolerance {
            rel: self.spectral.rel_tol,
            ..Tolerance::default()
        }
    }

    /// Filter of the configured sequence, positions taken relative to `L`.
    pub fn filter_spec(&self) -> Result<FilterSpec, ConfigError> {
        let seq = self.sequence_spec().build(1.0)?;
        Ok(FilterSpec::from_sequence(&seq))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::from_toml_str("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.experiment.ensemble_size, 4096);
    }

    #[test]
    fn minimal_config() {
        let c = Config::from_toml_str(
            "[experiment]\ninput_state = \"PLUS45\"\nfiber_length = 8\n[sequence]\nkind = \"CPMG\"\npulses = 4\n",
        )
        .unwrap();
        let e = c.experiment_config().unwrap();
        assert_eq!(e.input_state, InputState::Plus45);
        assert_eq!(
            e.sequence.build(8.0).unwrap().positions(),
            &[1.0, 3.0, 5.0, 7.0]
        );
    }

    #[test]
    fn error_classes() {
        let code = |s: &str| Config::from_toml_str(s).unwrap_err().exit_code();
        assert_eq!(code("[experiment\n"), 3);
        assert_eq!(code("fiber_length = = 3"), 3);
        assert_eq!(code("[noise]\nsigma_dl_typo = 0.3\n"), 4);
        assert_eq!(code("[experiment]\nensemble_size = -5\n"), 5);
        assert_eq!(code("[experiment]\nensemble_size = 0\n"), 5);
        assert_eq!(code("[noise]\nsigma_phase = -1.0\n"), 5);
        assert_eq!(code("[sequence]\nkind = \"XY8\"\n"), 5);
        assert_eq!(code("[experiment]\ninput_state = \"CUSTOM\"\n"), 5);
        assert_eq!(code("[sweep]\ntarget_fidelity = 1.5\n"), 5);
        assert_eq!(code("[spectral]\ncorrelation_scale = 0.0\n"), 5);
    }

    #[test]
    fn unknown_key_is_named() {
        match Config::from_toml_str("[noise]\nsigma_dl_typo = 0.3\n").unwrap_err() {
            ConfigError::UnknownKeys(k) => assert_eq!(k, vec!["noise.sigma_dl_typo".to_string()]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Config::from_toml_str("[sequence.pulse_error]\nangle = 1\n").unwrap_err(),
            ConfigError::UnknownKeys(_)
        ));
    }

    #[test]
    fn echo_round_trips() {
        let text = r#"
[experiment]
input_state = "CUSTOM"
custom_state = [0.6, 0.0, 0.0, 0.8]
base_seed = 99
[sequence]
kind = "CUSTOM"
fractions = [0.1, 0.55]
[spectral]
kind = "GAUSSIAN_CORR"
cutoff_k = 123.5
[metadata]
wavelength_nm = 1550.0
note = "lab fiber"
"#;
        let c = Config::from_toml_str(text).unwrap();
        let echo = c.to_toml_string();
        assert_eq!(Config::from_toml_str(&echo).unwrap(), c);
        let d = Config::default();
        assert_eq!(Config::from_toml_str(&d.to_toml_string()).unwrap(), d);
    }

    #[test]
    fn missing_file() {
        let e = Config::load(Path::new("/nonexistent/ddfiber.toml")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
