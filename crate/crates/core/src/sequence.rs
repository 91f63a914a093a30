//! Waveplate placements and the ordered fiber propagator.
//!
//! A sequence is a set of instantaneous pi-pulses (half-wave plates) at
//! fixed positions along a fiber of length `L`. The propagator of one
//! realization is the spatially ordered product of free dephasing pieces
//! between plates, interleaved with the plate unitaries.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};
use crate::jones::{diagonal_phase, equatorial_rotation, pauli_x_pulse, pauli_y_pulse, Unitary2};
use crate::noise::FiberProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SequenceKind {
    Cpmg,
    Cp,
    Pdd,
    Udd,
    Custom,
    None,
}

impl SequenceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SequenceKind::Cpmg => "CPMG",
            SequenceKind::Cp => "CP",
            SequenceKind::Pdd => "PDD",
            SequenceKind::Udd => "UDD",
            SequenceKind::Custom => "CUSTOM",
            SequenceKind::None => "NONE",
        }
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "CPMG" => SequenceKind::Cpmg,
            "CP" => SequenceKind::Cp,
            "PDD" => SequenceKind::Pdd,
            "UDD" => SequenceKind::Udd,
            "CUSTOM" => SequenceKind::Custom,
            "NONE" => SequenceKind::None,
            other => {
                return Err(Error::invalid(
                    "sequence kind",
                    format!("unknown kind {other:?}"),
                ))
            }
        })
    }
}

/// Rotation axis of the plates on the Bloch sphere of the (H, V) qubit.
///
/// `X` is a half-wave plate in the diagonal basis (`-i sigma_x`), which
/// leaves the +45/-45 states fixed up to phase. `Y` is `-i sigma_y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PulseAxis {
    #[default]
    X,
    Y,
}

impl PulseAxis {
    fn angle(self) -> f64 {
        match self {
            PulseAxis::X => 0.0,
            PulseAxis::Y => 0.5 * PI,
        }
    }
}

/// Systematic plate imperfection applied identically to every pulse.
/// Zero (the default) gives exact pi rotations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseError {
    /// Over-rotation added to pi, radians.
    #[serde(default)]
    pub rotation: f64,
    /// Tilt of the rotation axis within the equatorial plane, radians.
    #[serde(default)]
    pub axis_tilt: f64,
}

impl PulseError {
    pub fn is_zero(&self) -> bool {
        self.rotation == 0.0 && self.axis_tilt == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    positions: Vec<f64>,
    fiber_length: f64,
    kind: SequenceKind,
    axis: PulseAxis,
    pulse_error: PulseError,
}

fn check_count(n_pulses: usize) -> Result<()> {
    if n_pulses == 0 {
        return Err(Error::invalid("n_pulses", "must be at least 1"));
    }
    Ok(())
}

impl PulseSequence {
    /// Validates that positions are finite, strictly increasing and strictly inside `(0, L)`.
    pub fn new(
        kind: SequenceKind,
        positions: Vec<f64>,
        fiber_length: f64,
        axis: PulseAxis,
    ) -> Result<Self> {
        finite("fiber_length", fiber_length)?;
        if fiber_length <= 0.0 {
            return Err(Error::invalid("fiber_length", "must be > 0"));
        }
        for (i, &x) in positions.iter().enumerate() {
            finite("pulse position", x)?;
            if !(x > 0.0 && x < fiber_length) {
                return Err(Error::invalid(
                    "pulse position",
                    format!("position {i} = {x} is not inside (0, {fiber_length})"),
                ));
            }
            if i > 0 && x <= positions[i - 1] {
                return Err(Error::Unsorted { index: i, value: x });
            }
        }
        Ok(Self {
            positions,
            fiber_length,
            kind,
            axis,
            pulse_error: PulseError::default(),
        })
    }

    /// Free propagation, no plates.
    pub fn none(fiber_length: f64) -> Result<Self> {
        Self::new(SequenceKind::None, Vec::new(), fiber_length, PulseAxis::X)
    }

    /// CPMG: `x_k = (k - 1/2) L / n`, plates about x.
    pub fn cpmg(n_pulses: usize, fiber_length: f64) -> Result<Self> {
        check_count(n_pulses)?;
        let n = n_pulses as f64;
        let xs = (1..=n_pulses)
            .map(|k| (k as f64 - 0.5) * fiber_length / n)
            .collect();
        Self::new(SequenceKind::Cpmg, xs, fiber_length, PulseAxis::X)
    }

    /// Carr-Purcell: CPMG timing with the plates rotating about y, i.e.
    /// perpendicular to the +45 input. Identical to CPMG for perfect
    /// plates; differs once a [`PulseError`] is set.
    pub fn cp(n_pulses: usize, fiber_length: f64) -> Result<Self> {
        let mut s = Self::cpmg(n_pulses, fiber_length)?;
        s.kind = SequenceKind::Cp;
        s.axis = PulseAxis::Y;
        Ok(s)
    }

    /// Periodic DD: `x_k = k L / (n + 1)`.
    pub fn pdd(n_pulses: usize, fiber_length: f64) -> Result<Self> {
        check_count(n_pulses)?;
        let d = (n_pulses + 1) as f64;
        let xs = (1..=n_pulses)
            .map(|k| k as f64 * fiber_length / d)
            .collect();
        Self::new(SequenceKind::Pdd, xs, fiber_length, PulseAxis::X)
    }

    /// Uhrig DD: `x_j = L sin^2(j pi / (2n + 2))`.
    pub fn udd(n_pulses: usize, fiber_length: f64) -> Result<Self> {
        check_count(n_pulses)?;
        let d = (2 * n_pulses + 2) as f64;
        let xs = (1..=n_pulses)
            .map(|j| fiber_length * (j as f64 * PI / d).sin().powi(2))
            .collect();
        Self::new(SequenceKind::Udd, xs, fiber_length, PulseAxis::X)
    }

    pub fn custom(positions: Vec<f64>, fiber_length: f64) -> Result<Self> {
        Self::new(SequenceKind::Custom, positions, fiber_length, PulseAxis::X)
    }

    /// Generator dispatch by kind. `CUSTOM` is not constructible from a count.
    pub fn generate(kind: SequenceKind, n_pulses: usize, fiber_length: f64) -> Result<Self> {
        match kind {
            SequenceKind::Cpmg => Self::cpmg(n_pulses, fiber_length),
            SequenceKind::Cp => Self::cp(n_pulses, fiber_length),
            SequenceKind::Pdd => Self::pdd(n_pulses, fiber_length),
            SequenceKind::Udd => Self::udd(n_pulses, fiber_length),
            SequenceKind::None => Self::none(fiber_length),
            SequenceKind::Custom => Err(Error::invalid(
                "sequence kind",
                "CUSTOM needs explicit positions",
            )),
        }
    }

    pub fn with_axis(mut self, axis: PulseAxis) -> Self {
        self.axis = axis;
        self
    }

    pub fn with_pulse_error(mut self, e: PulseError) -> Self {
        self.pulse_error = e;
        self
    }

    /// `n_cycles` shifted copies of `self` laid end to end.
    pub fn repeated_cycles(&self, n_cycles: usize) -> Result<Self> {
        if n_cycles == 0 {
            return Err(Error::invalid("n_cycles", "must be at least 1"));
        }
        let l = self.fiber_length;
        let xs = (0..n_cycles)
            .flat_map(|c| self.positions.iter().map(move |&x| x + c as f64 * l))
            .collect();
        let mut out = Self::new(self.kind, xs, l * n_cycles as f64, self.axis)?;
        out.pulse_error = self.pulse_error;
        Ok(out)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn fiber_length(&self) -> f64 {
        self.fiber_length
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn axis(&self) -> PulseAxis {
        self.axis
    }

    pub fn pulse_error(&self) -> PulseError {
        self.pulse_error
    }

    /// `0, x_1, ..., x_n, L`
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.positions.len() + 2);
        b.push(0.0);
        b.extend_from_slice(&self.positions);
        b.push(self.fiber_length);
        b
    }

    /// Positions divided by the fiber length.
    pub fn fractions(&self) -> Vec<f64> {
        self.positions
            .iter()
            .map(|x| x / self.fiber_length)
            .collect()
    }

    /// Unitary of a single plate including any configured error.
    pub fn pulse_unitary(&self) -> Unitary2 {
        if self.pulse_error.is_zero() {
            return match self.axis {
                PulseAxis::X => pauli_x_pulse(),
                PulseAxis::Y => pauli_y_pulse(),
            };
        }
        equatorial_rotation(
            PI + self.pulse_error.rotation,
            self.axis.angle() + self.pulse_error.axis_tilt,
        )
    }
}

/// Ordered product `U_{n+1} P U_n ... P U_1` over `[0, L]`, where `U_m` is
/// the free dephasing between consecutive plates and `P` the plate unitary.
/// A plate that sits exactly on a segment boundary acts after the phase up
/// to that boundary has been accumulated.
pub fn build_propagator(profile: &FiberProfile, seq: &PulseSequence) -> Result<Unitary2> {
    if seq.fiber_length() > profile.total_length() {
        return Err(Error::invalid(
            "sequence",
            format!(
                "sequence length {} exceeds profile length {}",
                seq.fiber_length(),
                profile.total_length()
            ),
        ));
    }
    let pulse = seq.pulse_unitary();
    let mut u = Unitary2::identity();
    let mut prev = 0.0;
    for &x in seq.positions() {
        u = pulse * (diagonal_phase(profile.phase_between(prev, x)) * u);
        prev = x;
    }
    Ok(diagonal_phase(profile.phase_between(prev, seq.fiber_length())) * u)
}

/// Phase left over after the sequence, from the scalar sign-flip picture.
pub fn residual_phase(profile: &FiberProfile, seq: &PulseSequence) -> Result<f64> {
    profile.signed_phase(&seq.boundaries())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jones::{apply, JonesState};
    use crate::noise::{sample_profile, NoiseParams, Segment};
    use proptest::prelude::*;

    fn assert_positions(seq: &PulseSequence, expected: &[f64]) {
        assert_eq!(seq.len(), expected.len());
        for (a, b) in seq.positions().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn cpmg4_unit_length() {
        assert_positions(
            &PulseSequence::cpmg(4, 1.0).unwrap(),
            &[0.125, 0.375, 0.625, 0.875],
        );
    }

    #[test]
    fn cpmg1_is_spin_echo() {
        assert_positions(&PulseSequence::cpmg(1, 1.0).unwrap(), &[0.5]);
    }

    #[test]
    fn cpmg_cycle_layout() {
        // free t, plate, 2t, plate, 2t, plate, 2t, plate, t over 8t
        let t: f64 = 0.37;
        let mut x: f64 = 0.0;
        let mut layout = Vec::new();
        for gap in [t, 2.0 * t, 2.0 * t, 2.0 * t] {
            x += gap;
            layout.push(x);
        }
        assert!((x + t - 8.0 * t).abs() < 1e-15);
        let seq = PulseSequence::cpmg(4, 8.0 * t).unwrap();
        for (a, b) in seq.positions().iter().zip(&layout) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_pulses_is_error() {
        assert!(PulseSequence::cpmg(0, 1.0).is_err());
        assert!(PulseSequence::udd(0, 1.0).is_err());
        assert!(PulseSequence::pdd(0, 1.0).is_err());
        assert!(PulseSequence::cp(0, 1.0).is_err());
    }

    #[test]
    fn repeat_once_is_unchanged() {
        let base = PulseSequence::cpmg(4, 8.0).unwrap();
        assert_eq!(base.repeated_cycles(1).unwrap(), base);
        assert!(base.repeated_cycles(0).is_err());
    }

    #[test]
    fn repeat_twice_spacing() {
        let t = 1.0;
        let two = PulseSequence::cpmg(4, 8.0 * t)
            .unwrap()
            .repeated_cycles(2)
            .unwrap();
        assert_eq!(two.fiber_length(), 16.0 * t);
        let odd: Vec<f64> = (0..8).map(|i| (2 * i + 1) as f64 * t).collect();
        assert_positions(&two, &odd);
        // seam spacing 2t, so two cycles equal CPMG-8 over the doubled length
        assert_positions(&two, PulseSequence::cpmg(8, 16.0 * t).unwrap().positions());
    }

    #[test]
    fn udd_examples() {
        assert_positions(&PulseSequence::udd(1, 1.0).unwrap(), &[0.5]);
        assert_positions(&PulseSequence::udd(2, 1.0).unwrap(), &[0.25, 0.75]);
    }

    #[test]
    fn pdd_uniform_grid() {
        assert_positions(&PulseSequence::pdd(3, 1.0).unwrap(), &[0.25, 0.5, 0.75]);
    }

    #[test]
    fn new_validates_positions() {
        assert!(PulseSequence::custom(vec![0.0, 0.5], 1.0).is_err());
        assert!(PulseSequence::custom(vec![0.5, 1.0], 1.0).is_err());
        assert!(matches!(
            PulseSequence::custom(vec![0.5, 0.4], 1.0),
            Err(Error::Unsorted { .. })
        ));
        assert!(PulseSequence::custom(vec![0.2, 0.4], 1.0).is_ok());
        assert!(PulseSequence::none(0.0).is_err());
    }

    #[test]
    fn kind_round_trips_through_str() {
        for k in [
            SequenceKind::Cpmg,
            SequenceKind::Cp,
            SequenceKind::Pdd,
            SequenceKind::Udd,
            SequenceKind::Custom,
            SequenceKind::None,
        ] {
            assert_eq!(k.as_str().parse::<SequenceKind>().unwrap(), k);
        }
        assert!("XY4".parse::<SequenceKind>().is_err());
    }

    #[test]
    fn empty_sequence_is_free_dephasing() {
        let f = FiberProfile::constant(0.9, 5.0).unwrap();
        let u = build_propagator(&f, &PulseSequence::none(5.0).unwrap()).unwrap();
        let want = crate::jones::dephasing_propagator(4.5).unwrap();
        assert!(u.approx_eq_up_to_phase(&want, 1e-14));
    }

    #[test]
    fn cpmg4_constant_rate_is_identity() {
        let f = FiberProfile::constant(13.0, 8.0).unwrap();
        let u = build_propagator(&f, &PulseSequence::cpmg(4, 8.0).unwrap()).unwrap();
        assert!(u.approx_eq_up_to_phase(&Unitary2::identity(), 1e-12));
    }

    #[test]
    fn sequence_longer_than_profile_is_error() {
        let f = FiberProfile::constant(1.0, 4.0).unwrap();
        assert!(build_propagator(&f, &PulseSequence::cpmg(4, 5.0).unwrap()).is_err());
    }

    #[test]
    fn pulse_on_segment_boundary() {
        let f = FiberProfile::new(
            vec![
                Segment {
                    length: 1.0,
                    phase_rate: 2.0,
                },
                Segment {
                    length: 1.0,
                    phase_rate: 5.0,
                },
            ],
            2.0,
        )
        .unwrap();
        let seq = PulseSequence::custom(vec![1.0], 2.0).unwrap();
        assert!((residual_phase(&f, &seq).unwrap() - (2.0 - 5.0)).abs() < 1e-15);
        let d = JonesState::diagonal();
        let out = apply(&build_propagator(&f, &seq).unwrap(), &d);
        assert!((d.overlap(&out) - 0.5 * (1.0 + (-3.0f64).cos())).abs() < 1e-12);
    }

    #[test]
    fn unitarity_with_many_segments() {
        let p = NoiseParams {
            sigma_phase: 100.0,
            seed: 3,
            ..NoiseParams::default()
        };
        let f = sample_profile(&p, 100_000.0, 0).unwrap();
        assert!(f.segments().len() >= 99_000);
        let u = build_propagator(&f, &PulseSequence::cpmg(20_000, 100_000.0).unwrap()).unwrap();
        assert!(u.unitarity_error() <= 1e-11);
    }

    #[test]
    fn cp_perfect_plates_match_cpmg() {
        let p = NoiseParams {
            sigma_phase: 2.0,
            seed: 1,
            ..NoiseParams::default()
        };
        let f = sample_profile(&p, 8.0, 4).unwrap();
        let d = JonesState::diagonal();
        let a = apply(
            &build_propagator(&f, &PulseSequence::cpmg(8, 8.0).unwrap()).unwrap(),
            &d,
        );
        let b = apply(
            &build_propagator(&f, &PulseSequence::cp(8, 8.0).unwrap()).unwrap(),
            &d,
        );
        assert!((d.overlap(&a) - d.overlap(&b)).abs() < 1e-12);
    }

    #[test]
    fn cpmg_tolerates_over_rotation_better_than_cp() {
        let f = FiberProfile::constant(0.0, 8.0).unwrap();
        let e = PulseError {
            rotation: 0.1,
            axis_tilt: 0.0,
        };
        let d = JonesState::diagonal();
        let fid = |s: PulseSequence| {
            d.overlap(&apply(
                &build_propagator(&f, &s.with_pulse_error(e)).unwrap(),
                &d,
            ))
        };
        let cpmg = fid(PulseSequence::cpmg(16, 8.0).unwrap());
        let cp = fid(PulseSequence::cp(16, 8.0).unwrap());
        assert!((cpmg - 1.0).abs() < 1e-12, "cpmg {cpmg}");
        assert!(cp < 0.9, "cp {cp}");
    }

    fn arb_profile() -> impl Strategy<Value = FiberProfile> {
        (any::<u64>(), 0.0..0.5f64, 0.0..50.0f64, 1.0..20.0f64).prop_map(|(seed, sl, sp, l)| {
            let p = NoiseParams {
                mean_seg_len: 1.0,
                sigma_seg_len: sl,
                sigma_phase: sp,
                mean_phase: 0.3,
                seed,
            };
            sample_profile(&p, l, 0).unwrap()
        })
    }

    fn arb_sequence(l: f64) -> impl Strategy<Value = PulseSequence> {
        (0usize..5, 1usize..40).prop_map(move |(k, n)| match k {
            0 => PulseSequence::cpmg(n, l).unwrap(),
            1 => PulseSequence::cp(n, l).unwrap(),
            2 => PulseSequence::pdd(n, l).unwrap(),
            3 => PulseSequence::udd(n, l).unwrap(),
            _ => PulseSequence::none(l).unwrap(),
        })
    }

    proptest! {
        #[test]
        fn matches_scalar_oracle(
            (f, seq) in arb_profile().prop_flat_map(|f| {
                let l = f.total_length();
                (Just(f), arb_sequence(l))
            })
        ) {
            let u = build_propagator(&f, &seq).unwrap();
            prop_assert!(u.unitarity_error() <= 1e-11);
            let phi = residual_phase(&f, &seq).unwrap();
            let d = JonesState::diagonal();
            let fid = d.overlap(&apply(&u, &d));
            let expected = if seq.axis() == PulseAxis::Y && seq.len() % 2 == 1 {
                // odd count of y plates maps +45 to -45
                0.5 * (1.0 - phi.cos())
            } else {
                0.5 * (1.0 + phi.cos())
            };
            prop_assert!((fid - expected).abs() <= 1e-10, "fid {} expected {}", fid, expected);
            if seq.len() % 2 == 0 {
                prop_assert!(u.is_diagonal(1e-12));
                for s in [JonesState::horizontal(), JonesState::vertical()] {
                    prop_assert!((s.overlap(&apply(&u, &s)) - 1.0).abs() <= 1e-10);
                }
            }
        }

        #[test]
        fn cpmg_refocuses_constant_rate(beta in -200.0..200.0f64, n in 1usize..65, l in 0.5..100.0f64) {
            let f = FiberProfile::constant(beta, l).unwrap();
            let u = build_propagator(&f, &PulseSequence::cpmg(n, l).unwrap()).unwrap();
            let d = JonesState::diagonal();
            prop_assert!((d.overlap(&apply(&u, &d)) - 1.0).abs() <= 1e-10);
        }
    }
}
