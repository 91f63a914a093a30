//! Spectral picture of dephasing under a pulse sequence.
//!
//! A sequence with plates at fractions `p_1 < ... < p_n` of the fiber length
//! has the filter function
//!
//! ```text
//! F(kL) = 1/2 | sum_{m=0}^{n} (-1)^m (e^{i kL p_{m+1}} - e^{i kL p_m}) |^2,   p_0 = 0, p_{n+1} = 1
//! ```
//!
//! and, for birefringence noise with power spectrum `S(k)`, the coherence
//! surviving a fiber of length `L` is
//!
//! ```text
//! W(L) = exp( -(1/pi) int_0^inf S(k) F(kL) / k^2 dk ).
//! ```
//!
//! The free-fiber case is the `n = 0` instance of the same formula,
//! `F = 2 sin^2(kL/2)`, with the same `1/pi` prefactor.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::sequence::PulseSequence;

/// Relative size of the quadrature error estimate, compared with the
/// exponent, at which `decoherence_w` reports failure.
pub const MAX_RELATIVE_ERROR: f64 = 1e-8;

/// Default upper integration limit is `DEFAULT_CUTOFF_KL / L`.
pub const DEFAULT_CUTOFF_KL: f64 = 200.0;

fn check_fractions(fractions: &[f64]) -> Result<()> {
    for (i, &p) in fractions.iter().enumerate() {
        finite("pulse fraction", p)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(
                "pulse fraction",
                format!("fraction {i} = {p} is not inside (0, 1)"),
            ));
        }
        if i > 0 && p <= fractions[i - 1] {
            return Err(Error::Unsorted { index: i, value: p });
        }
    }
    Ok(())
}

/// `(midpoint, width)` of each free interval `[p_m, p_{m+1}]`.
fn intervals(fractions: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
    let n = fractions.len();
    (0..=n).map(move |m| {
        let a = if m == 0 { 0.0 } else { fractions[m - 1] };
        let b = if m == n { 1.0 } else { fractions[m] };
        (0.5 * (a + b), b - a)
    })
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `F(u)/u^2`, finite at `u = 0`.
///
/// Uses `e^{iub} - e^{iua} = i u (b - a) e^{iu(a+b)/2} sinc(u(b - a)/2)`, so
/// no exponentials are subtracted and small `u` keeps full precision.
fn filter_over_u2_unchecked(fractions: &[f64], u: f64) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, (mid, width)) in intervals(fractions).enumerate() {
        let term = Complex64::from_polar(width * sinc(0.5 * u * width), u * mid);
        if m % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    0.5 * acc.norm_sqr()
}

/// Filter function of an arbitrary sequence given as fractions of `L`.
pub fn filter_general(fractions: &[f64], kl: f64) -> Result<f64> {
    check_fractions(fractions)?;
    finite("kL", kl)?;
    if kl < 0.0 {
        return Err(Error::invalid("kL", "must be >= 0"));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, (mid, width)) in intervals(fractions).enumerate() {
        // e^{i kl b} - e^{i kl a}
        let diff = Complex64::new(0.0, 2.0 * (0.5 * kl * width).sin())
            * Complex64::from_polar(1.0, kl * mid);
        if m % 2 == 0 {
            acc += diff;
        } else {
            acc -= diff;
        }
    }
    Ok(0.5 * acc.norm_sqr())
}

/// The four-pulse CPMG closed form `8 sin^4(kL/16) sin^2(kL/2) / cos^2(kL/4)`.
///
/// The zeros of `cos(kL/4)` are removable: `sin(kL/2) = 2 sin(kL/4) cos(kL/4)`,
/// so the expression equals `32 sin^4(kL/16) sin^2(kL/4)` everywhere.
pub fn filter_cpmg4_closed(kl: f64) -> f64 {
    32.0 * (kl / 16.0).sin().powi(4) * (kl / 4.0).sin().powi(2)
}

/// `8 sin^4(kL/16) sin^2(kL/2) / cos^2(kL/8)`, the even-n CPMG closed form
/// with `n = 4`. Singularities at zeros of `cos(kL/8)` are removed the same
/// way: the expression equals `128 sin^4(kL/16) sin^2(kL/8) cos^2(kL/4)`.
pub fn filter_cpmg4_cos8(kl: f64) -> f64 {
    128.0 * (kl / 16.0).sin().powi(4) * (kl / 8.0).sin().powi(2) * (kl / 4.0).cos().powi(2)
}

/// Which filter function to use.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    /// No plates, `F = 2 sin^2(kL/2)`.
    Free,
    /// Plates at the given fractions of `L`, evaluated with [`filter_general`].
    Fractions(Vec<f64>),
    /// [`filter_cpmg4_closed`], kept for comparison.
    Cpmg4Closed,
}

impl FilterSpec {
    pub fn fractions(fractions: Vec<f64>) -> Result<Self> {
        check_fractions(&fractions)?;
        Ok(if fractions.is_empty() {
            FilterSpec::Free
        } else {
            FilterSpec::Fractions(fractions)
        })
    }

    pub fn from_sequence(seq: &PulseSequence) -> Self {
        if seq.is_empty() {
            FilterSpec::Free
        } else {
            FilterSpec::Fractions(seq.fractions())
        }
    }

    pub fn cpmg(n_pulses: usize) -> Result<Self> {
        Ok(Self::from_sequence(&PulseSequence::cpmg(n_pulses, 1.0)?))
    }

    pub fn label(&self) -> String {
        match self {
            FilterSpec::Free => "free".into(),
            FilterSpec::Cpmg4Closed => "cpmg4-closed".into(),
            FilterSpec::Fractions(p) => format!("{}-pulse", p.len()),
        }
    }

    /// `F(u)` at `u = kL`.
    pub fn value(&self, u: f64) -> f64 {
        match self {
            FilterSpec::Free => 2.0 * (0.5 * u).sin().powi(2),
            FilterSpec::Fractions(p) => filter_over_u2_unchecked(p, u) * u * u,
            FilterSpec::Cpmg4Closed => filter_cpmg4_closed(u),
        }
    }

    /// `F(u)/u^2`, finite at 0.
    fn over_u2(&self, u: f64) -> f64 {
        match self {
            FilterSpec::Free => 0.5 * sinc(0.5 * u).powi(2),
            FilterSpec::Fractions(p) => filter_over_u2_unchecked(p, u),
            FilterSpec::Cpmg4Closed => {
                // 32 sin^4(u/16) sin^2(u/4) / u^2
                let s = sinc(u / 16.0);
                let t = sinc(u / 4.0);
                32.0 * (u / 16.0).powi(4) * s.powi(4) * t * t / 16.0
            }
        }
    }

    /// `F(u) = sum_i a_i cos(w_i u)`, as `(a_i, w_i)` with `w_i >= 0`.
    fn cosine_series(&self) -> Vec<(f64, f64)> {
        match self {
            FilterSpec::Free => vec![(1.0, 0.0), (-1.0, 1.0)],
            FilterSpec::Cpmg4Closed => vec![
                (6.0, 0.0),
                (-8.0, 0.125),
                (1.0, 0.25),
                (4.0, 0.375),
                (-6.0, 0.5),
                (4.0, 0.625),
                (-1.0, 0.75),
            ],
            FilterSpec::Fractions(p) => {
                // coefficients of e^{iu x_j}: -1 at 0, 2(-1)^{j-1} inside, (-1)^n at 1
                let n = p.len();
                let mut xs = Vec::with_capacity(n + 2);
                let mut cs = Vec::with_capacity(n + 2);
                xs.push(0.0);
                cs.push(-1.0);
                for (j, &x) in p.iter().enumerate() {
                    xs.push(x);
                    cs.push(if j % 2 == 0 { 2.0 } else { -2.0 });
                }
                xs.push(1.0);
                cs.push(if n % 2 == 0 { 1.0 } else { -1.0 });
                let mut terms = vec![(0.5 * cs.iter().map(|c| c * c).sum::<f64>(), 0.0)];
                for j in 0..xs.len() {
                    for l in (j + 1)..xs.len() {
                        terms.push((cs[j] * cs[l], xs[l] - xs[j]));
                    }
                }
                terms
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SpectralKind {
    White,
    Lorentzian,
    GaussianCorr,
    OneOverK,
}

impl SpectralKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectralKind::White => "WHITE",
            SpectralKind::Lorentzian => "LORENTZIAN",
            SpectralKind::GaussianCorr => "GAUSSIAN_CORR",
            SpectralKind::OneOverK => "ONE_OVER_K",
        }
    }
}

impl fmt::Display for SpectralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpectralKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "WHITE" => SpectralKind::White,
            "LORENTZIAN" => SpectralKind::Lorentzian,
            "GAUSSIAN_CORR" => SpectralKind::GaussianCorr,
            "ONE_OVER_K" => SpectralKind::OneOverK,
            other => {
                return Err(Error::invalid(
                    "spectral kind",
                    format!("unknown kind {other:?}"),
                ))
            }
        })
    }
}

/// Parametric power spectrum of the birefringence fluctuations.
///
/// | kind            | `S(k)`                          |
/// |-----------------|---------------------------------|
/// | `WHITE`         | `A`                             |
/// | `LORENTZIAN`    | `A l / (1 + (k l)^2)`           |
/// | `GAUSSIAN_CORR` | `A l exp(-(k l)^2 / 2)`         |
/// | `ONE_OVER_K`    | `A / max(k, k_floor)`           |
///
/// `LORENTZIAN` is the spectrum of exponentially correlated birefringence,
/// `C(x) = (A/2) exp(-|x|/l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralModel {
    pub kind: SpectralKind,
    pub amplitude: f64,
    pub correlation_scale: f64,
    /// Upper quadrature limit. `None` means `200 / L`.
    pub cutoff_k: Option<f64>,
    pub k_floor: f64,
}

impl SpectralModel {
    pub fn new(kind: SpectralKind, amplitude: f64, correlation_scale: f64) -> Result<Self> {
        let m = Self {
            kind,
            amplitude,
            correlation_scale,
            cutoff_k: None,
            k_floor: 1e-4,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn white(amplitude: f64) -> Result<Self> {
        Self::new(SpectralKind::White, amplitude, 1.0)
    }

    pub fn lorentzian(amplitude: f64, correlation_scale: f64) -> Result<Self> {
        Self::new(SpectralKind::Lorentzian, amplitude, correlation_scale)
    }

    pub fn with_cutoff(mut self, cutoff_k: f64) -> Result<Self> {
        self.cutoff_k = Some(cutoff_k);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        finite("amplitude", self.amplitude)?;
        finite("correlation_scale", self.correlation_scale)?;
        finite("k_floor", self.k_floor)?;
        if self.amplitude < 0.0 {
            return Err(Error::invalid("amplitude", "must be >= 0"));
        }
        if self.correlation_scale <= 0.0 {
            return Err(Error::invalid("correlation_scale", "must be > 0"));
        }
        if self.k_floor <= 0.0 {
            return Err(Error::invalid("k_floor", "must be > 0"));
        }
        if let Some(c) = self.cutoff_k {
            finite("cutoff_k", c)?;
            if c <= 0.0 {
                return Err(Error::invalid("cutoff_k", "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn density(&self, k: f64) -> f64 {
        let a = self.amplitude;
        let l = self.correlation_scale;
        match self.kind {
            SpectralKind::White => a,
            SpectralKind::Lorentzian => a * l / (1.0 + (k * l).powi(2)),
            SpectralKind::GaussianCorr => a * l * (-0.5 * (k * l).powi(2)).exp(),
            SpectralKind::OneOverK => a / k.max(self.k_floor),
        }
    }

    fn density_slope(&self, k: f64) -> f64 {
        let a = self.amplitude;
        let l = self.correlation_scale;
        match self.kind {
            SpectralKind::White => 0.0,
            SpectralKind::Lorentzian => -2.0 * a * l.powi(3) * k / (1.0 + (k * l).powi(2)).powi(2),
            SpectralKind::GaussianCorr => -l * l * k * self.density(k),
            SpectralKind::OneOverK => {
                if k > self.k_floor {
                    -a / (k * k)
                } else {
                    0.0
                }
            }
        }
    }

    /// `int_K^inf S(k) / k^2 dk`.
    fn tail_moment(&self, big_k: f64) -> f64 {
        let a = self.amplitude;
        let l = self.correlation_scale;
        match self.kind {
            SpectralKind::White => a / big_k,
            // int 1/(k^2 (1 + l^2 k^2)) = 1/K - l atan(1/(l K))
            SpectralKind::Lorentzian => a * l * (1.0 / big_k - l * (1.0 / (l * big_k)).atan()),
            SpectralKind::GaussianCorr => {
                let s = l / std::f64::consts::SQRT_2;
                a * l
                    * ((-(s * big_k).powi(2)).exp() / big_k - s * PI.sqrt() * libm::erfc(s * big_k))
            }
            SpectralKind::OneOverK => {
                let f = self.k_floor;
                if big_k >= f {
                    a / (2.0 * big_k * big_k)
                } else {
                    a / f * (1.0 / big_k - 1.0 / f) + a / (2.0 * f * f)
                }
            }
        }
    }
}

/// `S(k)` for `k >= 0`.
pub fn spectral_density(m: &SpectralModel, k: f64) -> f64 {
    m.density(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoherence {
    pub w: f64,
    pub exponent: f64,
    pub abs_error: f64,
    pub intervals: usize,
    pub cutoff_k: f64,
}

/// `W(L)` with the default quadrature tolerance.
pub fn decoherence_w(m: &SpectralModel, f: &FilterSpec, fiber_length: f64) -> Result<Decoherence> {
    decoherence_w_with(m, f, fiber_length, Tolerance::default())
}

/// `W(L)` by adaptive quadrature on `[0, K]` plus an asymptotic tail.
///
/// Above `K` the filter is written as a cosine series `sum a_i cos(w_i kL)`.
/// The constant term integrates against `S(k)/k^2` in closed form; each
/// oscillating term uses two orders of integration by parts, and the size of
/// the first omitted order is added to the error estimate. When no cutoff is
/// configured, `K` starts at `200/L` and doubles until that tail error is
/// negligible.
pub fn decoherence_w_with(
    m: &SpectralModel,
    f: &FilterSpec,
    fiber_length: f64,
    tol: Tolerance,
) -> Result<Decoherence> {
    m.validate()?;
    finite("fiber_length", fiber_length)?;
    if fiber_length <= 0.0 {
        return Err(Error::invalid("fiber_length", "must be > 0"));
    }
    if let FilterSpec::Fractions(p) = f {
        check_fractions(p)?;
    }
    if m.amplitude == 0.0 {
        return Ok(Decoherence {
            w: 1.0,
            exponent: 0.0,
            abs_error: 0.0,
            intervals: 0,
            cutoff_k: m.cutoff_k.unwrap_or(DEFAULT_CUTOFF_KL / fiber_length),
        });
    }

    let l = fiber_length;
    let series = f.cosine_series();
    let integrand = |k: f64| m.density(k) * l * l * f.over_u2(k * l);

    let mut big_k = m.cutoff_k.unwrap_or(DEFAULT_CUTOFF_KL / l);
    let mut lo_k = 0.0;
    let mut body = 0.0;
    let mut body_err = 0.0;
    let mut intervals = 0;
    for attempt in 0..16 {
        let mut points = vec![lo_k];
        if m.kind == SpectralKind::OneOverK && m.k_floor > lo_k && m.k_floor < big_k {
            points.push(m.k_floor);
        }
        // start from pieces about one filter period long
        let pieces = ((big_k - lo_k) * l / (2.0 * PI)).ceil().clamp(1.0, 4096.0) as usize;
        let start = *points.last().unwrap();
        for i in 1..=pieces {
            points.push(start + (big_k - start) * i as f64 / pieces as f64);
        }
        let est = integrate(integrand, &points, tol);
        body += est.value;
        body_err += est.abs_error;
        intervals += est.intervals;

        let (tail, tail_err) = tail_integral(m, &series, l, big_k);
        let exponent = (body + tail) / PI;
        let abs_error = (body_err + tail_err) / PI;
        let tail_ok = tail_err <= 1e-3 * MAX_RELATIVE_ERROR * (body + tail).abs();
        if m.cutoff_k.is_some() || tail_ok || attempt == 15 {
            if !exponent.is_finite()
                || abs_error.is_nan()
                || abs_error > MAX_RELATIVE_ERROR * exponent.abs()
            {
                return Err(Error::Quadrature {
                    value: exponent,
                    abs_error,
                    intervals,
                });
            }
            return Ok(Decoherence {
                w: (-exponent).exp(),
                exponent,
                abs_error,
                intervals,
                cutoff_k: big_k,
            });
        }
        lo_k = big_k;
        big_k *= 2.0;
    }
    unreachable!("loop returns on its last attempt")
}

/// `(int_K^inf S(k) F(kL)/k^2 dk, error bound)` from the cosine series of `F`.
fn tail_integral(m: &SpectralModel, series: &[(f64, f64)], l: f64, big_k: f64) -> (f64, f64) {
    let g = |k: f64| m.density(k) / (k * k);
    let g1 = |k: f64| m.density_slope(k) / (k * k) - 2.0 * m.density(k) / (k * k * k);
    let h = 1e-3 * big_k;
    let g2 = (g1(big_k + h) - g1(big_k - h)) / (2.0 * h);
    let (gk, g1k) = (g(big_k), g1(big_k));
    let mut value = 0.0;
    let mut err = 0.0;
    for &(a, w) in series {
        if a == 0.0 {
            continue;
        }
        if w == 0.0 {
            value += a * m.tail_moment(big_k);
            continue;
        }
        let omega = w * l;
        let (s, c) = (big_k * omega).sin_cos();
        value += a * (-gk * s / omega - g1k * c / (omega * omega));
        err += a.abs() * g2.abs() / omega.powi(3);
    }
    (value, err)
}

/// `(L, W)` rows over a grid of fiber lengths.
pub fn w_curve(m: &SpectralModel, f: &FilterSpec, lengths: &[f64]) -> Result<Vec<(f64, f64)>> {
    lengths
        .iter()
        .map(|&l| decoherence_w(m, f, l).map(|d| (l, d.w)))
        .collect()
}

/// One row of the closed-form audit table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditRow {
    pub kl: f64,
    pub general: f64,
    pub closed_form: f64,
    pub closed_form_cos8: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
}

/// Compares [`filter_general`] for CPMG-4 against the closed forms at
/// `kL = j pi/8`, `j = 1..=n_points`. The grid contains every zero of
/// `cos(kL/4)` and `cos(kL/8)` in range.
pub fn cpmg4_audit(n_points: usize) -> Vec<AuditRow> {
    let fractions = [0.125, 0.375, 0.625, 0.875];
    (1..=n_points)
        .map(|j| {
            let kl = j as f64 * PI / 8.0;
            let general = filter_general(&fractions, kl).expect("fixed fractions are valid");
            let closed_form = filter_cpmg4_closed(kl);
            let abs_diff = (general - closed_form).abs();
            let scale = general.abs().max(closed_form.abs());
            AuditRow {
                kl,
                general,
                closed_form,
                closed_form_cos8: filter_cpmg4_cos8(kl),
                abs_diff,
                rel_diff: if scale > 0.0 { abs_diff / scale } else { 0.0 },
            }
        })
        .collect()
}
