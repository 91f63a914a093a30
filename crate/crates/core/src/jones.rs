//! Two-level polarization algebra in the (H, V) Jones basis.
//!
//! A polarization qubit is a normalized Jones vector; propagation through a
//! fiber piece or a waveplate is a 2x2 unitary; the ensemble output of many
//! random fibers is a 2x2 density matrix. Everything here is exact double
//! precision arithmetic on `Complex64`.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A pure polarization state `amp_h |H> + amp_v |V>`, always normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesState {
    amp_h: Complex64,
    amp_v: Complex64,
}

impl JonesState {
    /// Builds a state from raw amplitudes, normalizing them.
    pub fn new(amp_h: Complex64, amp_v: Complex64) -> Result<Self> {
        for z in [amp_h, amp_v] {
            finite("Jones amplitude", z.re)?;
            finite("Jones amplitude", z.im)?;
        }
        let norm = (amp_h.norm_sqr() + amp_v.norm_sqr()).sqrt();
        if norm < 1e-150 {
            return Err(Error::invalid("Jones state", "zero vector"));
        }
        Ok(Self {
            amp_h: amp_h / norm,
            amp_v: amp_v / norm,
        })
    }

    pub fn horizontal() -> Self {
        Self {
            amp_h: ONE,
            amp_v: ZERO,
        }
    }

    pub fn vertical() -> Self {
        Self {
            amp_h: ZERO,
            amp_v: ONE,
        }
    }

    /// `(|H> + |V>)/sqrt(2)`, the +45 degree linear polarization.
    pub fn diagonal() -> Self {
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { amp_h: a, amp_v: a }
    }

    /// `(|H> - |V>)/sqrt(2)`, the -45 degree linear polarization.
    pub fn antidiagonal() -> Self {
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            amp_h: a,
            amp_v: -a,
        }
    }

    pub fn amp_h(&self) -> Complex64 {
        self.amp_h
    }

    pub fn amp_v(&self) -> Complex64 {
        self.amp_v
    }

    pub fn norm(&self) -> f64 {
        (self.amp_h.norm_sqr() + self.amp_v.norm_sqr()).sqrt()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &JonesState) -> Complex64 {
        self.amp_h.conj() * other.amp_h + self.amp_v.conj() * other.amp_v
    }

    /// Multiplies by a global phase `e^{i theta}`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let p = Complex64::from_polar(1.0, theta);
        Self {
            amp_h: self.amp_h * p,
            amp_v: self.amp_v * p,
        }
    }

    /// Pure-state fidelity `|<self|other>|^2`.
    pub fn overlap(&self, other: &JonesState) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// A 2x2 complex matrix that is unitary up to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    m: [[Complex64; 2]; 2],
}

impl Unitary2 {
    pub fn identity() -> Self {
        Self {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    /// Checks `U^dagger U = I` within `1e-10` before accepting the entries.
    pub fn from_rows(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let u = Self { m };
        let err = u.unitarity_error();
        if err.is_nan() || err > 1e-10 {
            return Err(Error::invalid(
                "unitary",
                format!("U^dagger U deviates from identity by {err:.3e}"),
            ));
        }
        Ok(u)
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        let m = self.m;
        Self {
            m: [
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ],
        }
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Largest entrywise deviation of `U^dagger U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint() * *self;
        let id = Self::identity();
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((p.m[r][c] - id.m[r][c]).norm());
            }
        }
        worst
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.m[0][1].norm() <= tol && self.m[1][0].norm() <= tol
    }

    /// Equality up to a global phase, judged entrywise against `tol`.
    pub fn approx_eq_up_to_phase(&self, other: &Unitary2, tol: f64) -> bool {
        // phase = <other, self> / |<other, self>| in the Hilbert-Schmidt sense
        let mut hs = ZERO;
        for r in 0..2 {
            for c in 0..2 {
                hs += other.m[r][c].conj() * self.m[r][c];
            }
        }
        if hs.norm() == 0.0 {
            return false;
        }
        let phase = hs / hs.norm();
        (0..2).all(|r| (0..2).all(|c| (self.m[r][c] - phase * other.m[r][c]).norm() <= tol))
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: Unitary2) -> Unitary2 {
        let a = self.m;
        let b = rhs.m;
        Unitary2 {
            m: [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ],
        }
    }
}

impl fmt::Display for Unitary2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]
        )
    }
}

/// Hermitian, unit-trace 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    m: [[Complex64; 2]; 2],
}

impl DensityMatrix2 {
    /// `|psi><psi|`
    pub fn pure(psi: &JonesState) -> Self {
        let a = [psi.amp_h, psi.amp_v];
        let mut m = [[ZERO; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] = a[r] * a[c].conj();
            }
        }
        Self { m }
    }

    pub fn maximally_mixed() -> Self {
        let half = Complex64::new(0.5, 0.0);
        Self {
            m: [[half, ZERO], [ZERO, half]],
        }
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &DensityMatrix2, w: f64) -> Self {
        let m = std::array::from_fn(|r| {
            std::array::from_fn(|c| self.m[r][c] * w + other.m[r][c] * (1.0 - w))
        });
        Self { m }
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn trace(&self) -> f64 {
        (self.m[0][0] + self.m[1][1]).re
    }

    /// Eigenvalues in ascending order, from the Hermitian part.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = 0.5 * (self.m[0][1] + self.m[1][0].conj());
        let mean = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - disc, mean + disc]
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.m[r][c] - self.m[c][r].conj()).norm());
            }
        }
        worst
    }

    /// Hermitian within 1e-12, trace 1 within 1e-10, eigenvalues >= -1e-10.
    pub fn is_valid(&self) -> bool {
        self.hermiticity_error() <= 1e-12
            && (self.trace() - 1.0).abs() <= 1e-10
            && self.eigenvalues()[0] >= -1e-10
    }

    /// `<psi|rho|psi>`
    pub fn expectation(&self, psi: &JonesState) -> Complex64 {
        let a = [psi.amp_h, psi.amp_v];
        let mut acc = ZERO;
        for r in 0..2 {
            for c in 0..2 {
                acc += a[r].conj() * self.m[r][c] * a[c];
            }
        }
        acc
    }
}

/// Free propagation with relative phase `delta_phi = phi_H - phi_V`,
/// split symmetrically as `diag(e^{+i delta_phi/2}, e^{-i delta_phi/2})`.
pub fn dephasing_propagator(delta_phi: f64) -> Result<Unitary2> {
    finite("dephasing phase", delta_phi)?;
    Ok(diagonal_phase(delta_phi))
}

#[inline]
pub(crate) fn diagonal_phase(delta_phi: f64) -> Unitary2 {
    let (s, c) = (0.5 * delta_phi).sin_cos();
    Unitary2 {
        m: [[Complex64::new(c, s), ZERO], [ZERO, Complex64::new(c, -s)]],
    }
}

/// Ideal half-wave plate in the diagonal basis: `exp(-i pi/2 sigma_x) = -i sigma_x`.
pub fn pauli_x_pulse() -> Unitary2 {
    Unitary2 {
        m: [[ZERO, -I], [-I, ZERO]],
    }
}

/// `exp(-i pi/2 sigma_y) = -i sigma_y`.
pub fn pauli_y_pulse() -> Unitary2 {
    Unitary2 {
        m: [[ZERO, -ONE], [ONE, ZERO]],
    }
}

/// Rotation by `angle` about the equatorial axis `cos(axis) x + sin(axis) y`:
/// `cos(angle/2) I - i sin(angle/2) (cos(axis) sigma_x + sin(axis) sigma_y)`.
pub fn equatorial_rotation(angle: f64, axis: f64) -> Unitary2 {
    let (s, c) = (0.5 * angle).sin_cos();
    let (sa, ca) = axis.sin_cos();
    // -i s (ca sx + sa sy): off-diagonals -i s (ca - i sa) and -i s (ca + i sa)
    let upper = -I * s * Complex64::new(ca, -sa);
    let lower = -I * s * Complex64::new(ca, sa);
    Unitary2 {
        m: [
            [Complex64::new(c, 0.0), upper],
            [lower, Complex64::new(c, 0.0)],
        ],
    }
}

/// `U s`, renormalized to absorb rounding drift.
pub fn apply(u: &Unitary2, s: &JonesState) -> JonesState {
    let h = u.m[0][0] * s.amp_h + u.m[0][1] * s.amp_v;
    let v = u.m[1][0] * s.amp_h + u.m[1][1] * s.amp_v;
    let norm = (h.norm_sqr() + v.norm_sqr()).sqrt();
    JonesState {
        amp_h: h / norm,
        amp_v: v / norm,
    }
}

/// `|<psi_in|rho|psi_in>|`.
pub fn fidelity(psi_in: &JonesState, rho: &DensityMatrix2) -> f64 {
    rho.expectation(psi_in).norm().min(1.0)
}

/// Running mean of projectors: `rho_acc` holds the mean of the first `n - 1`
/// states, the result holds the mean of `n` states including `psi`.
pub fn accumulate(rho_acc: &DensityMatrix2, psi: &JonesState, n: u64) -> Result<DensityMatrix2> {
    if n == 0 {
        return Err(Error::invalid("ensemble count", "n must be at least 1"));
    }
    let proj = DensityMatrix2::pure(psi);
    if n == 1 {
        return Ok(proj);
    }
    let w = 1.0 / n as f64;
    Ok(proj.mix(rho_acc, w))
}
