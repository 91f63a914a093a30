//! Random piecewise-constant birefringence along the fiber.
//!
//! The fiber is a concatenation of segments with random lengths `dL`. Inside
//! a segment the birefringent phase accumulates at a constant rate. Lengths
//! are dimensionless, so one model covers any physical fiber scale once
//! `mean_seg_len` is mapped to a physical length.
//!
//! Per segment the relative phase is `beta * dL / <dL>`, where
//! `beta ~ N(mean_phase, sigma_phase^2)` is the phase picked up over a
//! segment of mean length. The rate inside the segment is then
//! `beta / <dL>`, so a fiber with fixed birefringence (`sigma_phase = 0`)
//! has a constant rate regardless of how the segment lengths fluctuate.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};
use crate::rng::stream_rng;

/// Upper bound on segments per profile, guards against `fiber_length / mean_seg_len` blowups.
pub const MAX_SEGMENTS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Mean segment length `<dL>`.
    pub mean_seg_len: f64,
    /// Standard deviation of the segment length.
    pub sigma_seg_len: f64,
    /// Standard deviation of the phase over a mean-length segment, radians.
    pub sigma_phase: f64,
    /// Mean of the phase over a mean-length segment, radians.
    pub mean_phase: f64,
    pub seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            mean_seg_len: 1.0,
            sigma_seg_len: 0.3,
            sigma_phase: 1.0,
            mean_phase: 0.0,
            seed: 0,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        finite("mean_seg_len", self.mean_seg_len)?;
        finite("sigma_seg_len", self.sigma_seg_len)?;
        finite("sigma_phase", self.sigma_phase)?;
        finite("mean_phase", self.mean_phase)?;
        if self.mean_seg_len <= 0.0 {
            return Err(Error::invalid("mean_seg_len", "must be > 0"));
        }
        if self.sigma_seg_len < 0.0 {
            return Err(Error::invalid("sigma_seg_len", "must be >= 0"));
        }
        if self.sigma_phase < 0.0 {
            return Err(Error::invalid("sigma_phase", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub length: f64,
    /// Relative phase per unit length, radians.
    pub phase_rate: f64,
}

/// One random realization of the fiber. Segments start at 0 and the last
/// one may overhang `total_length`; integration stops at `total_length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct FiberProfile {
    segments: Vec<Segment>,
    total_length: f64,
    starts: Vec<f64>,
    phase_before: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileRepr {
    total_length: f64,
    segments: Vec<Segment>,
}

impl TryFrom<ProfileRepr> for FiberProfile {
    type Error = Error;

    fn try_from(r: ProfileRepr) -> Result<Self> {
        FiberProfile::new(r.segments, r.total_length)
    }
}

impl From<FiberProfile> for ProfileRepr {
    fn from(p: FiberProfile) -> Self {
        ProfileRepr {
            total_length: p.total_length,
            segments: p.segments,
        }
    }
}

impl FiberProfile {
    pub fn new(segments: Vec<Segment>, total_length: f64) -> Result<Self> {
        finite("total_length", total_length)?;
        if total_length <= 0.0 {
            return Err(Error::invalid("total_length", "must be > 0"));
        }
        let mut starts = Vec::with_capacity(segments.len());
        let mut phase_before = Vec::with_capacity(segments.len());
        let mut pos = 0.0;
        let mut phase = 0.0;
        for (i, s) in segments.iter().enumerate() {
            finite("segment length", s.length)?;
            finite("segment phase_rate", s.phase_rate)?;
            if s.length <= 0.0 {
                return Err(Error::invalid(
                    "segment length",
                    format!("segment {i} has length {} <= 0", s.length),
                ));
            }
            starts.push(pos);
            phase_before.push(phase);
            pos += s.length;
            phase += s.length * s.phase_rate;
        }
        if pos < total_length {
            return Err(Error::invalid(
                "profile",
                format!("segments cover {pos} < total_length {total_length}"),
            ));
        }
        Ok(Self {
            segments,
            total_length,
            starts,
            phase_before,
        })
    }

    /// A single segment of constant phase rate covering `[0, length]`.
    pub fn constant(phase_rate: f64, length: f64) -> Result<Self> {
        Self::new(vec![Segment { length, phase_rate }], length)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Positions where segments begin, starting with 0.
    pub fn boundaries(&self) -> &[f64] {
        &self.starts
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::invalid("profile JSON", e.to_string()))
    }

    fn segment_index(&self, x: f64) -> usize {
        self.starts.partition_point(|&s| s <= x).saturating_sub(1)
    }

    /// Phase integrated from 0 to `x`.
    fn cumulative(&self, idx: usize, x: f64) -> f64 {
        self.phase_before[idx] + self.segments[idx].phase_rate * (x - self.starts[idx])
    }

    /// Integral of the phase rate over `[a, b]`.
    pub fn accumulated_phase(&self, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0 && a <= b && b <= self.total_length) {
            return Err(Error::Interval {
                a,
                b,
                length: self.total_length,
            });
        }
        Ok(self.phase_between(a, b))
    }

    #[inline]
    pub(crate) fn phase_between(&self, a: f64, b: f64) -> f64 {
        let ia = self.segment_index(a);
        let ib = self.segment_index(b);
        if ia == ib {
            self.segments[ia].phase_rate * (b - a)
        } else {
            self.cumulative(ib, b) - self.cumulative(ia, a)
        }
    }

    /// Net relative phase with a sign flip at every interior boundary:
    /// `sum_m (-1)^m phase(x_m, x_{m+1})`. This is the phase left over after
    /// instantaneous flip pulses at `boundaries[1..len-1]`.
    pub fn signed_phase(&self, boundaries: &[f64]) -> Result<f64> {
        if boundaries.len() < 2 {
            return Err(Error::invalid("boundaries", "need at least two positions"));
        }
        for (i, w) in boundaries.windows(2).enumerate() {
            if w[1].is_nan() || w[0].is_nan() || w[1] < w[0] {
                return Err(Error::Unsorted {
                    index: i + 1,
                    value: w[1],
                });
            }
        }
        let mut total = 0.0;
        for (m, w) in boundaries.windows(2).enumerate() {
            let part = self.accumulated_phase(w[0], w[1])?;
            if m % 2 == 0 {
                total += part;
            } else {
                total -= part;
            }
        }
        Ok(total)
    }
}

/// Draws a random profile covering `fiber_length`, reproducible from
/// `(p.seed, stream_index)`.
///
/// Segment lengths are Gaussian, redrawn until positive. Segments are
/// appended until they cover the fiber.
pub fn sample_profile(
    p: &NoiseParams,
    fiber_length: f64,
    stream_index: u64,
) -> Result<FiberProfile> {
    p.validate()?;
    finite("fiber_length", fiber_length)?;
    if fiber_length <= 0.0 {
        return Err(Error::invalid("fiber_length", "must be > 0"));
    }
    let expected = fiber_length / p.mean_seg_len;
    if expected > MAX_SEGMENTS as f64 {
        return Err(Error::invalid(
            "fiber_length",
            format!("needs ~{expected:.3e} segments, limit is {MAX_SEGMENTS}"),
        ));
    }

    let mut rng = stream_rng(p.seed, stream_index);
    let mut segments = Vec::with_capacity(expected.ceil() as usize + 4);
    let mut covered = 0.0;
    while covered < fiber_length {
        let length = loop {
            let z: f64 = StandardNormal.sample(&mut rng);
            let l = p.mean_seg_len + p.sigma_seg_len * z;
            if l > 0.0 {
                break l;
            }
        };
        let z: f64 = StandardNormal.sample(&mut rng);
        let beta = p.mean_phase + p.sigma_phase * z;
        segments.push(Segment {
            length,
            phase_rate: beta / p.mean_seg_len,
        });
        covered += length;
    }
    FiberProfile::new(segments, fiber_length)
}
