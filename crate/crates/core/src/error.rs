use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value for {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("interval [{a}, {b}] is outside [0, {length}] or reversed")]
    Interval { a: f64, b: f64, length: f64 },

    #[error("positions must be strictly increasing (index {index}: {value})")]
    Unsorted { index: usize, value: f64 },

    #[error(
        "quadrature did not converge: estimated error {abs_error:.3e} on exponent {value:.6e} \
         after {intervals} subintervals"
    )]
    Quadrature {
        value: f64,
        abs_error: f64,
        intervals: usize,
    },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical routine rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Quadrature { .. })
    }
}

pub(crate) fn finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { what, value })
    }
}
