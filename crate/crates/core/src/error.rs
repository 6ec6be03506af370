use thiserror::Error;

/// Errors raised by the rate and entropy routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// An eigen-solver failed, or an operator expected to be positive was not.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The fast block path only handles real-symmetric qubit states.
    #[error("complex-valued state passed to a real-only routine")]
    ComplexState,

    /// A dense construction would exceed its dimension cap.
    #[error("dimension {dimension} exceeds cap {cap}")]
    DimensionCap { dimension: usize, cap: usize },

    /// A combinatorial enumeration would exceed its budget.
    #[error("enumeration of {required} classes exceeds budget {budget}")]
    Budget { required: u128, budget: u128 },

    /// Root finding was called on an interval without a sign change.
    #[error("invalid bracket [{lo}, {hi}]: rate values {rate_lo:e} and {rate_hi:e} do not change sign")]
    InvalidBracket {
        lo: f64,
        hi: f64,
        rate_lo: f64,
        rate_hi: f64,
    },
}

impl Error {
    /// Whether this error reflects bad input (as opposed to a numerical breakdown).
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::ComplexState | Error::DimensionCap { .. } | Error::Budget { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(Error::Domain(format!("{name} = {x} is not in [0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_range(name: &str, x: f64, lo: f64, hi: f64) -> Result<()> {
    if x.is_nan() || x < lo || x > hi {
        return Err(Error::Domain(format!("{name} = {x} is not in [{lo}, {hi}]")));
    }
    Ok(())
}
