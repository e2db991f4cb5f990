use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument lies outside the range an implementation supports.
    #[error("argument outside supported range: {0}")]
    Range(String),

    /// An iterative method ran out of budget before meeting its tolerance.
    #[error("{what} did not converge (best estimate {estimate:e}, error bound {error_bound:e})")]
    Convergence {
        what: String,
        estimate: f64,
        error_bound: f64,
    },

    /// A root finder was handed an interval without a sign change.
    #[error("root not bracketed: g({lo}) = {g_lo:e}, g({hi}) = {g_hi:e}")]
    Bracketing {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },

    /// Data too degenerate for the requested estimator (singular scatter,
    /// points concentrated on a subspace).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// Several observations coincide with the estimated location.
    #[error("observation {index} is a repeated observation at the estimated location")]
    CoincidentObservation { index: usize },

    /// A model or configuration violates its construction invariants.
    #[error("invalid model: {0}")]
    Model(String),
}

impl Error {
    /// Whether the error stems from degenerate data rather than bad input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::Degenerate(_) | Error::CoincidentObservation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
