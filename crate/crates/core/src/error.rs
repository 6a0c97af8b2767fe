use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the region where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Schools or portfolio entries are not in the required order.
    #[error("ordering error: {0}")]
    Ordering(String),

    /// A finite school list whose admissions are not threshold-correlated.
    #[error("unsupported correlation: school {index} has v = {v} but 1 - p = {one_minus_p}")]
    UnsupportedCorrelation {
        index: usize,
        v: f64,
        one_minus_p: f64,
    },

    /// The shooting scan found no valid critical point. `grid` holds the
    /// scanned `(bottom school, boundary mismatch)` pairs.
    #[error("solver failure for k = {k}, gamma = {gamma}: {reason} ({} grid points scanned)", grid.len())]
    SolverFailure {
        k: usize,
        gamma: f64,
        reason: String,
        grid: Vec<(f64, f64)>,
    },

    /// The requested enumeration exceeds the work budget.
    #[error("resource error: {0}")]
    Resource(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
