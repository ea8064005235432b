use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("unknown action `{0}`")]
    UnknownAction(String),

    #[error("state {point:?} lies outside the system domain")]
    OutsideDomain { point: Vec<f64> },

    /// No sample's conditioning variable lies within kernel reach of the query.
    #[error("kernel weight sum underflow at x = {point:?}; data too sparse there")]
    DenominatorUnderflow { point: Vec<f64> },

    #[error("{operation} requires the gaussian kernel, got {family}")]
    UnsupportedKernel {
        operation: &'static str,
        family: &'static str,
    },

    #[error("zero sample variance in dimension {0}")]
    ZeroVariance(usize),

    #[error("no samples")]
    NoSamples,

    #[error("domain width in dimension {dim} is not an integer multiple of delta = {delta}")]
    NonDivisibleGrid { dim: usize, delta: f64 },

    #[error("proposition `{0}` is reserved for the out-of-domain sink")]
    ReservedLabel(String),

    #[error("sample budget exceeded: {required} samples required, budget is {budget}")]
    BudgetExceeded { required: u64, budget: u64 },

    #[error("infeasible interval row (state {state}, action {action}): {reason}")]
    InfeasibleRow {
        state: usize,
        action: usize,
        reason: String,
    },

    #[error("IMDP invariant violated: {0}")]
    InvalidImdp(String),

    #[error("undeclared atomic proposition `{0}`")]
    UndeclaredProposition(String),

    #[error("formula parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("covariance is not diagonal; rotate the coordinates so the noise is axis-aligned")]
    NonDiagonalCovariance,

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("model-based abstraction is not available for this system: {0}")]
    NoClosedForm(&'static str),

    #[error("verification result carries no action records")]
    MissingStrategy,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by the numbers themselves (sparse data, infeasible
    /// intervals, indefinite matrices) rather than by malformed inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DenominatorUnderflow { .. }
                | Error::InfeasibleRow { .. }
                | Error::NotPositiveDefinite
                | Error::ZeroVariance(_)
        )
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}
