use thiserror::Error;

#[derive(Debug, Error)]
pub enum KineticError {
    #[error("hermiticity violation at {what}: max |A - A^dagger| = {deviation:e}")]
    NotHermitian { what: String, deviation: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("missing correlation entry ({alpha}, {beta})")]
    MissingCorrelation { alpha: String, beta: String },

    #[error("invalid exponential sum: {0}")]
    InvalidExpSum(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("divergent-after-cancellation in group {group}: pole residue {residue:e} (relative)")]
    Divergent { group: String, residue: f64 },

    #[error("time arguments {0} are not nested; the pairing has no definite sign")]
    NonNestedTimes(String),

    #[error("order {0} requested before its prerequisites were available")]
    MissingOrder(usize),

    #[error("duplicate order {0} in generator bundle")]
    DuplicateOrder(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("time grid is not ascending")]
    GridNotAscending,

    #[error("total Hilbert dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl From<ndarray_linalg::error::LinalgError> for KineticError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        KineticError::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, KineticError>;
