use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {op} of {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("data length {got} does not match {rows}x{cols}")]
    InvalidData {
        rows: usize,
        cols: usize,
        got: usize,
    },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("result dimension overflows usize")]
    Overflow,

    #[error("invalid Jordan structure: {0}")]
    InvalidStructure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Jacobi SVD did not reach the requested relative accuracy.
    #[error("singular value iteration did not converge after {sweeps} sweeps")]
    SvdNoConvergence { sweeps: usize, partial: Vec<f64> },

    /// No deflation in the active window `lo..=hi` within the iteration budget.
    #[error("QR iteration stalled on window {lo}..={hi} after {iterations} iterations")]
    SchurNoConvergence {
        lo: usize,
        hi: usize,
        iterations: usize,
    },

    #[error("ill-determined rank: accepted {accepted:e} vs rejected {rejected:e} (gap below {required:e})")]
    IllDeterminedRank {
        accepted: f64,
        rejected: f64,
        required: f64,
    },

    #[error("matrix is numerically singular")]
    Singular,

    #[error("zero eigenvalue: ratio test undefined")]
    ZeroEigenvalue,

    #[error("dimension {n} exceeds the oracle cap {cap}; use the closed form")]
    DimensionCap { n: usize, cap: usize },
}

impl Error {
    /// Errors caused by malformed input rather than by a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::NotSquare { .. }
                | Error::EmptyMatrix { .. }
                | Error::InvalidData { .. }
                | Error::NonFinite { .. }
                | Error::Parse { .. }
                | Error::Overflow
                | Error::InvalidStructure(_)
                | Error::InvalidArgument(_)
                | Error::DimensionCap { .. }
        )
    }

    /// Short machine-readable tag for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotSquare { .. } => "not_square",
            Error::EmptyMatrix { .. } => "empty_matrix",
            Error::InvalidData { .. } => "invalid_data",
            Error::NonFinite { .. } => "non_finite",
            Error::Parse { .. } => "parse",
            Error::Overflow => "overflow",
            Error::InvalidStructure(_) => "invalid_structure",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SvdNoConvergence { .. } => "svd_no_convergence",
            Error::SchurNoConvergence { .. } => "schur_no_convergence",
            Error::IllDeterminedRank { .. } => "ill_determined_rank",
            Error::Singular => "singular",
            Error::ZeroEigenvalue => "zero_eigenvalue",
            Error::DimensionCap { .. } => "dimension_cap",
        }
    }
}
