use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cell dimensions must be positive (d = {d}, eta = {eta})")]
    NonPositiveDimension { d: f64, eta: f64 },
    #[error(
        "lattice orientation violated: d = {d} must be at least |e2| = {e2}; rotate the lattice so the longest side lies along x"
    )]
    OrientationViolation { d: f64, e2: f64 },
    #[error("target coincides with a source")]
    CoincidentPoints,
    #[error("the modified kernels need beta > 0 (use the unmodified PDE for beta = 0)")]
    MissingBeta,
    #[error("invalid multipole order {0}")]
    InvalidOrder(i64),
    #[error("order {0} outside the supported range")]
    OrderOutOfRange(usize),
    #[error("point {t} lies outside the interpolation interval [-{half}, {half}]")]
    OutOfInterval { t: f64, half: f64 },
    #[error("requested precision {0} outside [1e-13, 1e-3]")]
    PrecisionOutOfRange(f64),
    #[error("quadrature rule does not match the requested operator: {0}")]
    RuleMismatch(String),
    #[error("operation needs a doubly periodic cell")]
    NotDoubly,
    #[error("strengths are not neutral (sum = {0:e}); this periodizer needs zero net strength")]
    NotNeutral(f64),
    #[error("normal {index} is not a unit vector")]
    NonUnitNormal { index: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("interpolation grid of {nodes} nodes cannot reach precision {eps:e}")]
    GridTooCoarse { nodes: usize, eps: f64 },
    #[error("lattice sum not converged: partial sums differ by {diff:e} (tolerance {tol:e})")]
    NotConverged { diff: f64, tol: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unsupported combination: {0}")]
    Unsupported(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
