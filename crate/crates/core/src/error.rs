use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("derivative order {order} exceeds the supported maximum {max}")]
    DerivativeOrder { order: usize, max: usize },

    #[error("kernel evaluated at coincident points")]
    CoincidentPoints,

    #[error("field must be scalar, got {0} components")]
    NotScalar(usize),

    #[error("field is not flagged zero-mean")]
    MissingZeroMean,

    #[error("field is missing its {0} callback")]
    MissingDerivative(&'static str),

    #[error("domain is not star-shaped with respect to the declared ball: {0}")]
    NotStarShaped(String),

    #[error("operation requires a rectangle or box domain")]
    NotTensorDomain,

    #[error("{solver} did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("gram matrix is singular")]
    SingularGram,

    #[error("spurious pressure mode detected: checkerboard energy fraction {0:.3}")]
    SpuriousMode(f64),

    #[error("tensor is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
