use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported dimension {dim} for {what}")]
    UnsupportedDimension { dim: usize, what: &'static str },

    #[error("facet normal {normal:?} is not primitive (gcd {gcd}); divide the normal and offset by {gcd}")]
    NonPrimitiveNormal { normal: Vec<i64>, gcd: i64 },

    #[error("invalid boundary measure: {0}")]
    InvalidMeasure(String),

    #[error("polytope has non-integral vertex {0}; scale the polarisation so that all vertices are lattice points")]
    NonIntegralVertex(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("convexity violation at {location:?}: Hessian is not positive definite")]
    ConvexityViolation { location: Vec<f64> },

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Futaki invariant is non-zero ({0}); no constant scalar curvature metric exists")]
    NonZeroFutaki(String),
}
