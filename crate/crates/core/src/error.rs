use thiserror::Error;

/// Errors raised by the geometric and metric layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate in {what}")]
    NonFinite { what: &'static str },
    #[error("singular set must contain at least one primitive")]
    EmptySingularSet,
    #[error("invalid primitive #{index}: {reason}")]
    InvalidPrimitive { index: usize, reason: String },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("point {point:?} lies outside the computation window")]
    OutsideWindow { point: Vec<f64> },
    #[error("polyline needs at least two vertices")]
    ShortPolyline,
    #[error("unsupported dimension {0}: the grid solver handles n = 2 or n = 3")]
    UnsupportedDimension(usize),
    #[error("path length is not finite")]
    NonFiniteLength,
    #[error("quadrature failed to converge (estimate {estimate}, error {error})")]
    Quadrature { estimate: f64, error: f64 },
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("stencil invalid: {0}")]
    Stencil(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
