use thiserror::Error;

/// Errors raised by the arc solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate geometry: arc-chord constant {constant:.3e} is below 1e-8")]
    DegenerateGeometry { constant: f64 },

    #[error("arc `{name}` is not arclength-parameterized: |X'({s})| = {speed}")]
    NotUnitSpeed { name: String, s: f64, speed: f64 },

    #[error("parameter {s} lies outside the arc domain [{a}, {b}]")]
    OutOfDomain { s: f64, a: f64, b: f64 },

    #[error("derivative of a basis function with exponent {exponent} is not available")]
    ForbiddenDerivative { exponent: f64 },

    #[error("partitions are not nested (coarse N = {coarse}, fine N = {fine})")]
    NonNested { coarse: usize, fine: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("quadrature did not converge: estimated error {estimate:.3e} after {subdivisions} subdivisions")]
    QuadratureNotConverged { estimate: f64, subdivisions: usize },

    #[error("matrix is singular to working precision at pivot {pivot}")]
    SingularMatrix { pivot: usize },

    #[error("point ({x}, {y}) lies within {distance:.3e} of the arc (guard {guard:.3e})")]
    TooCloseToArc {
        x: f64,
        y: f64,
        distance: f64,
        guard: f64,
    },

    #[error("no singular content to fit: field magnitude {magnitude:.3e} in window")]
    NoSingularContent { magnitude: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
