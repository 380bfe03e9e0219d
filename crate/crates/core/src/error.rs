use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spline order must be in 1..={max}, got {k}")]
    InvalidOrder { k: usize, max: usize },

    #[error("breakpoints must be strictly increasing (violated at index {index})")]
    NonMonotoneBreaks { index: usize },

    #[error("knot vector must be nondecreasing (violated at index {index})")]
    NonMonotoneKnots { index: usize },

    #[error("multiplicity {mult} at breakpoint {index} is outside 1..={k}")]
    MultiplicityOutOfRange { index: usize, mult: usize, k: usize },

    #[error("endpoint multiplicity must be exactly {k}")]
    EndpointMultiplicity { k: usize },

    #[error("empty interval: a = {a} must be less than b = {b}")]
    EmptyInterval { a: f64, b: f64 },

    #[error("geometric ratio must be positive and finite, got {0}")]
    InvalidRatio(f64),

    #[error("partition needs at least one interval")]
    ZeroIntervals,

    #[error("dyadic partition needs a power-of-two interval count, got {0}")]
    NotDyadic(usize),

    #[error("generated breakpoints collapsed (interval {index} has zero length)")]
    DegeneratePartition { index: usize },

    #[error("index ({i}, {j}) out of range for dimension {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },

    #[error("x = {x} lies outside [{a}, {b}]")]
    OutOfDomain { x: f64, a: f64, b: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite (pivot {pivot} at row {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("inverse asymmetry {rel:e} at ({i}, {j}) exceeds {limit:e}")]
    AsymmetricInverse { i: usize, j: usize, rel: f64, limit: f64 },

    #[error("quadrature did not converge on [{lo}, {hi}] (error estimate {estimate:e})")]
    QuadratureNonConvergence { lo: f64, hi: f64, estimate: f64 },

    #[error("singularity at {point} with exponent {exponent} is not integrable")]
    NonIntegrableMarker { point: f64, exponent: f64 },

    #[error("unknown test function '{0}'")]
    UnknownFunction(String),

    #[error("invalid partition spec '{spec}': {reason}")]
    InvalidPartitionSpec { spec: String, reason: String },

    #[error("malformed knot file at line {line}: {reason}")]
    KnotFormat { line: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of the numerical machinery (factorization, quadrature,
    /// symmetry) as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::AsymmetricInverse { .. }
                | Error::QuadratureNonConvergence { .. }
        )
    }
}
