use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReflectionError {
    #[error("root {index} has zero length")]
    ZeroRoot { index: usize },
    #[error("root {index} has dimension {found}, expected {expected}")]
    RootDimension { index: usize, expected: usize, found: usize },
    #[error("roots {first} and {second} are parallel; only reduced systems are supported")]
    NotReduced { first: usize, second: usize },
    #[error("reflecting root {target} in root {mirror} leaves the root system")]
    NotClosed { mirror: usize, target: usize },
    #[error("group closure exceeded {cap} elements")]
    NonClosedSystem { cap: usize },
    #[error("multiplicity {value} on root {index} is negative or not finite")]
    NegativeMultiplicity { index: usize, value: f64 },
    #[error("multiplicity differs between roots {first} and {second} in the same orbit")]
    NonInvariantMultiplicity { first: usize, second: usize },
    #[error("expected {expected} multiplicities (one per orbit or per root), got {found}")]
    MultiplicityCount { expected: String, found: usize },
    #[error("unknown catalogue entry `{0}`")]
    UnknownCatalogue(String),
    #[error("point has dimension {found}, expected {expected}")]
    PointDimension { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("division by a linear form left a nonzero remainder")]
    NonzeroRemainder,
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HermiteError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Reflection(#[from] ReflectionError),
    #[error("Gram matrix of degree block {degree} is numerically singular")]
    GramSingular { degree: u32 },
    #[error("multi-index {index} is outside the truncation |n| <= {max}")]
    IndexOutOfTruncation { index: String, max: u32 },
    #[error("integration did not reach the requested tolerance (estimate {estimate:e}, error {error:e})")]
    QuadratureNonConvergence { estimate: f64, error: f64 },
    #[error("normalisation integral is only implemented up to dimension 3 for non-product groups (got {0})")]
    UnsupportedDimension(usize),
    #[error("basis file checksum mismatch")]
    Checksum,
    #[error("malformed basis file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error(transparent)]
    Hermite(#[from] HermiteError),
    #[error("power series did not converge within {terms} terms (|uv| = {argument})")]
    SeriesNonConvergence { terms: usize, argument: f64 },
    #[error("operation requires a product group Z2^d")]
    WrongGroup,
    #[error("last degree shell contributes {tail:e}, above tolerance {tolerance:e}")]
    TruncationTooCoarse { tail: f64, tolerance: f64 },
    #[error("orbit distance {distance:e} is below the separation floor {floor:e}")]
    OrbitTooClose { distance: f64, floor: f64 },
    #[error("time integral did not converge (estimate {estimate:e}, error {error:e})")]
    QuadratureNonConvergence { estimate: f64, error: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Hermite(#[from] HermiteError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("moment matrix is singular")]
    MomentMatrixSingular,
    #[error("quadrature order must be at least 1")]
    OrderTooSmall,
    #[error("vector length {found} does not match basis size {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Hermite(#[from] HermiteError),
    #[error("Monte Carlo standard error {relative:.3} exceeds the allowed fraction of the estimate")]
    MonteCarloVarianceTooHigh { relative: f64 },
    #[error("test function support meets the orbit of the evaluation point")]
    SupportOverlap,
    #[error("check `{check}` is not applicable: {reason}")]
    NotApplicable { check: String, reason: String },
}
