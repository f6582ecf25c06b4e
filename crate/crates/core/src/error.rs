use thiserror::Error;

/// Broad class of a failure, used by callers to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NahmError {
    #[error("index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("configuration must contain at least one point")]
    EmptyConfig,

    #[error("points {i} and {j} coincide (separation {r:e})")]
    DuplicatePoints { i: usize, j: usize, r: f64 },

    #[error("non-finite coordinate in point {0}")]
    NonFiniteCoordinate(usize),

    #[error("points {i} and {j} are vertically aligned; double point at infinity or zero")]
    VerticalPair { i: usize, j: usize },

    #[error("double points ({i},{j}) and ({k},{l}) coincide within tolerance")]
    DegenerateConfig { i: usize, j: usize, k: usize, l: usize },

    #[error("no generic rotation found after {attempts} attempts")]
    GenericityFailure { attempts: usize },

    #[error("h-minus is singular at zeta = 0")]
    ZeroZeta,

    #[error("interpolation nodes {0} and {1} coincide")]
    DuplicateNodes(usize, usize),

    #[error("exponential scale overflow: s*max(r)/2 = {0:.3} exceeds 350")]
    ScaleOverflow(f64),

    #[error("coefficient block is singular (sigma_min/norm = {ratio:e})")]
    SingularBlock { ratio: f64 },

    #[error("reduced interpolation system is singular (sigma_min/norm = {ratio:e})")]
    SingularSystem { ratio: f64 },

    #[error("zeta sample {0} lies on a singular locus of the pairing")]
    ZetaAtSingularity(String),

    #[error("pairing varies across zeta samples: spread {spread:e} > {tol:e}")]
    InconsistentSpread { spread: f64, tol: f64 },

    #[error("row {row} has non-positive norm {value:e}")]
    NonPositiveNorm { row: usize, value: f64 },

    #[error("zeta is within {dist:e} of double point a_{i}{j}")]
    ZetaTooCloseToDoublePoint { i: usize, j: usize, dist: f64 },

    #[error("twist point is vertically aligned with source {0}")]
    NonGenericTwist(usize),

    #[error("evaluation point coincides with source {0}")]
    AtSource(usize),

    #[error("zeta hits the pole a_x{0}")]
    PoleHit(usize),

    #[error("evaluation point is within the Dirac string of source {0}")]
    StringCrossing(usize),

    #[error("flow parameter must be positive, got {0}")]
    NonPositiveS(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl NahmError {
    pub fn class(&self) -> ErrorClass {
        use NahmError::*;
        match self {
            ScaleOverflow(_)
            | SingularBlock { .. }
            | SingularSystem { .. }
            | InconsistentSpread { .. }
            | NonPositiveNorm { .. }
            | GenericityFailure { .. } => ErrorClass::Numerical,
            _ => ErrorClass::Validation,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        use NahmError::*;
        match self {
            IndexOutOfRange { .. } => "IndexOutOfRange",
            EmptyConfig => "EmptyConfig",
            DuplicatePoints { .. } => "DuplicatePoints",
            NonFiniteCoordinate(_) => "NonFiniteCoordinate",
            VerticalPair { .. } => "VerticalPair",
            DegenerateConfig { .. } => "DegenerateConfig",
            GenericityFailure { .. } => "GenericityFailure",
            ZeroZeta => "ZeroZeta",
            DuplicateNodes(..) => "DuplicateNodes",
            ScaleOverflow(_) => "ScaleOverflow",
            SingularBlock { .. } => "SingularBlock",
            SingularSystem { .. } => "SingularSystem",
            ZetaAtSingularity(_) => "ZetaAtSingularity",
            InconsistentSpread { .. } => "InconsistentSpread",
            NonPositiveNorm { .. } => "NonPositiveNorm",
            ZetaTooCloseToDoublePoint { .. } => "ZetaTooCloseToDoublePoint",
            NonGenericTwist(_) => "NonGenericTwist",
            AtSource(_) => "AtSource",
            PoleHit(_) => "PoleHit",
            StringCrossing(_) => "StringCrossing",
            NonPositiveS(_) => "NonPositiveS",
            InvalidConfig(_) => "InvalidConfig",
        }
    }
}

pub type Result<T> = std::result::Result<T, NahmError>;
