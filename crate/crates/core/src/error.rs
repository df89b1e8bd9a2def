use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("division by zero polynomial")]
    ZeroPolynomial,
    #[error("pole at evaluation point")]
    Pole,
    #[error("resonant Sylvester operator")]
    ResonantSylvester,
    #[error("singular linear system")]
    Singular,
    #[error("assembly precondition violated: {0}")]
    Assembly(String),
    #[error("degenerate q-Schlesinger configuration: {0}")]
    DegenerateSchlesinger(String),
    #[error("base point; use sakai_step")]
    BasePoint,
    #[error("singular locus: {0}")]
    SingularLocus(String),
    #[error("non-biregular parameter: {0}")]
    NonBiregular(String),
    #[error("degree cap exceeded: degree {degree} > cap {cap}")]
    DegreeCap { degree: usize, cap: usize },
    #[error("fewer than eight base points: {0}")]
    FewerBasePoints(String),
    #[error("infinite vector field")]
    InfiniteField,
    #[error("left Okamoto space at t = {0}")]
    LeftOkamoto(String),
    #[error("theta requires |q|>1")]
    ThetaModulus,
    #[error("zero of theta in denominator")]
    ThetaZero,
    #[error("resonant exponent {0}")]
    ResonantExponent(usize),
    #[error("confluence theorem violated: {0}")]
    ConfluenceViolated(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("sample outside accuracy annulus: {0}")]
    Annulus(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by exceeding a configured resource limit.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::DegreeCap { .. })
    }
}
