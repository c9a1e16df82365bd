use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator trace is {trace}, expected 1")]
    NotUnitTrace { trace: f64 },

    #[error("Gram matrix is singular (smallest/largest singular value {ratio:e})")]
    GramSingular { ratio: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid correlation box: {0}")]
    InvalidBox(String),

    #[error("box is signalling (max violation {violation:e})")]
    SignallingInput { violation: f64 },

    #[error("invalid party subset: {0}")]
    InvalidSubset(String),

    #[error("wrong scenario shape: {0}")]
    WrongShape(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("basis vectors are not orthonormal (max deviation {deviation:e})")]
    NonOrthonormal { deviation: f64 },

    #[error("no linearly independent measurement vectors after {attempts} draws")]
    IndependenceFailure { attempts: usize },

    #[error("operation needs at least two parties, got {0}")]
    TooFewParties(usize),

    #[error("basis vector |e> is (nearly) a computational basis vector")]
    DegenerateBasis,

    #[error("{name} = {value} is outside {range}")]
    RangeViolation {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid linear map: {0}")]
    InvalidMap(String),
}

pub type Result<T> = std::result::Result<T, Error>;
