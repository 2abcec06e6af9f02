use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("effect kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("invalid effect value: {0}")]
    InvalidValue(String),

    #[error("ill-formed distribution: {0}")]
    IllFormed(String),

    #[error("grade clash (no-cloning): {left:?} and {right:?} share systems")]
    GradeClash { left: Vec<String>, right: Vec<String> },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not a sub-collection: {sub:?} is not contained in {sup:?}")]
    NotSubset { sub: Vec<String>, sup: Vec<String> },

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("row and column totals differ: {0}")]
    TotalMismatch(String),

    #[error("invalid decomposability instance: {0}")]
    InvalidInstance(String),

    #[error("finite table violates {axiom}: {detail}")]
    Axiom { axiom: &'static str, detail: String },

    #[error("effects {first} and {second} are not distinct")]
    Indistinct { first: usize, second: usize },

    #[error(
        "no separating density after {attempts} attempts; closest pair ({first}, {second}) with gap {gap:e}"
    )]
    AttemptsExhausted {
        attempts: usize,
        first: usize,
        second: usize,
        gap: f64,
    },

    #[error("label set conflict: {0}")]
    LabelConflict(String),

    #[error("morphism domain mismatch: {0}")]
    MorphismDomain(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("system is invalid:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
