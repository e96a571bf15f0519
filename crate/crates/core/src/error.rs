use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series too short: need more than {required} samples, got {actual}")]
    SeriesTooShort { required: usize, actual: usize },

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("series contains a non-finite value at index {0}")]
    NonFinite(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid Savitzky-Golay configuration: window {window}, polyorder {polyorder}")]
    InvalidFilterConfig { window: usize, polyorder: usize },

    #[error("alignment mismatch: {0}")]
    AlignmentMismatch(String),

    #[error("not enough neighbors: need {required}, found {available}")]
    NotEnoughNeighbors { required: usize, available: usize },

    #[error("degenerate neighborhood at index {0}: all displacements are zero")]
    DegenerateNeighborhood(usize),

    #[error("kernel Gram matrix is singular")]
    SingularGram,

    #[error("all rows are degenerate (near-zero norm)")]
    AllRowsDegenerate,

    #[error("library length {library} exceeds available length {available}")]
    LibraryTooLong { library: usize, available: usize },

    #[error("singular design matrix")]
    SingularDesign,

    #[error("too few samples: need more than {required}, got {actual}")]
    TooFewSamples { required: usize, actual: usize },

    #[error("integration diverged at step {step}")]
    Divergence { step: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("empty file")]
    EmptyFile,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("non-uniform sampling at row {row}: spacing {spacing} vs {expected}")]
    NonUniformSampling { row: usize, spacing: f64, expected: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) | Error::InvalidFilterConfig { .. } => ErrorClass::Usage,
            Error::Divergence { .. }
            | Error::DegenerateNeighborhood(_)
            | Error::SingularGram
            | Error::SingularDesign
            | Error::AllRowsDegenerate => ErrorClass::Numerical,
            Error::Context { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }

    /// 1 usage error, 2 data error, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Usage => 1,
            ErrorClass::Data => 2,
            ErrorClass::Numerical => 3,
        }
    }
}
