use thiserror::Error;

/// Errors raised while validating data or evaluating queries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("need at least {required} training points for {dim} predictors, got {got}")]
    TooFewPoints {
        required: usize,
        got: usize,
        dim: usize,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {context}")]
    NonFiniteValue { context: String },

    #[error("points {first} and {second} share identical coordinates")]
    DuplicatePoint { first: usize, second: usize },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("singular linear system (pivot {pivot:e} in column {column})")]
    SingularSystem { pivot: f64, column: usize },

    #[error("root finder did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("no nonsingular simplex around the query (reference {reference})")]
    DegenerateNeighborhood { reference: usize },

    #[error("requested {requested} point combinations but only {available} are available")]
    InsufficientPoints { requested: usize, available: usize },

    #[error("stencil segment on axis {axis} has zero width")]
    ZeroWidthSegment { axis: usize },

    #[error("input sequence is empty")]
    EmptyInput,

    #[error("the smooth method needs mesh-structured training data")]
    MeshRequired,

    #[error("mesh does not match training set: {0}")]
    MeshMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by malformed or inconsistent input data, as
    /// opposed to failures that happen while evaluating a well-formed query.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::TooFewPoints { .. }
                | Error::DimensionMismatch { .. }
                | Error::NonFiniteValue { .. }
                | Error::DuplicatePoint { .. }
                | Error::EmptyTrainingSet
                | Error::MeshMismatch(_)
                | Error::InvalidArgument(_)
                | Error::Parse { .. }
                | Error::EmptyInput
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
