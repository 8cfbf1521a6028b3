use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("clause at line {line}: feature {feature} uses variable {variable} which does not occur in the head")]
    UnboundFeatureVariable {
        line: usize,
        feature: String,
        variable: String,
    },

    #[error(
        "facts line {line}: {functor} has arity {found}, previously seen with arity {expected}"
    )]
    ArityMismatch {
        line: usize,
        functor: String,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("entity {0} does not occur in the fact index")]
    UnknownEntity(String),

    #[error("relation {0} does not occur in the fact index")]
    UnknownRelation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("metric undefined: {0}")]
    Undefined(String),

    #[error("feature {0} is not ground after instantiation")]
    NonGroundFeature(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
