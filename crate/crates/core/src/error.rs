use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("{kind} takes {expected} inputs, got {got}")]
    Arity {
        kind: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("query index {query} out of range for {kind}")]
    QueryOutOfRange { kind: &'static str, query: usize },

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("cannot normalize a zero-length Bloch vector")]
    ZeroVector,

    #[error("leaf {0} is not in the tree")]
    UnknownLeaf(usize),

    #[error("pair {0} does not exist")]
    UnknownPair(u32),

    #[error("pair {0} has already been measured twice")]
    PairExhausted(u32),

    #[error("path of length {0} is too deep for exhaustive enumeration")]
    PathTooDeep(usize),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
