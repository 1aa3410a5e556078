use thiserror::Error;

use crate::bits::BitString;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("duplicate vertex identifier {0:?}")]
    DuplicateVertex(String),
    #[error("edge references unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("uncoverable element {0:?}: empty neighborhood")]
    UncoverableElement(String),
    #[error("{0:?} is not a set of this instance")]
    UnknownSet(String),
    #[error("input {0} lies outside the function's support")]
    OffSupport(BitString),
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("guard {guard} exceeded: requested {requested}, limit {limit}")]
    GuardExceeded {
        guard: &'static str,
        limit: usize,
        requested: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("universe size {0} is not a power of two; pad the universe first")]
    NotPowerOfTwo(usize),
    #[error("exact arithmetic overflow: {0}")]
    Overflow(&'static str),
    #[error("unknown claim id {0:?}")]
    UnknownClaim(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn guard(name: &'static str, requested: usize, limit: usize) -> Result<()> {
    if requested > limit {
        Err(Error::GuardExceeded {
            guard: name,
            limit,
            requested,
        })
    } else {
        Ok(())
    }
}
