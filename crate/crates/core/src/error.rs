use thiserror::Error;

use crate::atomic::AtomicError;
use crate::delta::DeltaError;
use crate::store::{ObjectId, StoreError};

/// Errors from repository-level operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Delta(#[from] DeltaError),
    #[error(transparent)]
    Atomic(#[from] AtomicError),
    #[error("unknown revision {0:?}")]
    UnknownRevision(String),
    #[error("ambiguous revision {0:?}")]
    AmbiguousRevision(String),
    #[error("branch {0:?} already exists")]
    NameExists(String),
    #[error("branch {0:?} has no commits")]
    EmptyBranch(String),
    #[error("commits {0} and {1} have no common ancestor")]
    NoCommonAncestor(ObjectId, ObjectId),
    #[error("{0} is not an ancestor of {1}")]
    NotAnAncestor(ObjectId, ObjectId),
    #[error("cannot revert merge commit {0}")]
    MergeRevert(ObjectId),
    #[error("the default graph is not versioned; address a named graph")]
    UnversionedDefaultGraph,
    #[error("merge has unresolved conflicts")]
    UnresolvedConflicts,
    #[error("incomplete resolution: no decision for {0}")]
    IncompleteResolution(String),
    #[error("invalid conflict or resolution document: {0}")]
    InvalidDocument(String),
    #[error("unknown remote {0:?}")]
    UnknownRemote(String),
    #[error("remote {remote:?} has no branch {branch:?}")]
    UnknownRemoteBranch { remote: String, branch: String },
    #[error("remote {0:?} is unreachable")]
    UnreachableRemote(String),
    #[error("push to {remote}/{branch} is not a fast-forward; pull and merge first")]
    NonFastForward { remote: String, branch: String },
}

impl Error {
    /// True for lost compare-and-set races; the caller may retry.
    pub fn is_stale_ref(&self) -> bool {
        matches!(self, Error::Store(StoreError::StaleRef { .. }))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
