//! Content-addressed object storage in Git's loose-object format.

mod codec;
mod dataset;
mod fs;
mod mem;

use std::fmt;
use std::str::FromStr;

use sha1::{Digest, Sha1};
use thiserror::Error;

use crate::rdf::ParseError;

pub use codec::{CommitRecord, EntryMode, Signature, TreeEntry, TreeRecord};
pub use dataset::{
    dataset_to_tree, encode_component, graph_file_name, graph_from_file_name, tree_to_dataset,
};
pub(crate) use dataset::graph_blob;
pub use fs::FsStore;
pub use mem::MemStore;

/// A SHA-1 object name.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId([u8; 20]);

impl ObjectId {
    pub const fn from_bytes(bytes: [u8; 20]) -> Self {
        ObjectId(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ObjectId({self})")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid object id {0:?}")]
pub struct InvalidObjectId(pub String);

impl FromStr for ObjectId {
    type Err = InvalidObjectId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 40 || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(InvalidObjectId(s.to_owned()));
        }
        let mut out = [0u8; 20];
        for (i, chunk) in s.as_bytes().chunks(2).enumerate() {
            let hex = std::str::from_utf8(chunk).expect("ascii");
            out[i] = u8::from_str_radix(hex, 16).map_err(|_| InvalidObjectId(s.to_owned()))?;
        }
        Ok(ObjectId(out))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectKind {
    Blob,
    Tree,
    Commit,
}

impl ObjectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Blob => "blob",
            ObjectKind::Tree => "tree",
            ObjectKind::Commit => "commit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "blob" => Some(ObjectKind::Blob),
            "tree" => Some(ObjectKind::Tree),
            "commit" => Some(ObjectKind::Commit),
            _ => None,
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `"<kind> <len>\0" + payload`, the bytes Git hashes and deflates.
pub fn object_envelope(kind: ObjectKind, payload: &[u8]) -> Vec<u8> {
    let mut out = format!("{} {}\0", kind.as_str(), payload.len()).into_bytes();
    out.extend_from_slice(payload);
    out
}

pub fn hash_object(kind: ObjectKind, payload: &[u8]) -> ObjectId {
    let mut hasher = Sha1::new();
    hasher.update(format!("{} {}\0", kind.as_str(), payload.len()).as_bytes());
    hasher.update(payload);
    ObjectId(hasher.finalize().into())
}

/// Splits a decompressed envelope back into kind and payload.
pub fn parse_envelope(raw: &[u8]) -> Option<(ObjectKind, &[u8])> {
    let nul = raw.iter().position(|&b| b == 0)?;
    let header = std::str::from_utf8(&raw[..nul]).ok()?;
    let (kind, len) = header.split_once(' ')?;
    let kind = ObjectKind::parse(kind)?;
    let len: usize = len.parse().ok()?;
    let payload = &raw[nul + 1..];
    (payload.len() == len).then_some((kind, payload))
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown object {0}")]
    UnknownObject(ObjectId),
    #[error("corrupt object {id}: {reason}")]
    CorruptObject { id: ObjectId, reason: String },
    #[error("object {id} is a {actual}, expected {expected}")]
    WrongKind {
        id: ObjectId,
        expected: ObjectKind,
        actual: ObjectKind,
    },
    #[error("unknown ref {0}")]
    UnknownRef(String),
    #[error("invalid ref name {0:?}")]
    InvalidRefName(String),
    #[error("stale ref {name}: expected {expected:?}, found {actual:?}")]
    StaleRef {
        name: String,
        expected: Option<ObjectId>,
        actual: Option<ObjectId>,
    },
    #[error("blob {name} does not parse: {error}")]
    BlobParse { name: String, error: ParseError },
    #[error("not a store: {0}")]
    NotAStore(String),
    #[error(transparent)]
    Canonicalization(#[from] crate::atomic::AtomicError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Objects plus refs. Implementations must make `update_ref` an atomic
/// compare-and-set and must never mutate a stored object.
pub trait ObjectStore: Send + Sync {
    fn put_object(&self, kind: ObjectKind, payload: &[u8]) -> Result<ObjectId, StoreError>;

    fn get_object(&self, id: &ObjectId) -> Result<(ObjectKind, Vec<u8>), StoreError>;

    fn has_object(&self, id: &ObjectId) -> Result<bool, StoreError>;

    /// Ids whose hex form starts with `prefix`.
    fn find_objects(&self, prefix: &str) -> Result<Vec<ObjectId>, StoreError>;

    fn read_ref(&self, name: &str) -> Result<Option<ObjectId>, StoreError>;

    /// Moves `name` from `expected` (`None`: must not exist) to `new`.
    fn update_ref(
        &self,
        name: &str,
        expected: Option<ObjectId>,
        new: ObjectId,
    ) -> Result<(), StoreError>;

    /// All refs under `prefix` (e.g. `refs/heads/`), sorted by name.
    fn list_refs(&self, prefix: &str) -> Result<Vec<(String, ObjectId)>, StoreError>;

    /// Branch name `HEAD` points at.
    fn head_branch(&self) -> Result<Option<String>, StoreError>;

    fn set_head_branch(&self, branch: &str) -> Result<(), StoreError>;

    fn get_typed(&self, id: &ObjectId, expected: ObjectKind) -> Result<Vec<u8>, StoreError> {
        let (kind, payload) = self.get_object(id)?;
        if kind != expected {
            return Err(StoreError::WrongKind {
                id: *id,
                expected,
                actual: kind,
            });
        }
        Ok(payload)
    }

    fn get_commit(&self, id: &ObjectId) -> Result<CommitRecord, StoreError> {
        let payload = self.get_typed(id, ObjectKind::Commit)?;
        CommitRecord::decode(&payload).map_err(|reason| StoreError::CorruptObject { id: *id, reason })
    }

    fn get_tree(&self, id: &ObjectId) -> Result<TreeRecord, StoreError> {
        let payload = self.get_typed(id, ObjectKind::Tree)?;
        TreeRecord::decode(&payload).map_err(|reason| StoreError::CorruptObject { id: *id, reason })
    }

    fn put_commit(&self, commit: &CommitRecord) -> Result<ObjectId, StoreError> {
        self.put_object(ObjectKind::Commit, &commit.encode())
    }

    fn put_tree(&self, tree: &TreeRecord) -> Result<ObjectId, StoreError> {
        self.put_object(ObjectKind::Tree, &tree.encode())
    }
}

impl<S: ObjectStore + ?Sized> ObjectStore for std::sync::Arc<S> {
    fn put_object(&self, kind: ObjectKind, payload: &[u8]) -> Result<ObjectId, StoreError> {
        (**self).put_object(kind, payload)
    }
    fn get_object(&self, id: &ObjectId) -> Result<(ObjectKind, Vec<u8>), StoreError> {
        (**self).get_object(id)
    }
    fn has_object(&self, id: &ObjectId) -> Result<bool, StoreError> {
        (**self).has_object(id)
    }
    fn find_objects(&self, prefix: &str) -> Result<Vec<ObjectId>, StoreError> {
        (**self).find_objects(prefix)
    }
    fn read_ref(&self, name: &str) -> Result<Option<ObjectId>, StoreError> {
        (**self).read_ref(name)
    }
    fn update_ref(
        &self,
        name: &str,
        expected: Option<ObjectId>,
        new: ObjectId,
    ) -> Result<(), StoreError> {
        (**self).update_ref(name, expected, new)
    }
    fn list_refs(&self, prefix: &str) -> Result<Vec<(String, ObjectId)>, StoreError> {
        (**self).list_refs(prefix)
    }
    fn head_branch(&self) -> Result<Option<String>, StoreError> {
        (**self).head_branch()
    }
    fn set_head_branch(&self, branch: &str) -> Result<(), StoreError> {
        (**self).set_head_branch(branch)
    }
}

/// Rejects ref names Git would refuse or that escape the refs directory.
pub fn check_ref_name(name: &str) -> Result<(), StoreError> {
    let bad = || StoreError::InvalidRefName(name.to_owned());
    let rest = name.strip_prefix("refs/").ok_or_else(bad)?;
    if rest.is_empty() || name.ends_with('/') || name.ends_with(".lock") || name.contains("..") {
        return Err(bad());
    }
    for part in rest.split('/') {
        if part.is_empty() || part.starts_with('.') {
            return Err(bad());
        }
        if part
            .chars()
            .any(|c| c.is_control() || matches!(c, ' ' | '~' | '^' | ':' | '?' | '*' | '[' | '\\'))
        {
            return Err(bad());
        }
    }
    if name.contains("@{") {
        return Err(bad());
    }
    Ok(())
}
