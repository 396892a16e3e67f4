//! Versioned RDF datasets on a Git-compatible object store.
//!
//! Datasets are stored as one canonical N-Quads blob per named graph. All
//! change arithmetic (diff, apply, merge) runs over canonical atomic graphs so
//! blank nodes survive versioning without skolemization.

pub mod atomic;
pub mod config;
pub mod delta;
mod error;
pub mod history;
pub mod merge;
pub mod provenance;
pub mod query;
pub mod rdf;
pub mod store;
pub mod sync;

pub use error::{Error, Result};
pub use history::{CommitMeta, CommitOutcome, PartitionedDataset, Repository};
pub use merge::{MergeOutcome, MergeStrategy};
