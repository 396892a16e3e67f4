//! HTTP service and operator command line over a quadgit store.

pub mod cli;
pub mod service;

use std::path::{Path, PathBuf};

use quadgit_core::config::{ConfigError, StoreConfig};
use quadgit_core::provenance::{KEY_SOURCE, KEY_UPDATE};
use quadgit_core::store::{FsStore, StoreError};
use quadgit_core::{CommitMeta, Error, Repository};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OpenError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// An opened store with its configuration.
pub struct Store {
    pub repo: Repository<FsStore>,
    pub config: StoreConfig,
    pub dir: PathBuf,
}

impl Store {
    pub fn open(dir: &Path) -> Result<Self, OpenError> {
        let fs = FsStore::open(dir)?;
        let dir = fs.root().to_path_buf();
        let config = StoreConfig::load(&dir)?;
        Ok(Store {
            repo: Repository::new(fs),
            config,
            dir,
        })
    }

    /// Creates the store layout and writes a default config if none exists.
    pub fn init(dir: &Path, default_branch: &str) -> Result<Self, OpenError> {
        let fs = FsStore::init(dir, default_branch)?;
        let dir = fs.root().to_path_buf();
        let mut config = StoreConfig::load(&dir)?;
        if !dir.join(quadgit_core::config::CONFIG_FILE).exists() {
            config.default_branch = default_branch.to_owned();
            config.save(&dir)?;
        }
        Ok(Store {
            repo: Repository::new(fs),
            config,
            dir,
        })
    }

    /// Commit metadata signed with the configured user.
    pub fn meta(&self, message: impl Into<String>) -> CommitMeta {
        CommitMeta::now(&self.config.user.name, &self.config.user.email, message)
    }

    pub fn update_meta(&self, update: &str) -> CommitMeta {
        self.meta("SPARQL update").with_metadata(KEY_UPDATE, update.trim())
    }

    pub fn import_meta(&self, message: &str, source: Option<&str>) -> CommitMeta {
        let meta = self.meta(message);
        match source {
            Some(url) => meta.with_metadata(KEY_SOURCE, url),
            None => meta,
        }
    }

    /// Opens the configured remote `name`.
    pub fn remote(&self, name: &str) -> Result<FsStore, Error> {
        let path = self
            .config
            .remote_path(&self.dir, name)
            .ok_or_else(|| Error::UnknownRemote(name.to_owned()))?;
        FsStore::open(&path).map_err(|_| Error::UnreachableRemote(name.to_owned()))
    }

    /// True if `name` is a branch of this store, including the unborn
    /// default branch.
    pub fn is_branch(&self, name: &str) -> bool {
        match self.repo.branch_head(name) {
            Ok(Some(_)) => true,
            Ok(None) => name == self.config.default_branch,
            Err(_) => false,
        }
    }
}
