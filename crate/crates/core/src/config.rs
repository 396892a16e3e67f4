//! Store configuration, read from `quadgit.toml` in the store directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::merge::ContextOptions;
use crate::provenance::ProvenanceOptions;

pub const CONFIG_FILE: &str = "quadgit.toml";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error(transparent)]
    Serialize(#[from] toml::ser::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoreConfig {
    pub default_branch: String,
    pub bind: String,
    pub user: UserConfig,
    pub provenance: ProvenanceConfig,
    pub merge: MergeConfig,
    pub remotes: BTreeMap<String, RemoteConfig>,
}

/// Identity recorded on commits made through the service and CLI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserConfig {
    pub name: String,
    pub email: String,
}

impl Default for UserConfig {
    fn default() -> Self {
        UserConfig {
            name: "quadgit".into(),
            email: "quadgit@localhost".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProvenanceConfig {
    /// Branches whose history is described; empty means all.
    pub branches: Vec<String>,
    /// Commits per branch, counted from the head; `None` is unbounded.
    pub depth: Option<usize>,
    pub include_updates: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MergeConfig {
    pub predicate_nodes: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteConfig {
    /// Path of the remote store, optionally as a `file://` URL.
    pub url: String,
}

impl RemoteConfig {
    pub fn path(&self) -> PathBuf {
        match url::Url::parse(&self.url) {
            Ok(u) if u.scheme() == "file" => u.to_file_path().unwrap_or_else(|_| self.url.clone().into()),
            _ => PathBuf::from(&self.url),
        }
    }
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig {
            default_branch: "master".into(),
            bind: "127.0.0.1:5000".into(),
            user: UserConfig::default(),
            provenance: ProvenanceConfig::default(),
            merge: MergeConfig::default(),
            remotes: BTreeMap::new(),
        }
    }
}

impl Default for ProvenanceConfig {
    fn default() -> Self {
        ProvenanceConfig {
            branches: Vec::new(),
            depth: None,
            include_updates: true,
        }
    }
}

impl StoreConfig {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Loads `quadgit.toml` from `store_dir`, or the defaults if absent.
    pub fn load(store_dir: &Path) -> Result<Self, ConfigError> {
        let path = store_dir.join(CONFIG_FILE);
        match std::fs::read_to_string(&path) {
            Ok(text) => Self::parse(&text).map_err(|source| ConfigError::Parse { path, source }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(source) => Err(ConfigError::Io { path, source }),
        }
    }

    pub fn save(&self, store_dir: &Path) -> Result<(), ConfigError> {
        let path = store_dir.join(CONFIG_FILE);
        std::fs::write(&path, self.to_toml()?).map_err(|source| ConfigError::Io { path, source })
    }

    /// Location of remote `name`; relative paths are taken from `store_dir`.
    pub fn remote_path(&self, store_dir: &Path, name: &str) -> Option<PathBuf> {
        let path = self.remotes.get(name)?.path();
        Some(if path.is_absolute() { path } else { store_dir.join(path) })
    }

    pub fn context_options(&self) -> ContextOptions {
        ContextOptions {
            predicate_nodes: self.merge.predicate_nodes,
        }
    }

    pub fn provenance_options(&self) -> ProvenanceOptions {
        ProvenanceOptions {
            branches: self.provenance.branches.clone(),
            depth: self.provenance.depth,
            include_updates: self.provenance.include_updates,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_when_empty() {
        assert_eq!(StoreConfig::parse("").unwrap(), StoreConfig::default());
    }

    #[test]
    fn full_file() {
        let c = StoreConfig::parse(
            r#"
default_branch = "main"
bind = "0.0.0.0:8080"

[user]
name = "Natanael Arndt"
email = "arndt@example.org"

[provenance]
branches = ["main", "develop"]
depth = 50
include_updates = false

[merge]
predicate_nodes = true

[remotes.origin]
url = "file:///srv/data/store"
"#,
        )
        .unwrap();
        assert_eq!(c.default_branch, "main");
        assert_eq!(c.user.email, "arndt@example.org");
        assert_eq!(c.provenance.depth, Some(50));
        assert!(c.context_options().predicate_nodes);
        assert_eq!(c.remotes["origin"].path(), PathBuf::from("/srv/data/store"));
        assert_eq!(StoreConfig::parse(&c.to_toml().unwrap()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(StoreConfig::parse("colour = 1").is_err());
    }

    #[test]
    fn plain_path_remote() {
        let r = RemoteConfig { url: "../other".into() };
        assert_eq!(r.path(), PathBuf::from("../other"));
        let mut c = StoreConfig::default();
        c.remotes.insert("up".into(), r);
        assert_eq!(c.remote_path(Path::new("/s/a"), "up"), Some(PathBuf::from("/s/a/../other")));
        assert_eq!(c.remote_path(Path::new("/s/a"), "down"), None);
    }
}
