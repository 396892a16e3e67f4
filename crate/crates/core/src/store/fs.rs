use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;
use flate2::Compression;

use super::{
    check_ref_name, hash_object, object_envelope, parse_envelope, ObjectId, ObjectKind,
    ObjectStore, StoreError,
};

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// A bare Git repository layout on disk: `objects/`, `refs/`, `HEAD`.
#[derive(Debug, Clone)]
pub struct FsStore {
    root: PathBuf,
}

impl FsStore {
    /// Creates the layout (idempotent) with `HEAD` pointing at `default_branch`
    /// unless a `HEAD` already exists.
    pub fn init(root: impl AsRef<Path>, default_branch: &str) -> Result<Self, StoreError> {
        let root = root.as_ref();
        fs::create_dir_all(root.join("objects").join("info"))?;
        fs::create_dir_all(root.join("objects").join("pack"))?;
        fs::create_dir_all(root.join("refs").join("heads"))?;
        fs::create_dir_all(root.join("refs").join("tags"))?;
        let config = root.join("config");
        if !config.exists() {
            fs::write(
                &config,
                "[core]\n\trepositoryformatversion = 0\n\tfilemode = true\n\tbare = true\n",
            )?;
        }
        let store = FsStore {
            root: fs::canonicalize(root)?,
        };
        if !store.root.join("HEAD").exists() {
            store.set_head_branch(default_branch)?;
        }
        Ok(store)
    }

    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref();
        if !root.join("objects").is_dir() || !root.join("refs").is_dir() {
            return Err(StoreError::NotAStore(root.display().to_string()));
        }
        Ok(FsStore {
            root: fs::canonicalize(root)?,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn object_path(&self, id: &ObjectId) -> PathBuf {
        let hex = id.to_hex();
        self.root.join("objects").join(&hex[..2]).join(&hex[2..])
    }

    fn ref_path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn tmp_name(&self, dir: &Path) -> PathBuf {
        let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        dir.join(format!("tmp_obj_{}_{n}", std::process::id()))
    }

    fn packed_refs(&self) -> Result<Vec<(String, ObjectId)>, StoreError> {
        let text = match fs::read_to_string(self.root.join("packed-refs")) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        Ok(text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with('^'))
            .filter_map(|l| {
                let (id, name) = l.split_once(' ')?;
                Some((name.to_owned(), id.parse().ok()?))
            })
            .collect())
    }

    fn read_loose_ref(&self, name: &str) -> Result<Option<ObjectId>, StoreError> {
        match fs::read_to_string(self.ref_path(name)) {
            Ok(text) => {
                let text = text.trim();
                if let Some(target) = text.strip_prefix("ref: ") {
                    return self.read_ref(target);
                }
                text.parse()
                    .map(Some)
                    .map_err(|_| StoreError::InvalidRefName(format!("{name}: bad content")))
            }
            Err(e) if matches!(e.kind(), ErrorKind::NotFound | ErrorKind::IsADirectory) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn collect_loose(&self, dir: &Path, prefix: &str, out: &mut Vec<(String, ObjectId)>) -> Result<(), StoreError> {
        let entries = match fs::read_dir(dir) {
            Ok(e) => e,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(()),
            Err(e) => return Err(e.into()),
        };
        for entry in entries {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            let full = format!("{prefix}{name}");
            if entry.file_type()?.is_dir() {
                self.collect_loose(&entry.path(), &format!("{full}/"), out)?;
            } else if !name.ends_with(".lock") {
                if let Some(id) = self.read_loose_ref(&full)? {
                    out.push((full, id));
                }
            }
        }
        Ok(())
    }
}

impl ObjectStore for FsStore {
    fn put_object(&self, kind: ObjectKind, payload: &[u8]) -> Result<ObjectId, StoreError> {
        let id = hash_object(kind, payload);
        let path = self.object_path(&id);
        if path.exists() {
            return Ok(id);
        }
        let dir = path.parent().expect("object dir");
        fs::create_dir_all(dir)?;
        let tmp = self.tmp_name(dir);
        {
            let file = File::create(&tmp)?;
            let mut enc = ZlibEncoder::new(file, Compression::default());
            enc.write_all(&object_envelope(kind, payload))?;
            enc.finish()?.sync_all()?;
        }
        // a concurrent writer may have won; both wrote identical bytes
        fs::rename(&tmp, &path)?;
        Ok(id)
    }

    fn get_object(&self, id: &ObjectId) -> Result<(ObjectKind, Vec<u8>), StoreError> {
        let file = match File::open(self.object_path(id)) {
            Ok(f) => f,
            Err(e) if e.kind() == ErrorKind::NotFound => return Err(StoreError::UnknownObject(*id)),
            Err(e) => return Err(e.into()),
        };
        let mut raw = Vec::new();
        ZlibDecoder::new(file)
            .read_to_end(&mut raw)
            .map_err(|e| StoreError::CorruptObject {
                id: *id,
                reason: format!("inflate failed: {e}"),
            })?;
        let (kind, payload) = parse_envelope(&raw).ok_or_else(|| StoreError::CorruptObject {
            id: *id,
            reason: "bad object header".into(),
        })?;
        if hash_object(kind, payload) != *id {
            return Err(StoreError::CorruptObject {
                id: *id,
                reason: "hash mismatch".into(),
            });
        }
        Ok((kind, payload.to_vec()))
    }

    fn has_object(&self, id: &ObjectId) -> Result<bool, StoreError> {
        Ok(self.object_path(id).is_file())
    }

    fn find_objects(&self, prefix: &str) -> Result<Vec<ObjectId>, StoreError> {
        if prefix.len() < 2 || !prefix.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Ok(Vec::new());
        }
        let prefix = prefix.to_ascii_lowercase();
        let dir = self.root.join("objects").join(&prefix[..2]);
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for entry in entries {
            let name = entry?.file_name().to_string_lossy().into_owned();
            let hex = format!("{}{name}", &prefix[..2]);
            if hex.starts_with(&prefix) {
                if let Ok(id) = hex.parse() {
                    out.push(id);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    fn read_ref(&self, name: &str) -> Result<Option<ObjectId>, StoreError> {
        if let Some(id) = self.read_loose_ref(name)? {
            return Ok(Some(id));
        }
        Ok(self
            .packed_refs()?
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, id)| id))
    }

    fn update_ref(
        &self,
        name: &str,
        expected: Option<ObjectId>,
        new: ObjectId,
    ) -> Result<(), StoreError> {
        check_ref_name(name)?;
        let path = self.ref_path(name);
        fs::create_dir_all(path.parent().expect("ref dir"))?;
        let lock = path.with_file_name(format!(
            "{}.lock",
            path.file_name().expect("ref file").to_string_lossy()
        ));
        let mut file = match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(f) => f,
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                // another writer holds the lock
                return Err(StoreError::StaleRef {
                    name: name.to_owned(),
                    expected,
                    actual: self.read_ref(name).ok().flatten(),
                });
            }
            Err(e) => return Err(e.into()),
        };
        let result = (|| {
            let actual = self.read_ref(name)?;
            if actual != expected {
                return Err(StoreError::StaleRef {
                    name: name.to_owned(),
                    expected,
                    actual,
                });
            }
            file.write_all(format!("{new}\n").as_bytes())?;
            file.sync_all()?;
            fs::rename(&lock, &path)?;
            Ok(())
        })();
        if result.is_err() {
            let _ = fs::remove_file(&lock);
        }
        result
    }

    fn list_refs(&self, prefix: &str) -> Result<Vec<(String, ObjectId)>, StoreError> {
        let mut out = Vec::new();
        self.collect_loose(&self.root.join("refs"), "refs/", &mut out)?;
        for (name, id) in self.packed_refs()? {
            if !out.iter().any(|(n, _)| *n == name) {
                out.push((name, id));
            }
        }
        out.retain(|(n, _)| n.starts_with(prefix));
        out.sort();
        Ok(out)
    }

    fn head_branch(&self) -> Result<Option<String>, StoreError> {
        match fs::read_to_string(self.root.join("HEAD")) {
            Ok(text) => Ok(text
                .trim()
                .strip_prefix("ref: refs/heads/")
                .map(str::to_owned)),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn set_head_branch(&self, branch: &str) -> Result<(), StoreError> {
        check_ref_name(&format!("refs/heads/{branch}"))?;
        let tmp = self.root.join("HEAD.lock");
        fs::write(&tmp, format!("ref: refs/heads/{branch}\n"))?;
        fs::rename(tmp, self.root.join("HEAD"))?;
        Ok(())
    }
}
