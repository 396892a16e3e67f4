use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, RwLock};

use super::{check_ref_name, hash_object, ObjectId, ObjectKind, ObjectStore, StoreError};

/// In-memory store with the same contract as [`FsStore`](super::FsStore).
#[derive(Debug)]
pub struct MemStore {
    objects: RwLock<HashMap<ObjectId, (ObjectKind, Vec<u8>)>>,
    refs: Mutex<BTreeMap<String, ObjectId>>,
    head: Mutex<String>,
}

impl MemStore {
    pub fn new(default_branch: &str) -> Self {
        MemStore {
            objects: RwLock::new(HashMap::new()),
            refs: Mutex::new(BTreeMap::new()),
            head: Mutex::new(default_branch.to_owned()),
        }
    }

    pub fn object_count(&self) -> usize {
        self.objects.read().expect("poisoned").len()
    }
}

impl Default for MemStore {
    fn default() -> Self {
        MemStore::new("master")
    }
}

impl ObjectStore for MemStore {
    fn put_object(&self, kind: ObjectKind, payload: &[u8]) -> Result<ObjectId, StoreError> {
        let id = hash_object(kind, payload);
        self.objects
            .write()
            .expect("poisoned")
            .entry(id)
            .or_insert_with(|| (kind, payload.to_vec()));
        Ok(id)
    }

    fn get_object(&self, id: &ObjectId) -> Result<(ObjectKind, Vec<u8>), StoreError> {
        self.objects
            .read()
            .expect("poisoned")
            .get(id)
            .cloned()
            .ok_or(StoreError::UnknownObject(*id))
    }

    fn has_object(&self, id: &ObjectId) -> Result<bool, StoreError> {
        Ok(self.objects.read().expect("poisoned").contains_key(id))
    }

    fn find_objects(&self, prefix: &str) -> Result<Vec<ObjectId>, StoreError> {
        let prefix = prefix.to_ascii_lowercase();
        let mut out: Vec<ObjectId> = self
            .objects
            .read()
            .expect("poisoned")
            .keys()
            .filter(|id| id.to_hex().starts_with(&prefix))
            .copied()
            .collect();
        out.sort();
        Ok(out)
    }

    fn read_ref(&self, name: &str) -> Result<Option<ObjectId>, StoreError> {
        if name == "HEAD" {
            let head = self.head.lock().expect("poisoned").clone();
            return self.read_ref(&format!("refs/heads/{head}"));
        }
        Ok(self.refs.lock().expect("poisoned").get(name).copied())
    }

    fn update_ref(
        &self,
        name: &str,
        expected: Option<ObjectId>,
        new: ObjectId,
    ) -> Result<(), StoreError> {
        check_ref_name(name)?;
        let mut refs = self.refs.lock().expect("poisoned");
        let actual = refs.get(name).copied();
        if actual != expected {
            return Err(StoreError::StaleRef {
                name: name.to_owned(),
                expected,
                actual,
            });
        }
        refs.insert(name.to_owned(), new);
        Ok(())
    }

    fn list_refs(&self, prefix: &str) -> Result<Vec<(String, ObjectId)>, StoreError> {
        Ok(self
            .refs
            .lock()
            .expect("poisoned")
            .iter()
            .filter(|(n, _)| n.starts_with(prefix))
            .map(|(n, id)| (n.clone(), *id))
            .collect())
    }

    fn head_branch(&self) -> Result<Option<String>, StoreError> {
        Ok(Some(self.head.lock().expect("poisoned").clone()))
    }

    fn set_head_branch(&self, branch: &str) -> Result<(), StoreError> {
        check_ref_name(&format!("refs/heads/{branch}"))?;
        *self.head.lock().expect("poisoned") = branch.to_owned();
        Ok(())
    }
}
