//! The commit DAG: commits, branches, revision lookup, merge bases, logs and
//! reverts.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet, VecDeque};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::atomic::{canonical_partition, flatten, Partition};
use crate::delta::{apply_partition, diff_partitions, validate_partition, DatasetDelta};
use crate::error::{Error, Result};
use crate::provenance::format_message;
use crate::rdf::{parse_nquads, Dataset};
use crate::store::{
    graph_blob, graph_file_name, graph_from_file_name, tree_to_dataset, CommitRecord, EntryMode,
    ObjectId, ObjectKind, ObjectStore, Signature, StoreError, TreeEntry, TreeRecord,
};

/// Canonical partitions of every non-empty named graph of a version.
pub type PartitionedDataset = BTreeMap<String, Arc<Partition>>;

const CACHE_LIMIT: usize = 4096;

/// Who made a change, when, and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitMeta {
    pub author: Signature,
    pub committer: Signature,
    pub message: String,
    /// Structured `Key: value` pairs appended to the message.
    pub metadata: Vec<(String, String)>,
}

impl CommitMeta {
    pub fn new(author: Signature, message: impl Into<String>) -> Self {
        CommitMeta {
            committer: author.clone(),
            author,
            message: message.into(),
            metadata: Vec::new(),
        }
    }

    /// Author and committer stamped with the current time in UTC.
    pub fn now(name: &str, email: &str, message: impl Into<String>) -> Self {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0);
        CommitMeta::new(Signature::new(name, email, secs, 0), message)
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.push((key.into(), value.into()));
        self
    }

    pub fn full_message(&self) -> String {
        format_message(&self.message, &self.metadata)
    }
}

/// Result of [`Repository::commit_change`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommitOutcome {
    Committed(ObjectId),
    /// The change was empty; the branch still points at this commit.
    NoEffect(Option<ObjectId>),
}

impl CommitOutcome {
    pub fn commit_id(&self) -> Option<ObjectId> {
        match self {
            CommitOutcome::Committed(id) => Some(*id),
            CommitOutcome::NoEffect(head) => *head,
        }
    }
}

pub fn branch_ref(branch: &str) -> String {
    format!("refs/heads/{branch}")
}

/// A store plus the caches needed to navigate its history quickly.
pub struct Repository<S> {
    store: S,
    commits: Mutex<HashMap<ObjectId, Arc<CommitRecord>>>,
    blobs: Mutex<HashMap<ObjectId, Arc<PartitionedDataset>>>,
    generations: Mutex<HashMap<ObjectId, u64>>,
}

impl<S: ObjectStore> Repository<S> {
    pub fn new(store: S) -> Self {
        Repository {
            store,
            commits: Mutex::new(HashMap::new()),
            blobs: Mutex::new(HashMap::new()),
            generations: Mutex::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &S {
        &self.store
    }

    /// Branch `HEAD` points at.
    pub fn default_branch(&self) -> Result<String> {
        Ok(self
            .store
            .head_branch()?
            .unwrap_or_else(|| "master".to_owned()))
    }

    pub fn branch_head(&self, branch: &str) -> Result<Option<ObjectId>> {
        Ok(self.store.read_ref(&branch_ref(branch))?)
    }

    pub fn branches(&self) -> Result<Vec<(String, ObjectId)>> {
        Ok(self
            .store
            .list_refs("refs/heads/")?
            .into_iter()
            .map(|(name, id)| (name["refs/heads/".len()..].to_owned(), id))
            .collect())
    }

    pub fn commit(&self, id: &ObjectId) -> Result<Arc<CommitRecord>> {
        if let Some(c) = self.commits.lock().expect("poisoned").get(id) {
            return Ok(Arc::clone(c));
        }
        let record = Arc::new(self.store.get_commit(id)?);
        let mut cache = self.commits.lock().expect("poisoned");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(*id, Arc::clone(&record));
        Ok(record)
    }

    /// Resolves a branch name, remote-tracking name, full ref, `HEAD`,
    /// full or abbreviated commit id, optionally followed by `~n` / `^n`.
    pub fn resolve(&self, rev: &str) -> Result<ObjectId> {
        let unknown = || Error::UnknownRevision(rev.to_owned());
        let split = rev.find(['~', '^']).unwrap_or(rev.len());
        let (base, mut ops) = rev.split_at(split);
        let mut id = self.resolve_base(base)?;
        while let Some(op) = ops.chars().next() {
            let rest = &ops[1..];
            let digits = rest.len() - rest.trim_start_matches(|c: char| c.is_ascii_digit()).len();
            let n: usize = if digits == 0 {
                1
            } else {
                rest[..digits].parse().map_err(|_| unknown())?
            };
            ops = &rest[digits..];
            match op {
                '~' => {
                    for _ in 0..n {
                        id = *self.commit(&id)?.parents.first().ok_or_else(unknown)?;
                    }
                }
                '^' if n > 0 => {
                    id = *self.commit(&id)?.parents.get(n - 1).ok_or_else(unknown)?;
                }
                '^' => {}
                _ => return Err(unknown()),
            }
        }
        Ok(id)
    }

    fn resolve_base(&self, base: &str) -> Result<ObjectId> {
        let unknown = || Error::UnknownRevision(base.to_owned());
        if base.is_empty() {
            return Err(unknown());
        }
        if base == "HEAD" {
            let branch = self.default_branch()?;
            return self
                .branch_head(&branch)?
                .ok_or(Error::EmptyBranch(branch));
        }
        if base.len() == 40 {
            if let Ok(id) = base.parse::<ObjectId>() {
                return match self.store.get_object(&id) {
                    Ok((ObjectKind::Commit, _)) => Ok(id),
                    Ok(_) | Err(StoreError::UnknownObject(_)) => Err(unknown()),
                    Err(e) => Err(e.into()),
                };
            }
        }
        let candidates = if base.starts_with("refs/") {
            vec![base.to_owned()]
        } else {
            vec![
                branch_ref(base),
                format!("refs/remotes/{base}"),
                format!("refs/tags/{base}"),
            ]
        };
        for name in candidates {
            match self.store.read_ref(&name) {
                Ok(Some(id)) => return Ok(id),
                Ok(None) | Err(StoreError::InvalidRefName(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
        if base.len() >= 4 && base.chars().all(|c| c.is_ascii_hexdigit()) {
            let mut found = Vec::new();
            for id in self.store.find_objects(&base.to_ascii_lowercase())? {
                if matches!(self.store.get_object(&id)?, (ObjectKind::Commit, _)) {
                    found.push(id);
                }
            }
            return match found.len() {
                0 => Err(unknown()),
                1 => Ok(found[0]),
                _ => Err(Error::AmbiguousRevision(base.to_owned())),
            };
        }
        Err(unknown())
    }

    /// The full dataset of a commit, read straight from its snapshot.
    pub fn dataset_at(&self, commit: &ObjectId) -> Result<Dataset> {
        let record = self.commit(commit)?;
        Ok(tree_to_dataset(&self.store, &record.tree)?)
    }

    /// Dataset at the head of `branch`; empty for an unborn branch.
    pub fn branch_dataset(&self, branch: &str) -> Result<Dataset> {
        match self.branch_head(branch)? {
            Some(id) => self.dataset_at(&id),
            None => Ok(Dataset::new()),
        }
    }

    /// Canonical partitions of every graph of a commit (cached per blob).
    pub fn partitions_at(&self, commit: &ObjectId) -> Result<PartitionedDataset> {
        let record = self.commit(commit)?;
        self.partitions_of_tree(&record.tree)
    }

    pub fn partitions_of(&self, commit: Option<&ObjectId>) -> Result<PartitionedDataset> {
        match commit {
            Some(id) => self.partitions_at(id),
            None => Ok(PartitionedDataset::new()),
        }
    }

    fn partitions_of_tree(&self, tree: &ObjectId) -> Result<PartitionedDataset> {
        let record = self.store.get_tree(tree)?;
        let mut out = PartitionedDataset::new();
        for entry in record.entries() {
            if entry.mode != EntryMode::Blob {
                continue;
            }
            let Some(graph) = graph_from_file_name(&entry.name) else {
                continue;
            };
            for (name, part) in self.blob_partitions(&entry.id, &entry.name, &graph)?.iter() {
                match out.get_mut(name) {
                    Some(existing) => {
                        Arc::make_mut(existing).extend(part.iter().cloned());
                    }
                    None => {
                        out.insert(name.clone(), Arc::clone(part));
                    }
                }
            }
        }
        Ok(out)
    }

    fn blob_partitions(
        &self,
        id: &ObjectId,
        file: &str,
        graph: &str,
    ) -> Result<Arc<PartitionedDataset>> {
        if let Some(p) = self.blobs.lock().expect("poisoned").get(id) {
            return Ok(Arc::clone(p));
        }
        let bytes = self.store.get_typed(id, ObjectKind::Blob)?;
        let parsed = parse_nquads(&bytes).map_err(|error| StoreError::BlobParse {
            name: file.to_owned(),
            error,
        })?;
        let mut graphs: BTreeMap<String, crate::rdf::Graph> = parsed
            .named_graphs()
            .map(|(n, g)| (n.to_owned(), g.clone()))
            .collect();
        graphs
            .entry(graph.to_owned())
            .or_default()
            .extend(parsed.default_graph().iter().cloned());
        let mut out = PartitionedDataset::new();
        for (name, g) in graphs {
            if !g.is_empty() {
                out.insert(name, Arc::new(canonical_partition(&g)?));
            }
        }
        let out = Arc::new(out);
        self.remember_blob(*id, Arc::clone(&out));
        Ok(out)
    }

    fn remember_blob(&self, id: ObjectId, parts: Arc<PartitionedDataset>) {
        let mut cache = self.blobs.lock().expect("poisoned");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(id, parts);
    }

    /// Writes `changed` graphs on top of `base` (or from scratch) and returns
    /// the tree id. Empty partitions delete the graph.
    pub fn write_tree(
        &self,
        base: Option<&ObjectId>,
        changed: &BTreeMap<String, Arc<Partition>>,
    ) -> Result<ObjectId> {
        let mut entries: Vec<TreeEntry> = match base {
            Some(tree) => self.store.get_tree(tree)?.entries().to_vec(),
            None => Vec::new(),
        };
        let names: HashSet<String> = changed.keys().map(|g| graph_file_name(g)).collect();
        entries.retain(|e| !names.contains(&e.name));
        for (graph, part) in changed {
            if part.is_empty() {
                continue;
            }
            let blob = graph_blob(graph, &flatten(part.iter()));
            let id = self.store.put_object(ObjectKind::Blob, &blob)?;
            let mut cached = PartitionedDataset::new();
            cached.insert(graph.clone(), Arc::clone(part));
            self.remember_blob(id, Arc::new(cached));
            entries.push(TreeEntry {
                mode: EntryMode::Blob,
                name: graph_file_name(graph),
                id,
            });
        }
        Ok(self.store.put_tree(&TreeRecord::new(entries))?)
    }

    /// Writes a commit and moves `branch` from `expected` to it.
    pub fn write_commit(
        &self,
        branch: &str,
        expected: Option<ObjectId>,
        parents: Vec<ObjectId>,
        tree: ObjectId,
        meta: &CommitMeta,
    ) -> Result<ObjectId> {
        let mut message = meta.full_message();
        if !message.ends_with('\n') {
            message.push('\n');
        }
        let record = CommitRecord {
            tree,
            parents,
            author: meta.author.clone(),
            committer: meta.committer.clone(),
            message,
        };
        let id = self.store.put_commit(&record)?;
        self.store.update_ref(&branch_ref(branch), expected, id)?;
        Ok(id)
    }

    /// Validates `dd` against the branch head and commits the result. An
    /// empty delta writes nothing.
    pub fn commit_change(
        &self,
        branch: &str,
        dd: &DatasetDelta,
        meta: &CommitMeta,
    ) -> Result<CommitOutcome> {
        let head = self.branch_head(branch)?;
        self.commit_change_on(branch, head, dd, meta)
    }

    /// Like [`commit_change`](Self::commit_change) against a known head; fails
    /// with a stale-ref error if the branch has moved since.
    pub fn commit_change_on(
        &self,
        branch: &str,
        head: Option<ObjectId>,
        dd: &DatasetDelta,
        meta: &CommitMeta,
    ) -> Result<CommitOutcome> {
        if dd.default_delta().is_some() {
            return Err(Error::UnversionedDefaultGraph);
        }
        if dd.is_empty() {
            return Ok(CommitOutcome::NoEffect(head));
        }
        let current = self.partitions_of(head.as_ref())?;
        let empty = Partition::new();
        let mut changed = BTreeMap::new();
        for (graph, change) in dd.graphs() {
            let base = current.get(graph).map(|p| &**p).unwrap_or(&empty);
            let cs = validate_partition(base, &change.delta)?;
            changed.insert(graph.to_owned(), Arc::new(apply_partition(base, cs.delta())));
        }
        let base_tree = match head {
            Some(h) => Some(self.commit(&h)?.tree),
            None => None,
        };
        let tree = self.write_tree(base_tree.as_ref(), &changed)?;
        let id = self.write_commit(branch, head, head.into_iter().collect(), tree, meta)?;
        Ok(CommitOutcome::Committed(id))
    }

    /// Replaces the branch content with `dataset` (e.g. an import). Returns
    /// no-effect when nothing changes.
    pub fn commit_dataset(
        &self,
        branch: &str,
        dataset: &PartitionedDataset,
        meta: &CommitMeta,
    ) -> Result<CommitOutcome> {
        let head = self.branch_head(branch)?;
        let current = self.partitions_of(head.as_ref())?;
        if same_content(&current, dataset) && head.is_some() {
            return Ok(CommitOutcome::NoEffect(head));
        }
        let tree = self.write_tree(None, dataset)?;
        let id = self.write_commit(branch, head, head.into_iter().collect(), tree, meta)?;
        Ok(CommitOutcome::Committed(id))
    }

    pub fn create_branch(&self, from: &str, name: &str) -> Result<ObjectId> {
        let id = self.resolve(from)?;
        match self.store.update_ref(&branch_ref(name), None, id) {
            Ok(()) => Ok(id),
            Err(StoreError::StaleRef { .. }) => Err(Error::NameExists(name.to_owned())),
            Err(e) => Err(e.into()),
        }
    }

    /// Every commit reachable from `from`, including itself.
    pub fn ancestors(&self, from: &ObjectId) -> Result<HashSet<ObjectId>> {
        let mut seen = HashSet::from([*from]);
        let mut queue = VecDeque::from([*from]);
        while let Some(id) = queue.pop_front() {
            for p in &self.commit(&id)?.parents {
                if seen.insert(*p) {
                    queue.push_back(*p);
                }
            }
        }
        Ok(seen)
    }

    /// True when `a` is reachable from `b` (a commit is its own ancestor).
    pub fn is_ancestor(&self, a: &ObjectId, b: &ObjectId) -> Result<bool> {
        let mut seen = HashSet::from([*b]);
        let mut queue = VecDeque::from([*b]);
        while let Some(id) = queue.pop_front() {
            if id == *a {
                return Ok(true);
            }
            for p in &self.commit(&id)?.parents {
                if seen.insert(*p) {
                    queue.push_back(*p);
                }
            }
        }
        Ok(false)
    }

    /// Longest distance from a root commit.
    pub fn generation(&self, id: &ObjectId) -> Result<u64> {
        if let Some(g) = self.generations.lock().expect("poisoned").get(id) {
            return Ok(*g);
        }
        let mut stack = vec![(*id, false)];
        let mut local: HashMap<ObjectId, u64> = HashMap::new();
        while let Some((c, expanded)) = stack.pop() {
            if local.contains_key(&c) {
                continue;
            }
            if let Some(g) = self.generations.lock().expect("poisoned").get(&c) {
                local.insert(c, *g);
                continue;
            }
            let parents = self.commit(&c)?.parents.clone();
            if expanded {
                let g = parents
                    .iter()
                    .map(|p| local[p] + 1)
                    .max()
                    .unwrap_or(0);
                local.insert(c, g);
            } else {
                stack.push((c, true));
                for p in parents {
                    if !local.contains_key(&p) {
                        stack.push((p, false));
                    }
                }
            }
        }
        let g = local[id];
        self.generations.lock().expect("poisoned").extend(local);
        Ok(g)
    }

    /// All lowest common ancestors of `a` and `b`, sorted.
    pub fn lowest_common_ancestors(&self, a: &ObjectId, b: &ObjectId) -> Result<Vec<ObjectId>> {
        let from_a = self.ancestors(a)?;
        let common: HashSet<ObjectId> = self
            .ancestors(b)?
            .into_iter()
            .filter(|c| from_a.contains(c))
            .collect();
        let mut dominated = HashSet::new();
        let mut queue = VecDeque::new();
        for c in &common {
            for p in &self.commit(c)?.parents {
                if dominated.insert(*p) {
                    queue.push_back(*p);
                }
            }
        }
        while let Some(id) = queue.pop_front() {
            for p in &self.commit(&id)?.parents {
                if dominated.insert(*p) {
                    queue.push_back(*p);
                }
            }
        }
        let mut out: Vec<ObjectId> = common.difference(&dominated).copied().collect();
        out.sort();
        Ok(out)
    }

    /// The lowest common ancestor with the greatest generation number; ties
    /// go to the smallest id.
    pub fn merge_base(&self, a: &ObjectId, b: &ObjectId) -> Result<ObjectId> {
        let mut best: Option<(u64, ObjectId)> = None;
        for c in self.lowest_common_ancestors(a, b)? {
            let g = self.generation(&c)?;
            if best.is_none_or(|(bg, _)| g > bg) {
                best = Some((g, c));
            }
        }
        best.map(|(_, c)| c)
            .ok_or(Error::NoCommonAncestor(*a, *b))
    }

    /// Commits reachable from `head`, children before parents; ties go to
    /// the later committer time, then the smaller id.
    pub fn log(&self, head: &ObjectId) -> Result<Vec<(ObjectId, Arc<CommitRecord>)>> {
        let all = self.ancestors(head)?;
        let mut children: HashMap<ObjectId, usize> = all.iter().map(|c| (*c, 0)).collect();
        for c in &all {
            for p in &self.commit(c)?.parents {
                *children.get_mut(p).expect("parent reachable") += 1;
            }
        }
        let mut ready = BinaryHeap::new();
        for (c, n) in &children {
            if *n == 0 {
                ready.push((self.commit(c)?.committer.time, Reverse(*c)));
            }
        }
        let mut out = Vec::with_capacity(all.len());
        while let Some((_, Reverse(c))) = ready.pop() {
            let record = self.commit(&c)?;
            for p in &record.parents {
                let n = children.get_mut(p).expect("parent reachable");
                *n -= 1;
                if *n == 0 {
                    ready.push((self.commit(p)?.committer.time, Reverse(*p)));
                }
            }
            out.push((c, record));
        }
        Ok(out)
    }

    /// Log of a branch; empty for an unborn branch.
    pub fn branch_log(&self, branch: &str) -> Result<Vec<(ObjectId, Arc<CommitRecord>)>> {
        match self.branch_head(branch)? {
            Some(h) => self.log(&h),
            None => Ok(Vec::new()),
        }
    }

    /// The change `target` introduced relative to its only parent.
    pub fn change_of(&self, target: &ObjectId) -> Result<DatasetDelta> {
        let record = self.commit(target)?;
        let parent = match record.parents.as_slice() {
            [p] => Some(*p),
            [] => None,
            _ => return Err(Error::MergeRevert(*target)),
        };
        let before = self.partitions_of(parent.as_ref())?;
        let after = self.partitions_at(target)?;
        Ok(partition_diff(&before, &after))
    }
}

/// Per-graph delta between two partitioned datasets.
pub fn partition_diff(from: &PartitionedDataset, to: &PartitionedDataset) -> DatasetDelta {
    use crate::delta::GraphChangeKind;
    let empty = Arc::new(Partition::new());
    let mut out = DatasetDelta::new();
    let names: std::collections::BTreeSet<&String> = from.keys().chain(to.keys()).collect();
    for name in names {
        let a = from.get(name).unwrap_or(&empty);
        let b = to.get(name).unwrap_or(&empty);
        let kind = match (a.is_empty(), b.is_empty()) {
            (true, false) => GraphChangeKind::Added,
            (false, true) => GraphChangeKind::Removed,
            _ => GraphChangeKind::Modified,
        };
        out.insert(name.clone(), kind, diff_partitions(a, b));
    }
    out
}

/// Equal key sets graph by graph, ignoring empty graphs.
pub fn same_content(a: &PartitionedDataset, b: &PartitionedDataset) -> bool {
    let non_empty = |d: &PartitionedDataset| {
        d.iter()
            .filter(|(_, p)| !p.is_empty())
            .map(|(g, p)| (g.clone(), Arc::clone(p)))
            .collect::<BTreeMap<_, _>>()
    };
    non_empty(a) == non_empty(b)
}

/// Partitions every named graph of a dataset.
pub fn partition_dataset(dataset: &Dataset) -> Result<PartitionedDataset> {
    let mut out = PartitionedDataset::new();
    for (name, graph) in dataset.named_graphs() {
        if !graph.is_empty() {
            out.insert(name.to_owned(), Arc::new(canonical_partition(graph)?));
        }
    }
    Ok(out)
}

/// Flattens a partitioned dataset back into quads.
pub fn unpartition(parts: &PartitionedDataset) -> Dataset {
    let mut out = Dataset::new();
    for (name, part) in parts {
        out.set_graph(name.clone(), flatten(part.iter()));
    }
    out
}
