//! Fetch, pull and push between stores by copying loose objects.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::history::{branch_ref, CommitMeta, Repository};
use crate::merge::{ContextOptions, MergeOutcome, MergeStrategy, Resolution};
use crate::store::{EntryMode, ObjectId, ObjectKind, ObjectStore};

/// Remote-tracking ref for `branch` of `remote`.
pub fn tracking_ref(remote: &str, branch: &str) -> String {
    format!("refs/remotes/{remote}/{branch}")
}

/// Copies every object reachable from `head` that `to` lacks. Parents are
/// written before children and trees before the commits naming them, so
/// a present commit always implies its full closure. Returns the number of
/// objects copied.
pub fn copy_closure<F, T>(from: &F, to: &T, head: &ObjectId) -> Result<usize>
where
    F: ObjectStore + ?Sized,
    T: ObjectStore + ?Sized,
{
    let mut missing = Vec::new();
    let mut seen = HashSet::from([*head]);
    let mut stack = vec![*head];
    let mut parents: HashMap<ObjectId, Vec<ObjectId>> = HashMap::new();
    while let Some(id) = stack.pop() {
        if to.has_object(&id)? {
            continue;
        }
        let commit = from.get_commit(&id)?;
        for p in &commit.parents {
            if seen.insert(*p) {
                stack.push(*p);
            }
        }
        parents.insert(id, commit.parents.clone());
        missing.push(id);
    }
    let mut written = HashSet::new();
    let mut copied = 0;
    let mut order = Vec::with_capacity(missing.len());
    let mut visiting: Vec<(ObjectId, bool)> = missing.iter().rev().map(|c| (*c, false)).collect();
    while let Some((c, done)) = visiting.pop() {
        if done {
            if written.insert(c) {
                order.push(c);
            }
            continue;
        }
        if written.contains(&c) {
            continue;
        }
        visiting.push((c, true));
        for p in &parents[&c] {
            if parents.contains_key(p) && !written.contains(p) {
                visiting.push((*p, false));
            }
        }
    }
    for c in order {
        let commit = from.get_commit(&c)?;
        copied += copy_tree(from, to, &commit.tree)?;
        let (kind, payload) = from.get_object(&c)?;
        to.put_object(kind, &payload)?;
        copied += 1;
    }
    Ok(copied)
}

fn copy_tree<F, T>(from: &F, to: &T, tree: &ObjectId) -> Result<usize>
where
    F: ObjectStore + ?Sized,
    T: ObjectStore + ?Sized,
{
    if to.has_object(tree)? {
        return Ok(0);
    }
    let mut copied = 0;
    for entry in from.get_tree(tree)?.entries() {
        match entry.mode {
            EntryMode::Tree => copied += copy_tree(from, to, &entry.id)?,
            EntryMode::Submodule => {}
            _ => {
                if !to.has_object(&entry.id)? {
                    let payload = from.get_typed(&entry.id, ObjectKind::Blob)?;
                    to.put_object(ObjectKind::Blob, &payload)?;
                    copied += 1;
                }
            }
        }
    }
    let (kind, payload) = from.get_object(tree)?;
    to.put_object(kind, &payload)?;
    Ok(copied + 1)
}

/// Result of a fetch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fetched {
    pub head: ObjectId,
    pub copied: usize,
}

/// Copies the remote branch's history and moves the tracking ref.
pub fn fetch<S, R>(local: &Repository<S>, remote_name: &str, remote: &R, branch: &str) -> Result<Fetched>
where
    S: ObjectStore,
    R: ObjectStore + ?Sized,
{
    let head = remote
        .read_ref(&branch_ref(branch))?
        .ok_or_else(|| Error::UnknownRemoteBranch {
            remote: remote_name.to_owned(),
            branch: branch.to_owned(),
        })?;
    let copied = copy_closure(remote, local.store(), &head)?;
    let tracking = tracking_ref(remote_name, branch);
    let current = local.store().read_ref(&tracking)?;
    if current != Some(head) {
        local.store().update_ref(&tracking, current, head)?;
    }
    Ok(Fetched { head, copied })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PullOutcome {
    /// The local branch moved to the remote head without a merge commit.
    FastForward(ObjectId),
    Merged(MergeOutcome),
}

/// Fetches, then fast-forwards or merges into `local_branch`.
#[allow(clippy::too_many_arguments)]
pub fn pull<S, R>(
    local: &Repository<S>,
    remote_name: &str,
    remote: &R,
    remote_branch: &str,
    local_branch: &str,
    strategy: MergeStrategy,
    meta: &CommitMeta,
    resolution: Option<&Resolution>,
    options: ContextOptions,
) -> Result<PullOutcome>
where
    S: ObjectStore,
    R: ObjectStore + ?Sized,
{
    let fetched = fetch(local, remote_name, remote, remote_branch)?;
    let head = local.branch_head(local_branch)?;
    let Some(head) = head else {
        local
            .store()
            .update_ref(&branch_ref(local_branch), None, fetched.head)?;
        return Ok(PullOutcome::FastForward(fetched.head));
    };
    if head == fetched.head || local.is_ancestor(&fetched.head, &head)? {
        return Ok(PullOutcome::Merged(MergeOutcome::UpToDate(head)));
    }
    if local.is_ancestor(&head, &fetched.head)? {
        local
            .store()
            .update_ref(&branch_ref(local_branch), Some(head), fetched.head)?;
        return Ok(PullOutcome::FastForward(fetched.head));
    }
    let outcome = local.merge_commits(
        local_branch,
        head,
        fetched.head,
        strategy,
        meta,
        resolution,
        options,
    )?;
    Ok(PullOutcome::Merged(outcome))
}

/// Copies the local branch to the remote and fast-forwards the remote ref.
pub fn push<S, R>(
    local: &Repository<S>,
    remote_name: &str,
    remote: &R,
    local_branch: &str,
    remote_branch: &str,
) -> Result<ObjectId>
where
    S: ObjectStore,
    R: ObjectStore + ?Sized,
{
    let head = local
        .branch_head(local_branch)?
        .ok_or_else(|| Error::EmptyBranch(local_branch.to_owned()))?;
    let remote_ref = branch_ref(remote_branch);
    let remote_head = remote.read_ref(&remote_ref)?;
    let non_ff = || Error::NonFastForward {
        remote: remote_name.to_owned(),
        branch: remote_branch.to_owned(),
    };
    if let Some(rh) = remote_head {
        if rh == head {
            return Ok(head);
        }
        if !local.store().has_object(&rh)? || !local.is_ancestor(&rh, &head)? {
            return Err(non_ff());
        }
    }
    copy_closure(local.store(), remote, &head)?;
    remote.update_ref(&remote_ref, remote_head, head)?;
    let tracking = tracking_ref(remote_name, remote_branch);
    let current = local.store().read_ref(&tracking)?;
    if current != Some(head) {
        local.store().update_ref(&tracking, current, head)?;
    }
    Ok(head)
}
