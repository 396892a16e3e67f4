//! Cross-checks against a reference `git` binary.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use quadgit_core::rdf::{parse_nquads_str, Dataset};
use quadgit_core::store::{
    dataset_to_tree, graph_file_name, CommitRecord, EntryMode, FsStore, ObjectId, ObjectKind,
    ObjectStore, Signature, TreeEntry, TreeRecord,
};
use quadgit_core::Repository;

pub const GIT: &str = "/usr/bin/git";
pub const EMPTY_BLOB: &str = "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391";
pub const EMPTY_TREE: &str = "4b825dc642cb6eb9a060e54bf8d69288fbee4904";

pub fn git_available() -> bool {
    Command::new(GIT).arg("--version").output().is_ok_and(|o| o.status.success())
}

fn git(dir: &Path, args: &[&str], stdin: &[u8], env: &[(&str, String)]) -> Result<String, String> {
    let mut cmd = Command::new(GIT);
    cmd.env("GIT_DIR", dir)
        .env_remove("GIT_INDEX_FILE")
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (k, v) in env {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().map_err(|e| e.to_string())?;
    child.stdin.take().unwrap().write_all(stdin).map_err(|e| e.to_string())?;
    let out = child.wait_with_output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("git {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).trim_end().to_owned())
}

fn sig_env(prefix: &str, sig: &Signature) -> Vec<(&'static str, String)> {
    let tz = sig.tz_offset_minutes;
    let date = format!(
        "{} {}{:02}{:02}",
        sig.time,
        if tz < 0 { '-' } else { '+' },
        tz.unsigned_abs() / 60,
        tz.unsigned_abs() % 60
    );
    let keys: [&'static str; 3] = if prefix == "AUTHOR" {
        ["GIT_AUTHOR_NAME", "GIT_AUTHOR_EMAIL", "GIT_AUTHOR_DATE"]
    } else {
        ["GIT_COMMITTER_NAME", "GIT_COMMITTER_EMAIL", "GIT_COMMITTER_DATE"]
    };
    vec![(keys[0], sig.name.clone()), (keys[1], sig.email.clone()), (keys[2], date)]
}

/// One fixture: name, our id, git's id.
pub struct Check {
    pub name: String,
    pub ours: String,
    pub git: Result<String, String>,
}

impl Check {
    pub fn ok(&self) -> bool {
        self.git.as_deref() == Ok(self.ours.as_str())
    }
}

fn blob_check(store: &FsStore, name: &str, bytes: &[u8]) -> Check {
    let ours = store.put_object(ObjectKind::Blob, bytes).unwrap();
    Check {
        name: format!("blob {name}"),
        ours: ours.to_hex(),
        git: git(store.root(), &["hash-object", "-t", "blob", "--stdin"], bytes, &[]),
    }
}

fn tree_check(store: &FsStore, name: &str, entries: Vec<TreeEntry>) -> (Check, ObjectId) {
    let listing: String = entries
        .iter()
        .map(|e| {
            let kind = if e.mode == EntryMode::Tree { "tree" } else { "blob" };
            let mode = if e.mode == EntryMode::Tree { "040000" } else { e.mode.as_str() };
            format!("{mode} {kind} {}\t{}\n", e.id, e.name)
        })
        .collect();
    let ours = store.put_tree(&TreeRecord::new(entries)).unwrap();
    let check = Check {
        name: format!("tree {name}"),
        ours: ours.to_hex(),
        git: git(store.root(), &["mktree"], listing.as_bytes(), &[]),
    };
    (check, ours)
}

fn commit_check(store: &FsStore, name: &str, record: CommitRecord) -> (Check, ObjectId) {
    let ours = store.put_commit(&record).unwrap();
    let mut args = vec!["commit-tree".to_owned(), record.tree.to_hex()];
    for p in &record.parents {
        args.push("-p".into());
        args.push(p.to_hex());
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let mut env = sig_env("AUTHOR", &record.author);
    env.extend(sig_env("COMMITTER", &record.committer));
    let check = Check {
        name: format!("commit {name}"),
        ours: ours.to_hex(),
        git: git(store.root(), &args, record.message.as_bytes(), &env),
    };
    (check, ours)
}

/// Writes 20 fixtures into a fresh store under `dir` and compares every id
/// with git. Also returns the `git fsck --strict` verdict.
pub fn run_fixtures(dir: &Path) -> (Vec<Check>, Result<String, String>) {
    let store = FsStore::init(dir, "master").unwrap();
    let mut checks = Vec::new();

    checks.push(blob_check(&store, "empty", b""));
    checks.push(blob_check(&store, "hello", b"hello\n"));
    checks.push(blob_check(&store, "no trailing newline", b"abc"));
    checks.push(blob_check(&store, "binary", &[0u8, 255, 1, 254, 10, 0]));
    checks.push(blob_check(&store, "utf-8", "Größe \u{1F600}\n".as_bytes()));
    checks.push(blob_check(&store, "large", &vec![b'x'; 100_000]));
    let nq = "_:b0 <http://ex.org/p> \"x\" <http://ex.org/g> .\n<http://ex.org/s> <http://ex.org/p> _:b0 <http://ex.org/g> .\n";
    checks.push(blob_check(&store, "n-quads", nq.as_bytes()));

    let hello = store.put_object(ObjectKind::Blob, b"hello\n").unwrap();
    let abc = store.put_object(ObjectKind::Blob, b"abc").unwrap();
    let entry = |mode, name: &str, id| TreeEntry { mode, name: name.into(), id };

    let (c, empty_tree) = tree_check(&store, "empty", vec![]);
    checks.push(c);
    let (c, _) = tree_check(&store, "single", vec![entry(EntryMode::Blob, "a.nq", hello)]);
    checks.push(c);
    let (c, sub) = tree_check(
        &store,
        "unsorted input",
        vec![entry(EntryMode::Blob, "b", abc), entry(EntryMode::Blob, "a-b", hello), entry(EntryMode::Blob, "a", abc)],
    );
    checks.push(c);
    let (c, _) = tree_check(
        &store,
        "directory ordering",
        vec![entry(EntryMode::Tree, "a", sub), entry(EntryMode::Blob, "a.b", hello), entry(EntryMode::Blob, "a0", abc)],
    );
    checks.push(c);
    let g = "http://example.org/graph?x=1&y=ä";
    let (c, _) = tree_check(&store, "encoded graph name", vec![entry(EntryMode::Blob, &graph_file_name(g), hello)]);
    checks.push(c);
    let d: Dataset = parse_nquads_str(nq).unwrap();
    let ours = dataset_to_tree(&store, &d).unwrap();
    let blob = store.get_tree(&ours).unwrap().entries()[0].id;
    let listing = format!("100644 blob {blob}\t{}\n", graph_file_name("http://ex.org/g"));
    checks.push(Check {
        name: "tree dataset".into(),
        ours: ours.to_hex(),
        git: git(store.root(), &["mktree"], listing.as_bytes(), &[]),
    });

    let alice = Signature::new("Alice", "alice@example.org", 1_487_675_007, 60);
    let bob = Signature::new("Bob Q. Rdf", "bob@example.org", 1_500_000_000, -330);
    let record = |tree, parents: Vec<ObjectId>, author: &Signature, committer: &Signature, message: &str| CommitRecord {
        tree,
        parents,
        author: author.clone(),
        committer: committer.clone(),
        message: message.into(),
    };
    let (c, root) = commit_check(&store, "root", record(empty_tree, vec![], &alice, &alice, "init\n"));
    checks.push(c);
    let (c, second) = commit_check(&store, "child", record(sub, vec![root], &alice, &bob, "second\n"));
    checks.push(c);
    let (c, side) = commit_check(&store, "negative offset", record(empty_tree, vec![root], &bob, &bob, "side\n"));
    checks.push(c);
    let (c, _) = commit_check(&store, "merge", record(sub, vec![second, side], &alice, &alice, "merge\n"));
    checks.push(c);
    let (c, _) = commit_check(
        &store,
        "metadata message",
        record(empty_tree, vec![second], &alice, &alice, "Source: http://dbpedia.org/data/Leipzig.n3\n\nExample Import\n"),
    );
    checks.push(c);
    let carol = Signature::new("Zoë Ångström", "zoe@example.org", 1_600_000_000, 0);
    let (c, _) = commit_check(&store, "unicode author", record(empty_tree, vec![], &carol, &carol, "ünïcode\n"));
    checks.push(c);

    // a commit written through the repository
    let repo = Repository::new(store.clone());
    let mut dd = quadgit_core::delta::DatasetDelta::new();
    let part = quadgit_core::atomic::canonical_partition(d.graph("http://ex.org/g").unwrap()).unwrap();
    dd.insert("http://ex.org/g", quadgit_core::delta::GraphChangeKind::Added, quadgit_core::delta::delta_of(part, []));
    let meta = quadgit_core::CommitMeta::new(alice.clone(), "Import").with_metadata("Source", "http://ex.org/data.nq");
    let id = repo.commit_change("master", &dd, &meta).unwrap().commit_id().unwrap();
    let rec = store.get_commit(&id).unwrap();
    let (c, _) = commit_check(&store, "repository commit", rec);
    checks.push(c);

    let fsck = git(store.root(), &["fsck", "--strict", "--no-dangling"], b"", &[]);
    (checks, fsck)
}
