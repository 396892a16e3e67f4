mod common;

use common::git::{git_available, run_fixtures, EMPTY_BLOB, EMPTY_TREE};

#[test]
fn ids_agree_with_git_and_fsck_passes() {
    if !git_available() {
        eprintln!("git not found; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let (checks, fsck) = run_fixtures(dir.path());
    assert_eq!(checks.len(), 20);
    for c in &checks {
        assert!(c.ok(), "{}: ours {} git {:?}", c.name, c.ours, c.git);
    }
    assert_eq!(checks[0].ours, EMPTY_BLOB);
    assert!(checks.iter().any(|c| c.ours == EMPTY_TREE));
    fsck.unwrap();
}
