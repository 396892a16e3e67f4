mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::*;
use quadgit_core::atomic::{canonical_partition, Partition};
use quadgit_core::merge::{
    context_merge, keys, merge_datasets, three_way, ContextMerge, ContextOptions, DatasetConflict,
    DatasetMerge, Resolution, Side,
};
use quadgit_core::rdf::{Graph, Term, Triple};
use quadgit_core::{MergeOutcome, MergeStrategy, PartitionedDataset};
use rand::Rng;

fn part(atoms: &[Vec<Triple>]) -> Partition {
    canonical_partition(&graph_of(atoms)).unwrap()
}

fn oracle_keys(atoms: &[Vec<Triple>]) -> BTreeSet<String> {
    atoms.iter().map(|a| oracle_key(a)).collect()
}

/// (in ours, in theirs, in base) -> in result.
const TABLE: [(bool, bool, bool, bool); 8] = [
    (false, false, false, false),
    (true, true, true, true),
    (true, false, false, true),
    (false, true, false, true),
    (false, true, true, false),
    (true, false, true, false),
    (true, true, false, true),
    (false, false, true, false),
];

#[test]
fn decision_table_rows() {
    let mut gen = Gen::new(2);
    let other = vec![t("bystander", "p", "x")];
    for blanks in [0, 2] {
        let atom = gen.atom(blanks);
        for (a, b, base, expected) in TABLE {
            let pick = |present: bool| {
                let mut v = vec![other.clone()];
                if present {
                    // each side holds its own copy with fresh labels
                    v.push(Gen::new(99).relabel(&atom));
                }
                part(&v)
            };
            let merged = three_way(&pick(base), &pick(a), &pick(b));
            let target = &part(std::slice::from_ref(&atom));
            assert_eq!(
                merged.is_superset(target),
                expected,
                "row ours={a} theirs={b} base={base} blanks={blanks}"
            );
            assert_eq!(merged.len(), 1 + usize::from(expected));
        }
    }
}

#[test]
fn three_way_matches_set_oracle() {
    let mut gen = Gen::new(17);
    for _ in 0..200 {
        let pool: Vec<Vec<Triple>> = (0..12).map(|_| gen.any_atom(3)).collect();
        let sample = |gen: &mut Gen| -> Vec<Vec<Triple>> {
            let mut out = Vec::new();
            for a in &pool {
                if gen.rng.gen_bool(0.5) {
                    out.push(gen.relabel(a));
                }
            }
            out
        };
        let (b, x, y) = (sample(&mut gen), sample(&mut gen), sample(&mut gen));
        let expected = oracle_three_way(&oracle_keys(&b), &oracle_keys(&x), &oracle_keys(&y));
        let got = keys(&three_way(&part(&b), &part(&x), &part(&y)));
        assert_eq!(got, expected);
    }
}

#[test]
fn union_ours_theirs() {
    let ds = |triples: &[Triple]| -> PartitionedDataset {
        let g: Graph = triples.iter().cloned().collect();
        [(GRAPH1.to_owned(), Arc::new(canonical_partition(&g).unwrap()))].into()
    };
    let base = ds(&[t("a", "p", "b")]);
    let ours = ds(&[t("c", "p", "d")]);
    let theirs = ds(&[t("a", "p", "b"), t("e", "p", "f")]);
    let run = |s| match merge_datasets(&base, &ours, &theirs, s, ContextOptions::default()) {
        DatasetMerge::Clean(d) => d,
        DatasetMerge::Conflict(_) => panic!("{s} conflicted"),
    };
    assert_eq!(run(MergeStrategy::Ours), ours);
    assert_eq!(run(MergeStrategy::Theirs), theirs);
    assert_eq!(run(MergeStrategy::Union)[GRAPH1].len(), 3);
    assert_eq!(run(MergeStrategy::ThreeWay)[GRAPH1].len(), 2);
}

#[test]
fn context_merge_presidency_conflict() {
    let repo = presidency_fixture();
    let outcome = repo
        .merge("master", "develop", MergeStrategy::Context, &meta("merge", 10), None, ContextOptions::default())
        .unwrap();
    let MergeOutcome::Conflict(conflict) = outcome else {
        panic!("expected a conflict, got {outcome:?}");
    };
    assert_eq!(conflict.graphs.keys().collect::<Vec<_>>(), vec![GRAPH1]);
    let report = &conflict.graphs[GRAPH1];
    assert_eq!(
        report.inodes,
        BTreeSet::from([Term::iri("http://example.org/USA")])
    );
    assert_eq!(keys(&report.ours_added), oracle_keys(&[vec![president("Obama")]]));
    assert_eq!(keys(&report.theirs_added), oracle_keys(&[vec![president("Trump")]]));
    assert!(report.ours_removed.is_empty() && report.theirs_removed.is_empty());
    assert!(report.unquestioned.is_empty());
    assert_eq!(
        keys(&conflict.clean[GRAPH2]),
        oracle_keys(&[vec![label(OLD_LEIPZIG, "Leipzig")], vec![label(NEW_LEIPZIG, "Lepizig")]])
    );
    // nothing was written
    let head = repo.branch_head("master").unwrap().unwrap();
    assert_eq!(repo.commit(&head).unwrap().parents.len(), 1);

    let resolution = Resolution::keep_ours(&conflict);
    let merged = repo
        .merge(
            "master",
            "develop",
            MergeStrategy::Context,
            &meta("merge", 11),
            Some(&resolution),
            ContextOptions::default(),
        )
        .unwrap();
    let MergeOutcome::Committed(id) = merged else { panic!("{merged:?}") };
    let result = oracle_dataset(&repo.dataset_at(&id).unwrap());
    assert_eq!(result[GRAPH1], oracle_keys(&[vec![president("Obama")]]));
    assert_eq!(
        result[GRAPH2],
        oracle_keys(&[vec![label(OLD_LEIPZIG, "Leipzig")], vec![label(NEW_LEIPZIG, "Lepizig")]])
    );
    assert_eq!(repo.commit(&id).unwrap().parents.len(), 2);
}

#[test]
fn conflict_document_round_trip_and_keep_theirs() {
    let repo = presidency_fixture();
    let MergeOutcome::Conflict(conflict) = repo
        .merge("master", "develop", MergeStrategy::Context, &meta("m", 10), None, ContextOptions::default())
        .unwrap()
    else {
        panic!()
    };
    let text = conflict.to_text();
    let parsed = DatasetConflict::from_text(&text).unwrap();
    assert_eq!(parsed.graphs, conflict.graphs);
    assert_eq!(parsed.ours, conflict.ours);

    let resolution = Resolution::from_text(&Resolution::keep_theirs(&parsed).to_text()).unwrap();
    let resolved = conflict.resolve(&resolution).unwrap();
    assert_eq!(keys(&resolved[GRAPH1]), oracle_keys(&[vec![president("Trump")]]));
    let all = conflict.resolve(&Resolution::keep_all(&conflict)).unwrap();
    assert_eq!(all[GRAPH1].len(), 2);
}

#[test]
fn context_clean_matches_three_way() {
    let mut gen = Gen::new(23);
    for _ in 0..100 {
        let pool: Vec<Vec<Triple>> = (0..8).map(|_| vec![gen.ground()]).collect();
        let sample = |gen: &mut Gen| -> Vec<Vec<Triple>> {
            pool.iter().filter(|_| gen.rng.gen_bool(0.5)).cloned().collect()
        };
        let (b, x, y) = (part(&sample(&mut gen)), part(&sample(&mut gen)), part(&sample(&mut gen)));
        match context_merge(&b, &x, &y, ContextOptions::default()) {
            ContextMerge::Clean(p) => assert_eq!(p, three_way(&b, &x, &y)),
            ContextMerge::Conflict(r) => {
                // every reported atom touches a conflicting node
                for side in Side::ALL {
                    for atom in r.section(side) {
                        assert!(quadgit_core::merge::nodes(atom, false)
                            .iter()
                            .any(|n| r.inodes.contains(n)));
                    }
                }
                // keeping everything gives the three-way result back
                let g = quadgit_core::merge::GraphResolution::uniform(&r, |_| quadgit_core::merge::Decision::Keep);
                assert_eq!(r.resolve(&g).unwrap(), three_way(&b, &x, &y));
            }
        }
    }
}

#[test]
fn merge_up_to_date_and_fast_forward_free() {
    let repo = mem_repo();
    change(&repo, "master", GRAPH1, &[t("a", "p", "b")], &[], 1);
    repo.create_branch("master", "feature").unwrap();
    let c2 = change(&repo, "feature", GRAPH1, &[t("c", "p", "d")], &[], 2);
    let head = repo.branch_head("master").unwrap().unwrap();
    let out = repo
        .merge("feature", "master", MergeStrategy::ThreeWay, &meta("m", 3), None, ContextOptions::default())
        .unwrap();
    assert_eq!(out, MergeOutcome::UpToDate(c2));
    let out = repo
        .merge("master", "feature", MergeStrategy::ThreeWay, &meta("m", 3), None, ContextOptions::default())
        .unwrap();
    let MergeOutcome::Committed(m) = out else { panic!() };
    assert_eq!(repo.commit(&m).unwrap().parents, vec![head, c2]);
}

#[test]
fn revert_scenarios() {
    let repo = mem_repo();
    let opts = ContextOptions::default();
    let c1 = change(&repo, "master", GRAPH1, &[t("a", "p", "1")], &[], 1);
    let c2 = change(&repo, "master", GRAPH1, &[t("a", "p", "2")], &[], 2);

    // head revert restores the parent
    let MergeOutcome::Committed(r1) = repo
        .revert("master", &c2, MergeStrategy::ThreeWay, &meta("revert", 3), None, opts)
        .unwrap()
    else {
        panic!()
    };
    assert_eq!(oracle_dataset(&repo.dataset_at(&r1).unwrap()), oracle_dataset(&repo.dataset_at(&c1).unwrap()));

    // reverting the revert restores c2's content
    let MergeOutcome::Committed(r2) = repo
        .revert("master", &r1, MergeStrategy::ThreeWay, &meta("revert", 4), None, opts)
        .unwrap()
    else {
        panic!()
    };
    assert_eq!(oracle_dataset(&repo.dataset_at(&r2).unwrap()), oracle_dataset(&repo.dataset_at(&c2).unwrap()));

    // older commit: later additions survive
    let c4 = change(&repo, "master", GRAPH2, &[t("b", "p", "3")], &[], 5);
    let MergeOutcome::Committed(r3) = repo
        .revert("master", &c1, MergeStrategy::ThreeWay, &meta("revert", 6), None, opts)
        .unwrap()
    else {
        panic!()
    };
    let at = |c| oracle_dataset(&repo.dataset_at(&c).unwrap());
    let expected_g1 = oracle_three_way(
        &at(c1)[GRAPH1],
        &BTreeSet::new(),
        &at(c4)[GRAPH1],
    );
    let got = at(r3);
    assert_eq!(got[GRAPH1], expected_g1);
    assert_eq!(got[GRAPH2], at(c4)[GRAPH2]);
    assert_eq!(repo.commit(&r3).unwrap().parents, vec![c4]);
}

#[test]
fn revert_rejects_merges_and_foreign_commits() {
    let repo = presidency_fixture();
    let m = match repo
        .merge("master", "develop", MergeStrategy::ThreeWay, &meta("m", 9), None, ContextOptions::default())
        .unwrap()
    {
        MergeOutcome::Committed(m) => m,
        other => panic!("{other:?}"),
    };
    assert!(matches!(
        repo.revert("master", &m, MergeStrategy::ThreeWay, &meta("r", 10), None, ContextOptions::default()),
        Err(quadgit_core::Error::MergeRevert(_))
    ));
    let other = change(&repo, "develop", GRAPH1, &[t("z", "p", "z")], &[], 11);
    assert!(matches!(
        repo.revert("master", &other, MergeStrategy::ThreeWay, &meta("r", 12), None, ContextOptions::default()),
        Err(quadgit_core::Error::NotAnAncestor(..))
    ));
}

#[test]
fn predicate_switch_widens_conflicts() {
    let p = |s: &str, o: &str| Triple::new(ex(s), ex("sharedPred"), ex(o));
    let base = Partition::new();
    let ours = part(&[vec![p("a", "b")]]);
    let theirs = part(&[vec![p("c", "d")]]);
    assert!(matches!(
        context_merge(&base, &ours, &theirs, ContextOptions::default()),
        ContextMerge::Clean(_)
    ));
    assert!(matches!(
        context_merge(&base, &ours, &theirs, ContextOptions { predicate_nodes: true }),
        ContextMerge::Conflict(_)
    ));
}
