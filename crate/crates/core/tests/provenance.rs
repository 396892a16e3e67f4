mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use common::*;
use quadgit_core::merge::ContextOptions;
use quadgit_core::provenance::{
    blame, blame_by_commit, blame_lines, build_provenance, iso_time, ProvenanceOptions, LOCAL,
    PROV, QUIT,
};
use quadgit_core::query::{eval_select, parse_query, Query};
use quadgit_core::rdf::{Dataset, Term};
use quadgit_core::store::{MemStore, ObjectId, ObjectStore, Signature};
use quadgit_core::{CommitMeta, MergeOutcome, MergeStrategy, Repository};

fn select(d: &Dataset, q: &str) -> Vec<BTreeMap<String, Term>> {
    let Query::Select(s) = parse_query(q).unwrap() else { panic!() };
    eval_select(d, &s).rows
}

fn history() -> (Repository<MemStore>, Vec<ObjectId>) {
    let repo = mem_repo();
    let alice = Signature::new("Alice", "alice@example.org", 1_487_675_007, 60);
    let m1 = CommitMeta::new(alice.clone(), "Example Import")
        .with_metadata("Source", "http://dbpedia.org/data/Leipzig.n3");
    let c1 = repo
        .commit_change("master", &single(GRAPH1, &[t("a", "p", "1")]), &m1)
        .unwrap()
        .commit_id()
        .unwrap();
    let m2 = CommitMeta::new(Signature::new("Bob", "bob@example.org", 1_487_675_100, 0), "Fix")
        .with_metadata("Update", "INSERT DATA { GRAPH <http://example.org/graph1> { <http://ex.org/a> <http://ex.org/p> <http://ex.org/2> } }");
    let c2 = repo
        .commit_change("master", &single(GRAPH1, &[t("a", "p", "2")]), &m2)
        .unwrap()
        .commit_id()
        .unwrap();
    (repo, vec![c1, c2])
}

fn single(graph: &str, add: &[quadgit_core::rdf::Triple]) -> quadgit_core::delta::DatasetDelta {
    use quadgit_core::atomic::canonical_partition;
    use quadgit_core::delta::{delta_of, DatasetDelta, GraphChangeKind};
    let g = add.iter().cloned().collect();
    let mut dd = DatasetDelta::new();
    dd.insert(graph, GraphChangeKind::Modified, delta_of(canonical_partition(&g).unwrap(), []));
    dd
}

#[test]
fn activities_agents_and_entities() {
    let (repo, ids) = history();
    let prov = build_provenance(&repo, &ProvenanceOptions { branches: vec![], depth: None, include_updates: true }).unwrap();
    let prefixes = format!("PREFIX prov: <{PROV}> PREFIX quit: <{QUIT}> ");

    let rows = select(&prov, &format!("{prefixes} SELECT ?c ?hex WHERE {{ ?c a prov:Activity ; quit:hex ?hex }}"));
    let hexes: BTreeSet<String> = rows.iter().map(|r| r["hex"].to_string()).collect();
    let expected: BTreeSet<String> = ids.iter().map(|i| format!("\"{}\"", i.to_hex())).collect();
    assert_eq!(hexes, expected);

    let rows = select(&prov, &format!("{prefixes} SELECT ?c ?src WHERE {{ ?c a quit:Import ; quit:dataSource ?src }}"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["c"], Term::iri(format!("{LOCAL}{}", ids[0])));
    assert_eq!(rows[0]["src"], Term::iri("http://dbpedia.org/data/Leipzig.n3"));

    let rows = select(&prov, &format!("{prefixes} SELECT ?c WHERE {{ ?c a quit:Transformation ; quit:query ?q ; prov:wasInformedBy ?p }}"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["c"], Term::iri(format!("{LOCAL}{}", ids[1])));

    let rows = select(
        &prov,
        &format!("{prefixes} SELECT ?name WHERE {{ ?c prov:qualifiedAssociation ?a . ?a prov:hadRole quit:author ; prov:agent ?ag . ?ag <http://www.w3.org/2000/01/rdf-schema#label> ?name }}"),
    );
    let names: BTreeSet<String> = rows.iter().map(|r| r["name"].to_string()).collect();
    assert_eq!(names, BTreeSet::from(["\"Alice\"".to_owned(), "\"Bob\"".to_owned()]));

    let rows = select(&prov, &format!("{prefixes} SELECT ?e WHERE {{ ?e prov:specializationOf <{GRAPH1}> }}"));
    assert_eq!(rows.len(), 2);

    let rows = select(&prov, &format!("{prefixes} SELECT ?t WHERE {{ <{LOCAL}{}> prov:startedAtTime ?t }}", ids[0]));
    let Term::Literal(lit) = &rows[0]["t"] else { panic!() };
    assert_eq!(lit.lexical(), "2017-02-21T12:03:27+01:00");

    // additions of the second commit live in their own named graph
    let adds = format!("{LOCAL}{}/add/{}", ids[1], quadgit_core::store::encode_component(GRAPH1));
    assert_eq!(prov.graph(&adds).unwrap().len(), 1);
}

#[test]
fn depth_and_branch_filters() {
    let (repo, ids) = history();
    repo.create_branch(&ids[0].to_hex(), "old").unwrap();
    let opts = |branches: Vec<String>, depth| ProvenanceOptions { branches, depth, include_updates: false };
    let count = |d: &Dataset| {
        select(d, &format!("SELECT ?c WHERE {{ ?c a <{PROV}Activity> }}")).len()
    };
    assert_eq!(count(&build_provenance(&repo, &opts(vec![], None)).unwrap()), 2);
    assert_eq!(count(&build_provenance(&repo, &opts(vec!["master".into()], Some(1))).unwrap()), 1);
    assert_eq!(count(&build_provenance(&repo, &opts(vec!["old".into()], None)).unwrap()), 1);
    assert!(build_provenance(&repo, &opts(vec![], None)).unwrap().named_graphs().next().is_none());
    assert!(build_provenance(&repo, &opts(vec!["nope".into()], None)).is_err());
}

/// Commits reachable from `at` through commits that contain the atom, whose
/// parents all lack it.
fn oracle_introducers(
    repo: &Repository<MemStore>,
    at: ObjectId,
    graph: &str,
    key: &str,
) -> BTreeSet<ObjectId> {
    let has = |c: ObjectId| {
        oracle_dataset(&repo.dataset_at(&c).unwrap())
            .get(graph)
            .is_some_and(|p| p.contains(key))
    };
    let mut seen = HashSet::from([at]);
    let mut queue = VecDeque::from([at]);
    let mut out = BTreeSet::new();
    while let Some(c) = queue.pop_front() {
        let parents = repo.store().get_commit(&c).unwrap().parents;
        let holding: Vec<ObjectId> = parents.into_iter().filter(|p| has(*p)).collect();
        if holding.is_empty() {
            out.insert(c);
        }
        for p in holding {
            if seen.insert(p) {
                queue.push_back(p);
            }
        }
    }
    out
}

#[test]
fn blame_matches_dag_oracle() {
    // root -> (a1 on master, b1 on side) -> merge -> master re-adds
    let repo = mem_repo();
    change(&repo, "master", GRAPH1, &[t("x", "p", "root")], &[], 1);
    repo.create_branch("master", "side").unwrap();
    change(&repo, "master", GRAPH1, &[t("x", "p", "shared"), t("x", "p", "m")], &[], 2);
    change(&repo, "side", GRAPH1, &[t("x", "p", "shared")], &[t("x", "p", "root")], 3);
    let MergeOutcome::Committed(_) = repo
        .merge("master", "side", MergeStrategy::ThreeWay, &meta("merge", 4), None, ContextOptions::default())
        .unwrap()
    else {
        panic!()
    };
    let head = change(&repo, "master", GRAPH1, &[t("x", "p", "root")], &[], 5);

    let entries = blame(&repo, &head).unwrap();
    assert_eq!(entries.len(), 3);
    for e in &entries {
        let got: BTreeSet<ObjectId> = e.origins.iter().map(|o| o.commit).collect();
        let key = oracle_key(e.atom.triples());
        assert_eq!(got, oracle_introducers(&repo, head, &e.graph, &key), "{key}");
    }
    let shared = entries
        .iter()
        .find(|e| e.atom.key().contains("shared"))
        .unwrap();
    assert_eq!(shared.origins.len(), 2, "added independently on both branches");
    let times: Vec<i64> = shared.origins.iter().map(|o| o.committer.time).collect();
    assert_eq!(times, vec![2, 3]);

    let root = entries.iter().find(|e| e.atom.key().contains("root")).unwrap();
    assert_eq!(root.origins[0].commit, head, "removed by the merge, re-added at head");

    let lines = blame_lines(&entries);
    assert_eq!(lines.len(), 4);
    assert!(lines.iter().all(|l| l.contains(&format!("<{GRAPH1}> ."))));
    let sig = &shared.origins[0].author;
    assert!(lines.iter().any(|l| l.starts_with(&format!(
        "{} \"Tester\" {} ",
        shared.origins[0].commit,
        iso_time(sig)
    ))));
    assert_eq!(blame_by_commit(&entries).values().sum::<usize>(), 4);
}
