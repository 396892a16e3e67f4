//! Independent oracles and generators shared by the integration tests.
//! Nothing here calls the crate's canonicalization or partitioning.
#![allow(dead_code)]

pub mod git;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use quadgit_core::rdf::{Dataset, Graph, Literal, Term, Triple};
use quadgit_core::store::{MemStore, Signature};
use quadgit_core::{CommitMeta, Repository};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha1::{Digest, Sha1};

pub const EX: &str = "http://ex.org/";

pub fn ex(local: &str) -> Term {
    Term::iri(format!("{EX}{local}"))
}

pub fn t(s: &str, p: &str, o: &str) -> Triple {
    Triple::new(ex(s), ex(p), ex(o))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn meta(msg: &str, time: i64) -> CommitMeta {
    CommitMeta::new(Signature::new("Tester", "tester@example.org", time, 0), msg)
}

pub fn mem_repo() -> Repository<MemStore> {
    Repository::new(MemStore::new("master"))
}

fn oracle_term(term: &Term, labels: &HashMap<&str, String>) -> String {
    match term {
        Term::Iri(i) => format!("<{i}>"),
        Term::Blank(b) => format!("_:{}", labels[b.as_str()]),
        Term::Literal(l) => match l.lang() {
            Some(lang) => format!("\"{}\"@{lang}", l.lexical()),
            None => format!("\"{}\"", l.lexical()),
        },
    }
}

fn oracle_serialize(triples: &[Triple], labels: &HashMap<&str, String>) -> String {
    let mut lines: Vec<String> = triples
        .iter()
        .map(|t| {
            format!(
                "{} {} {} .\n",
                oracle_term(&t.subject, labels),
                oracle_term(&t.predicate, labels),
                oracle_term(&t.object, labels)
            )
        })
        .collect();
    lines.sort();
    lines.dedup();
    lines.concat()
}

fn blanks_of(triples: &[Triple]) -> Vec<&str> {
    let mut out: BTreeSet<&str> = BTreeSet::new();
    for t in triples {
        for term in [&t.subject, &t.object] {
            if let Term::Blank(b) = term {
                out.insert(b);
            }
        }
    }
    out.into_iter().collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Canonical key of one atomic graph by brute force: the smallest sorted
/// serialization over all `p{i}` labellings, relabelled with the first 12
/// hex digits of its SHA-1.
pub fn oracle_key(triples: &[Triple]) -> String {
    let blanks = blanks_of(triples);
    if blanks.is_empty() {
        return oracle_serialize(triples, &HashMap::new());
    }
    let mut best: Option<(String, Vec<usize>)> = None;
    for perm in permutations(blanks.len()) {
        let labels: HashMap<&str, String> = blanks
            .iter()
            .zip(&perm)
            .map(|(b, i)| (*b, format!("p{i}")))
            .collect();
        let s = oracle_serialize(triples, &labels);
        if best.as_ref().is_none_or(|(b, _)| s < *b) {
            best = Some((s, perm));
        }
    }
    let (s, perm) = best.unwrap();
    let hex: String = Sha1::digest(s.as_bytes())[..6]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let labels: HashMap<&str, String> = blanks
        .iter()
        .zip(&perm)
        .map(|(b, i)| (*b, format!("{hex}n{i}")))
        .collect();
    oracle_serialize(triples, &labels)
}

/// Splits a graph into atomic graphs with a plain union-find over blanks.
pub fn oracle_atoms(graph: &Graph) -> Vec<Vec<Triple>> {
    let triples: Vec<Triple> = graph.iter().cloned().collect();
    let mut parent: Vec<usize> = (0..triples.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let mut owner: HashMap<&str, usize> = HashMap::new();
    for (i, t) in triples.iter().enumerate() {
        for term in [&t.subject, &t.object] {
            if let Term::Blank(b) = term {
                match owner.get(b.as_str()) {
                    Some(&j) => {
                        let (a, c) = (find(&mut parent, i), find(&mut parent, j));
                        parent[a] = c;
                    }
                    None => {
                        owner.insert(b, i);
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<Triple>> = BTreeMap::new();
    for (i, t) in triples.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(t.clone());
    }
    groups.into_values().collect()
}

/// Set of oracle keys of a graph's atomic graphs.
pub fn oracle_partition(graph: &Graph) -> BTreeSet<String> {
    oracle_atoms(graph).iter().map(|a| oracle_key(a)).collect()
}

pub fn oracle_dataset(d: &Dataset) -> BTreeMap<String, BTreeSet<String>> {
    d.named_graphs()
        .map(|(n, g)| (n.to_owned(), oracle_partition(g)))
        .filter(|(_, p)| !p.is_empty())
        .collect()
}

/// `(P(A) ∩ P(B)) ∪ (P(A) ∖ P(base)) ∪ (P(B) ∖ P(base))`.
pub fn oracle_three_way(
    base: &BTreeSet<String>,
    a: &BTreeSet<String>,
    b: &BTreeSet<String>,
) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = a.intersection(b).cloned().collect();
    out.extend(a.difference(base).cloned());
    out.extend(b.difference(base).cloned());
    out
}

/// Random terms over a small vocabulary, so that collisions and symmetric
/// blank structures are common.
pub struct Gen {
    pub rng: ChaCha8Rng,
    counter: u64,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: rng(seed),
            counter: 0,
        }
    }

    fn iri(&mut self, kind: &str, n: usize) -> Term {
        ex(&format!("{kind}{}", self.rng.gen_range(0..n)))
    }

    fn object(&mut self) -> Term {
        match self.rng.gen_range(0..6) {
            0 => Term::Literal(Literal::simple(format!("v{}", self.rng.gen_range(0..3)))),
            1 => Term::Literal(Literal::lang_string("w", "en")),
            _ => self.iri("o", 4),
        }
    }

    pub fn ground(&mut self) -> Triple {
        Triple::new(self.iri("s", 6), self.iri("p", 3), self.object())
    }

    /// A connected atomic graph with `blanks` blank nodes (0 gives a single
    /// ground triple). Labels are unique per call.
    pub fn atom(&mut self, blanks: usize) -> Vec<Triple> {
        if blanks == 0 {
            return vec![self.ground()];
        }
        self.counter += 1;
        let labels: Vec<Term> = (0..blanks)
            .map(|i| Term::blank(format!("g{}b{i}", self.counter)))
            .collect();
        let mut g = Graph::new();
        for i in 1..blanks {
            let j = self.rng.gen_range(0..i);
            let p = self.iri("p", 2);
            if self.rng.gen_bool(0.5) {
                g.insert(Triple::new(labels[i].clone(), p, labels[j].clone()));
            } else {
                g.insert(Triple::new(labels[j].clone(), p, labels[i].clone()));
            }
        }
        let extra = self.rng.gen_range(usize::from(blanks == 1)..=3);
        for _ in 0..extra {
            let b = labels[self.rng.gen_range(0..blanks)].clone();
            let p = self.iri("p", 2);
            let triple = match self.rng.gen_range(0..3) {
                0 => Triple::new(b, p, self.object()),
                1 => Triple::new(self.iri("s", 3), p, b),
                _ => Triple::new(b, p, labels[self.rng.gen_range(0..blanks)].clone()),
            };
            g.insert(triple);
        }
        g.iter().cloned().collect()
    }

    /// An atom with a random blank count in `0..=max_blanks`.
    pub fn any_atom(&mut self, max_blanks: usize) -> Vec<Triple> {
        let n = self.rng.gen_range(0..=max_blanks);
        self.atom(n)
    }

    /// Renames the blank nodes of `triples` by a random bijection onto
    /// fresh labels.
    pub fn relabel(&mut self, triples: &[Triple]) -> Vec<Triple> {
        let blanks = blanks_of(triples);
        let mut targets: Vec<usize> = (0..blanks.len()).collect();
        targets.shuffle(&mut self.rng);
        self.counter += 1;
        let c = self.counter;
        let map: HashMap<&str, Term> = blanks
            .iter()
            .zip(targets)
            .map(|(b, i)| (*b, Term::blank(format!("r{c}x{i}"))))
            .collect();
        let sub = |t: &Term| match t {
            Term::Blank(b) => map[b.as_str()].clone(),
            other => other.clone(),
        };
        triples
            .iter()
            .map(|t| Triple::new(sub(&t.subject), t.predicate.clone(), sub(&t.object)))
            .collect()
    }
}

pub fn graph_of(atoms: &[Vec<Triple>]) -> Graph {
    atoms.iter().flatten().cloned().collect()
}

pub const GRAPH1: &str = "http://example.org/graph1";
pub const GRAPH2: &str = "http://example.org/graph2";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";

pub fn president(who: &str) -> Triple {
    Triple::new(
        Term::iri(format!("http://example.org/{who}")),
        Term::iri("http://example.org/presidentOf"),
        Term::iri("http://example.org/USA"),
    )
}

pub fn label(resource: &str, text: &str) -> Triple {
    Triple::new(
        Term::iri(resource),
        Term::iri(RDFS_LABEL),
        Term::Literal(Literal::simple(text)),
    )
}

pub const OLD_LEIPZIG: &str = "http://example.org/Leipzig";
pub const NEW_LEIPZIG: &str = "http://aksw.org/Leipzig";

fn graph_delta(graph: &str, add: &[Triple], del: &[Triple]) -> quadgit_core::delta::DatasetDelta {
    use quadgit_core::atomic::canonical_partition;
    use quadgit_core::delta::{delta_of, DatasetDelta, GraphChangeKind};
    let a: Graph = add.iter().cloned().collect();
    let d: Graph = del.iter().cloned().collect();
    let mut dd = DatasetDelta::new();
    dd.insert(
        graph,
        GraphChangeKind::Modified,
        delta_of(canonical_partition(&a).unwrap(), canonical_partition(&d).unwrap()),
    );
    dd
}

/// Commits `add`/`del` to one graph of `branch`.
pub fn change<S: quadgit_core::store::ObjectStore>(
    repo: &Repository<S>,
    branch: &str,
    graph: &str,
    add: &[Triple],
    del: &[Triple],
    time: i64,
) -> quadgit_core::store::ObjectId {
    repo.commit_change(branch, &graph_delta(graph, add, del), &meta("change", time))
        .unwrap()
        .commit_id()
        .unwrap()
}

/// Two branches: the presidency conflict in graph 1 and the label fix
/// versus namespace move in graph 2.
pub fn presidency_fixture() -> Repository<MemStore> {
    let repo = mem_repo();
    change(&repo, "master", GRAPH2, &[label(OLD_LEIPZIG, "Lepizig")], &[], 1);
    repo.create_branch("master", "develop").unwrap();
    change(&repo, "master", GRAPH1, &[president("Obama")], &[], 2);
    change(
        &repo,
        "master",
        GRAPH2,
        &[label(OLD_LEIPZIG, "Leipzig")],
        &[label(OLD_LEIPZIG, "Lepizig")],
        3,
    );
    change(&repo, "develop", GRAPH1, &[president("Trump")], &[], 4);
    change(
        &repo,
        "develop",
        GRAPH2,
        &[label(NEW_LEIPZIG, "Lepizig")],
        &[label(OLD_LEIPZIG, "Lepizig")],
        5,
    );
    repo
}
