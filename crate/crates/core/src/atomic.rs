//! Atomic graphs and canonical blank-node labelling.
//!
//! A graph is split into atomic graphs: every ground triple stands alone and
//! triples sharing blank nodes (transitively) stay together. Each atomic graph
//! is then relabelled canonically so that isomorphic atomic graphs produce the
//! same bytes. All diff and merge arithmetic works on sets of these canonical
//! atomic graphs.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use sha1::{Digest, Sha1};
use thiserror::Error;

use crate::rdf::{write_term, write_triple_line, Dataset, Graph, Term, Triple};

/// Upper bound on candidate blank-node orderings tried per atomic graph (8!).
pub const MAX_PERMUTATIONS: u128 = 40_320;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AtomicError {
    #[error(
        "canonicalization too hard: {blanks} blank nodes leave {permutations} candidate orderings (limit {MAX_PERMUTATIONS})"
    )]
    TooHard { blanks: usize, permutations: u128 },
}

/// A graph that cannot be split into two parts with disjoint blank nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomicGraph {
    triples: Vec<Triple>,
    blanks: BTreeSet<String>,
}

impl AtomicGraph {
    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn blanks(&self) -> &BTreeSet<String> {
        &self.blanks
    }

    pub fn to_graph(&self) -> Graph {
        self.triples.iter().cloned().collect()
    }
}

/// A canonically labelled atomic graph. Equality, ordering and hashing all go
/// through [`key`](Self::key), its sorted N-Triples serialization.
#[derive(Clone)]
pub struct CanonicalAtomicGraph {
    key: Arc<str>,
    triples: Arc<[Triple]>,
}

impl CanonicalAtomicGraph {
    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn is_ground(&self) -> bool {
        self.triples.len() == 1 && !self.triples[0].has_blank()
    }

    pub fn to_graph(&self) -> Graph {
        self.triples.iter().cloned().collect()
    }
}

impl PartialEq for CanonicalAtomicGraph {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for CanonicalAtomicGraph {}

impl PartialOrd for CanonicalAtomicGraph {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CanonicalAtomicGraph {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

impl Hash for CanonicalAtomicGraph {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

impl fmt::Debug for CanonicalAtomicGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("CanonicalAtomicGraph").field(&self.key).finish()
    }
}

/// The canonical atomic partition of a graph.
pub type Partition = BTreeSet<CanonicalAtomicGraph>;

/// Splits `graph` into atomic graphs.
pub fn partition(graph: &Graph) -> Vec<AtomicGraph> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    for t in graph {
        for b in t.blanks() {
            let next = index.len();
            index.entry(b).or_insert(next);
        }
    }
    let mut uf = UnionFind::new(index.len());
    for t in graph {
        if let (Some(s), Some(o)) = (t.subject.as_blank(), t.object.as_blank()) {
            uf.union(index[s], index[o]);
        }
    }

    let mut out = Vec::new();
    let mut groups: BTreeMap<usize, AtomicGraph> = BTreeMap::new();
    for t in graph {
        match t.blanks().next() {
            None => out.push(AtomicGraph {
                triples: vec![t.clone()],
                blanks: BTreeSet::new(),
            }),
            Some(b) => {
                let root = uf.find(index[b]);
                let group = groups.entry(root).or_insert_with(|| AtomicGraph {
                    triples: Vec::new(),
                    blanks: BTreeSet::new(),
                });
                group.triples.push(t.clone());
                group.blanks.extend(t.blanks().map(str::to_owned));
            }
        }
    }
    out.extend(groups.into_values());
    out
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Relabels the blank nodes of an atomic graph canonically.
///
/// Candidate orderings of the blank nodes are assigned placeholder labels
/// `p0..p(n-1)` and the lexicographically smallest sorted serialization wins.
/// When `n!` is within [`MAX_PERMUTATIONS`] every ordering is tried. Larger
/// graphs are first split into colour classes by iterative neighbourhood
/// refinement and only orderings within each class are tried. Final labels
/// are the first 12 hex digits of the SHA-1 of the winning serialization,
/// followed by `n` and the placeholder index.
pub fn canonical_label(atomic: &AtomicGraph) -> Result<CanonicalAtomicGraph, AtomicError> {
    if atomic.blanks.is_empty() {
        let mut key = String::new();
        let mut lines: Vec<String> = atomic
            .triples
            .iter()
            .map(|t| {
                let mut line = String::new();
                write_triple_line(&mut line, t);
                line
            })
            .collect();
        lines.sort_unstable();
        lines.dedup();
        key.extend(lines);
        return Ok(CanonicalAtomicGraph {
            key: key.into(),
            triples: atomic.triples.clone().into(),
        });
    }

    let blanks: Vec<&str> = atomic.blanks.iter().map(String::as_str).collect();
    let n = blanks.len();
    let slot: HashMap<&str, usize> = blanks.iter().enumerate().map(|(i, b)| (*b, i)).collect();
    // triples with blank positions replaced by slot indices
    let shapes: Vec<Shape> = atomic
        .triples
        .iter()
        .map(|t| Shape::new(t, &slot))
        .collect();

    let cells = if factorial(n) <= MAX_PERMUTATIONS {
        vec![(0..n).collect::<Vec<_>>()]
    } else {
        let cells = refine(&shapes, n);
        let permutations: u128 = cells
            .iter()
            .map(|c| factorial(c.len()))
            .fold(1u128, |acc, f| acc.saturating_mul(f));
        if permutations > MAX_PERMUTATIONS {
            return Err(AtomicError::TooHard {
                blanks: n,
                permutations,
            });
        }
        cells
    };

    let placeholders: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let mut best: Option<(String, Vec<usize>)> = None;
    let mut order = Vec::with_capacity(n);
    let mut labels = vec![String::new(); n];
    let mut lines = vec![String::new(); shapes.len()];
    let mut text = String::new();
    for_each_cell_ordering(&cells, 0, &mut order, &mut |ordering| {
        // ordering[k] = slot placed at position k
        for (pos, &s) in ordering.iter().enumerate() {
            labels[s].clone_from(&placeholders[pos]);
        }
        render_into(&shapes, &labels, &mut lines, &mut text);
        if best.as_ref().is_none_or(|(b, _)| text < *b) {
            let mut label_of = vec![0usize; n];
            for (pos, &s) in ordering.iter().enumerate() {
                label_of[s] = pos;
            }
            best = Some((std::mem::take(&mut text), label_of));
        }
    });
    let (winner, label_of) = best.expect("at least one ordering");

    let digest = Sha1::digest(winner.as_bytes());
    let prefix: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    let final_labels: Vec<String> = (0..n).map(|s| format!("{prefix}n{}", label_of[s])).collect();

    let triples: Vec<Triple> = shapes.iter().map(|shape| shape.materialize(&final_labels)).collect();
    let key = render(&shapes, &final_labels);
    Ok(CanonicalAtomicGraph {
        key: key.into(),
        triples: triples.into(),
    })
}

/// The canonical atomic partition: isomorphic atomic graphs collapse.
pub fn canonical_partition(graph: &Graph) -> Result<Partition, AtomicError> {
    partition(graph).iter().map(canonical_label).collect()
}

/// Isomorphism under atomic-graph deduplication.
pub fn iso_equal(g: &Graph, h: &Graph) -> Result<bool, AtomicError> {
    Ok(canonical_partition(g)? == canonical_partition(h)?)
}

/// Union of the atomic graphs of a partition.
pub fn flatten<'a, I>(atoms: I) -> Graph
where
    I: IntoIterator<Item = &'a CanonicalAtomicGraph>,
{
    atoms
        .into_iter()
        .flat_map(|a| a.triples().iter().cloned())
        .collect()
}

/// Graph with canonical blank labels and isomorphic duplicates removed.
pub fn canonicalize_graph(graph: &Graph) -> Result<Graph, AtomicError> {
    Ok(flatten(&canonical_partition(graph)?))
}

/// Canonicalizes every graph of a dataset, including the default graph.
pub fn canonicalize_dataset(dataset: &Dataset) -> Result<Dataset, AtomicError> {
    let mut out = Dataset::new();
    out.set_default_graph(canonicalize_graph(dataset.default_graph())?);
    for (name, graph) in dataset.named_graphs() {
        out.set_graph(name, canonicalize_graph(graph)?);
    }
    Ok(out)
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).fold(1u128, |acc, k| acc.saturating_mul(k))
}

#[derive(Clone)]
enum Slot {
    /// Serialized ground term.
    Ground(String),
    Blank(usize),
}

struct Shape {
    subject: Slot,
    predicate: String,
    object: Slot,
    triple: Triple,
}

fn term_text(term: &Term) -> String {
    let mut out = String::new();
    write_term(&mut out, term);
    out
}

impl Shape {
    fn new(t: &Triple, slot: &HashMap<&str, usize>) -> Self {
        let conv = |term: &Term| match term {
            Term::Blank(b) => Slot::Blank(slot[b.as_str()]),
            other => Slot::Ground(term_text(other)),
        };
        Shape {
            subject: conv(&t.subject),
            predicate: term_text(&t.predicate),
            object: conv(&t.object),
            triple: t.clone(),
        }
    }

    fn write(&self, out: &mut String, labels: &[String]) {
        let slot = |out: &mut String, s: &Slot| match s {
            Slot::Ground(text) => out.push_str(text),
            Slot::Blank(i) => {
                out.push_str("_:");
                out.push_str(&labels[*i]);
            }
        };
        slot(out, &self.subject);
        out.push(' ');
        out.push_str(&self.predicate);
        out.push(' ');
        slot(out, &self.object);
        out.push_str(" .\n");
    }

    fn materialize(&self, labels: &[String]) -> Triple {
        let conv = |s: &Slot, original: &Term| match s {
            Slot::Ground(_) => original.clone(),
            Slot::Blank(i) => Term::Blank(labels[*i].clone()),
        };
        Triple::new(
            conv(&self.subject, &self.triple.subject),
            self.triple.predicate.clone(),
            conv(&self.object, &self.triple.object),
        )
    }
}

fn render(shapes: &[Shape], labels: &[String]) -> String {
    let mut lines = vec![String::new(); shapes.len()];
    let mut text = String::new();
    render_into(shapes, labels, &mut lines, &mut text);
    text
}

/// Sorted, deduplicated lines of `shapes` into `text`, reusing `lines`.
fn render_into(shapes: &[Shape], labels: &[String], lines: &mut [String], text: &mut String) {
    for (line, shape) in lines.iter_mut().zip(shapes) {
        line.clear();
        shape.write(line, labels);
    }
    lines.sort_unstable();
    text.clear();
    let mut prev: Option<&str> = None;
    for line in lines.iter() {
        if prev != Some(line.as_str()) {
            text.push_str(line);
        }
        prev = Some(line);
    }
}

/// Colour refinement to a fixpoint. Returns the colour classes ordered by
/// colour; the order depends only on graph structure, not on input labels.
fn refine(shapes: &[Shape], n: usize) -> Vec<Vec<usize>> {
    let mut colour = vec![0usize; n];
    let mut classes = 1usize;
    loop {
        let mut signatures: Vec<String> = Vec::with_capacity(n);
        for b in 0..n {
            let mut edges: Vec<String> = Vec::new();
            let describe = |s: &Slot, colour: &[usize]| match s {
                Slot::Ground(t) => format!("g{t}"),
                Slot::Blank(i) => format!("b{}", colour[*i]),
            };
            for shape in shapes {
                if matches!(shape.subject, Slot::Blank(i) if i == b) {
                    edges.push(format!(
                        "o {} {}",
                        shape.predicate,
                        describe(&shape.object, &colour)
                    ));
                }
                if matches!(shape.object, Slot::Blank(i) if i == b) {
                    edges.push(format!(
                        "i {} {}",
                        shape.predicate,
                        describe(&shape.subject, &colour)
                    ));
                }
            }
            edges.sort_unstable();
            signatures.push(format!("{}|{}", colour[b], edges.join("\u{1}")));
        }
        let mut distinct: Vec<&String> = signatures.iter().collect();
        distinct.sort_unstable();
        distinct.dedup();
        let next: Vec<usize> = signatures
            .iter()
            .map(|s| distinct.binary_search(&s).expect("present"))
            .collect();
        let stable = distinct.len() == classes;
        colour = next;
        classes = distinct.len();
        if stable {
            break;
        }
    }
    let mut cells = vec![Vec::new(); classes];
    for (b, &c) in colour.iter().enumerate() {
        cells[c].push(b);
    }
    cells
}

fn for_each_cell_ordering(
    cells: &[Vec<usize>],
    idx: usize,
    order: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if idx == cells.len() {
        visit(order);
        return;
    }
    let mut cell = cells[idx].clone();
    permute(&mut cell, 0, &mut |perm| {
        let mark = order.len();
        order.extend_from_slice(perm);
        for_each_cell_ordering(cells, idx + 1, order, visit);
        order.truncate(mark);
    });
}

fn permute(items: &mut [usize], k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Term {
        Term::iri(format!("http://ex.org/{s}"))
    }

    fn t(s: Term, p: &str, o: Term) -> Triple {
        Triple::new(s, iri(p), o)
    }

    #[test]
    fn ground_triple_is_its_own_atomic_graph() {
        let g: Graph = [t(iri("s"), "p", iri("o"))].into_iter().collect();
        let parts = partition(&g);
        assert_eq!(parts.len(), 1);
        let c = canonical_label(&parts[0]).unwrap();
        assert_eq!(c.key(), "<http://ex.org/s> <http://ex.org/p> <http://ex.org/o> .\n");
        assert!(c.is_ground());
    }

    #[test]
    fn blank_connected_triples_group_together() {
        let g: Graph = [
            t(Term::blank("b1"), "p", iri("o")),
            t(Term::blank("b1"), "q", Term::blank("b2")),
            t(iri("s"), "p", iri("o")),
        ]
        .into_iter()
        .collect();
        let mut sizes: Vec<usize> = partition(&g).iter().map(|a| a.triples().len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2]);
    }

    #[test]
    fn self_loop_is_one_atomic_graph() {
        let g: Graph = [t(Term::blank("a"), "p", Term::blank("a"))].into_iter().collect();
        let parts = partition(&g);
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].blanks().len(), 1);
        canonical_label(&parts[0]).unwrap();
    }

    #[test]
    fn single_blank_relabeling_is_invisible() {
        let a: Graph = [t(Term::blank("x"), "p", iri("o"))].into_iter().collect();
        let b: Graph = [t(Term::blank("y"), "p", iri("o"))].into_iter().collect();
        assert_eq!(canonical_partition(&a).unwrap(), canonical_partition(&b).unwrap());
    }

    #[test]
    fn isomorphic_duplicates_collapse() {
        let g: Graph = [
            t(Term::blank("x"), "p", iri("o")),
            t(Term::blank("y"), "p", iri("o")),
        ]
        .into_iter()
        .collect();
        assert_eq!(canonical_partition(&g).unwrap().len(), 1);
    }

    #[test]
    fn label_format_is_hash_prefix_and_ordinal() {
        let g: Graph = [t(Term::blank("x"), "p", iri("o"))].into_iter().collect();
        let p = canonical_partition(&g).unwrap();
        let atom = p.iter().next().unwrap();
        let label = atom.triples()[0].subject.as_blank().unwrap().to_owned();
        assert_eq!(label.len(), 14);
        assert!(label[..12].chars().all(|c| c.is_ascii_hexdigit() && !c.is_uppercase()));
        assert_eq!(&label[12..], "n0");
        let placeholder = "_:p0 <http://ex.org/p> <http://ex.org/o> .\n";
        let digest = Sha1::digest(placeholder.as_bytes());
        let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        assert_eq!(&label[..12], hex);
    }

    #[test]
    fn canonical_label_is_idempotent() {
        let g: Graph = [
            t(Term::blank("a"), "p", Term::blank("b")),
            t(Term::blank("b"), "p", Term::blank("c")),
            t(Term::blank("c"), "p", Term::blank("a")),
        ]
        .into_iter()
        .collect();
        let once = canonicalize_graph(&g).unwrap();
        let twice = canonicalize_graph(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn iso_equal_basics() {
        let g: Graph = [t(iri("s"), "p", iri("o"))].into_iter().collect();
        let h: Graph = [t(iri("s"), "p", iri("o2"))].into_iter().collect();
        assert!(iso_equal(&g, &g).unwrap());
        assert!(!iso_equal(&g, &h).unwrap());
    }

    /// A directed 10-blank chain has 10! orderings but refinement tells
    /// every position apart.
    #[test]
    fn large_chain_uses_refinement() {
        let chain = |prefix: &str| -> Graph {
            (0..9)
                .map(|i| {
                    t(
                        Term::blank(format!("{prefix}{i}")),
                        "next",
                        Term::blank(format!("{prefix}{}", i + 1)),
                    )
                })
                .collect()
        };
        let a = canonical_partition(&chain("a")).unwrap();
        let b = canonical_partition(&chain("zz")).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a, b);
    }

    #[test]
    fn symmetric_blank_star_is_too_hard() {
        // 9 indistinguishable leaves around one hub: 9! orderings remain.
        let g: Graph = (0..9)
            .map(|i| t(Term::blank("hub"), "p", Term::blank(format!("leaf{i}"))))
            .collect();
        let err = canonical_partition(&g).unwrap_err();
        assert!(matches!(err, AtomicError::TooHard { blanks: 10, .. }));
    }
}
