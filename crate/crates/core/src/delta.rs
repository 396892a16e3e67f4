//! Differences between graphs as sets of added and removed atomic graphs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::atomic::{canonical_partition, flatten, AtomicError, CanonicalAtomicGraph, Partition};
use crate::rdf::{parse_nquads_str, write_quad_line, Dataset, Graph, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeltaError {
    #[error("addition already present in the base graph")]
    NotDisjointWithBase,
    #[error("removal of an atomic graph that is not in the base graph")]
    RemovalNotPresent,
    #[error("an atomic graph is both added and removed")]
    AddRemoveOverlap,
    #[error("changeset has no effect")]
    EmptyChangeset,
    #[error(transparent)]
    Atomic(#[from] AtomicError),
}

/// Added and removed canonical atomic graphs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Delta {
    pub additions: Partition,
    pub removals: Partition,
}

impl Delta {
    pub fn new(additions: Partition, removals: Partition) -> Self {
        Delta {
            additions,
            removals,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.additions.is_empty() && self.removals.is_empty()
    }

    pub fn invert(&self) -> Delta {
        Delta {
            additions: self.removals.clone(),
            removals: self.additions.clone(),
        }
    }
}

/// A delta that has been checked against a base graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Changeset(Delta);

impl Changeset {
    pub fn delta(&self) -> &Delta {
        &self.0
    }

    pub fn into_delta(self) -> Delta {
        self.0
    }
}

/// `(P(g2) \ P(g), P(g) \ P(g2))`. The result may be empty.
pub fn diff(g: &Graph, g2: &Graph) -> Result<Delta, AtomicError> {
    Ok(diff_partitions(&canonical_partition(g)?, &canonical_partition(g2)?))
}

pub fn diff_partitions(from: &Partition, to: &Partition) -> Delta {
    Delta {
        additions: to.difference(from).cloned().collect(),
        removals: from.difference(to).cloned().collect(),
    }
}

pub fn invert(d: &Delta) -> Delta {
    d.invert()
}

/// Checks the four changeset conditions against `g`.
pub fn validate(g: &Graph, d: &Delta) -> Result<Changeset, DeltaError> {
    validate_partition(&canonical_partition(g)?, d)
}

pub fn validate_partition(base: &Partition, d: &Delta) -> Result<Changeset, DeltaError> {
    if d.additions.iter().any(|a| base.contains(a)) {
        return Err(DeltaError::NotDisjointWithBase);
    }
    if !d.removals.is_subset(base) {
        return Err(DeltaError::RemovalNotPresent);
    }
    if d.additions.iter().any(|a| d.removals.contains(a)) {
        return Err(DeltaError::AddRemoveOverlap);
    }
    if d.is_empty() {
        return Err(DeltaError::EmptyChangeset);
    }
    Ok(Changeset(d.clone()))
}

/// Validates `d` against `g` and returns `∪((P(g) \ C⁻) ∪ C⁺)`.
pub fn apply(g: &Graph, d: &Delta) -> Result<Graph, DeltaError> {
    let base = canonical_partition(g)?;
    let cs = validate_partition(&base, d)?;
    Ok(flatten(&apply_partition(&base, cs.delta())))
}

/// Set arithmetic of application without validation.
pub fn apply_partition(base: &Partition, d: &Delta) -> Partition {
    base.difference(&d.removals)
        .chain(d.additions.iter())
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GraphChangeKind {
    Modified,
    Added,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphChange {
    pub kind: GraphChangeKind,
    pub delta: Delta,
}

/// Per-graph deltas over a dataset. Entries never hold an empty delta.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetDelta {
    graphs: BTreeMap<String, GraphChange>,
    default: Option<Delta>,
}

impl DatasetDelta {
    pub fn new() -> Self {
        DatasetDelta::default()
    }

    /// Records a change for a named graph. Empty deltas are dropped.
    pub fn insert(&mut self, graph: impl Into<String>, kind: GraphChangeKind, delta: Delta) {
        let graph = graph.into();
        if delta.is_empty() {
            self.graphs.remove(&graph);
        } else {
            self.graphs.insert(graph, GraphChange { kind, delta });
        }
    }

    /// Records a change to the unversioned default graph.
    pub fn set_default(&mut self, delta: Delta) {
        self.default = (!delta.is_empty()).then_some(delta);
    }

    pub fn default_delta(&self) -> Option<&Delta> {
        self.default.as_ref()
    }

    pub fn get(&self, graph: &str) -> Option<&GraphChange> {
        self.graphs.get(graph)
    }

    pub fn graphs(&self) -> impl Iterator<Item = (&str, &GraphChange)> {
        self.graphs.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty() && self.default.is_none()
    }

    pub fn invert(&self) -> DatasetDelta {
        let graphs = self
            .graphs
            .iter()
            .map(|(g, c)| {
                let kind = match c.kind {
                    GraphChangeKind::Added => GraphChangeKind::Removed,
                    GraphChangeKind::Removed => GraphChangeKind::Added,
                    GraphChangeKind::Modified => GraphChangeKind::Modified,
                };
                (
                    g.clone(),
                    GraphChange {
                        kind,
                        delta: c.delta.invert(),
                    },
                )
            })
            .collect();
        DatasetDelta {
            graphs,
            default: self.default.as_ref().map(Delta::invert),
        }
    }

    /// Renders the textual delta format: a `graph <iri>` header (followed by
    /// `added` or `removed` when the graph appears or disappears) and one
    /// `+ `/`- ` prefixed N-Quads line per triple. Atomic graphs are written
    /// in key order with their triples adjacent.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (graph, change) in &self.graphs {
            out.push_str("graph <");
            out.push_str(graph);
            out.push('>');
            match change.kind {
                GraphChangeKind::Added => out.push_str(" added"),
                GraphChangeKind::Removed => out.push_str(" removed"),
                GraphChangeKind::Modified => {}
            }
            out.push('\n');
            write_atoms(&mut out, '-', &change.delta.removals, graph);
            write_atoms(&mut out, '+', &change.delta.additions, graph);
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output.
    pub fn from_text(text: &str) -> Result<DatasetDelta, ParseError> {
        let mut out = DatasetDelta::new();
        let mut current: Option<(String, GraphChangeKind, String, String)> = None;
        let finish = |out: &mut DatasetDelta,
                      cur: Option<(String, GraphChangeKind, String, String)>|
         -> Result<(), ParseError> {
            if let Some((graph, kind, adds, dels)) = cur {
                let to_partition = |text: &str| -> Result<Partition, ParseError> {
                    let d = parse_nquads_str(text)?;
                    let g = d.graph(&graph).cloned().unwrap_or_default();
                    canonical_partition(&g).map_err(|e| ParseError {
                        line: 0,
                        message: e.to_string(),
                    })
                };
                out.insert(
                    graph.clone(),
                    kind,
                    Delta::new(to_partition(&adds)?, to_partition(&dels)?),
                );
            }
            Ok(())
        };
        for (idx, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix("graph <") {
                finish(&mut out, current.take())?;
                let (iri, tail) = rest.split_once('>').ok_or_else(|| ParseError {
                    line: idx + 1,
                    message: "unterminated graph header".into(),
                })?;
                let kind = match tail.trim() {
                    "" => GraphChangeKind::Modified,
                    "added" => GraphChangeKind::Added,
                    "removed" => GraphChangeKind::Removed,
                    other => {
                        return Err(ParseError {
                            line: idx + 1,
                            message: format!("unknown graph marker {other:?}"),
                        })
                    }
                };
                current = Some((iri.to_owned(), kind, String::new(), String::new()));
            } else if line.trim().is_empty() {
                continue;
            } else {
                let Some((_, _, adds, dels)) = current.as_mut() else {
                    return Err(ParseError {
                        line: idx + 1,
                        message: "change line before graph header".into(),
                    });
                };
                let (target, body) = if let Some(b) = line.strip_prefix("+ ") {
                    (adds, b)
                } else if let Some(b) = line.strip_prefix("- ") {
                    (dels, b)
                } else {
                    return Err(ParseError {
                        line: idx + 1,
                        message: "expected '+ ' or '- ' prefix".into(),
                    });
                };
                target.push_str(body);
                target.push('\n');
            }
        }
        finish(&mut out, current.take())?;
        Ok(out)
    }
}

fn write_atoms(out: &mut String, sign: char, atoms: &Partition, graph: &str) {
    for atom in atoms {
        let mut lines: Vec<String> = atom
            .triples()
            .iter()
            .map(|t| {
                let mut line = String::new();
                write_quad_line(&mut line, t, Some(graph));
                line
            })
            .collect();
        lines.sort_unstable();
        for line in lines {
            let _ = write!(out, "{sign} {line}");
        }
    }
}

/// Per-graph diff of two datasets. Default graphs are compared as well.
pub fn diff_datasets(from: &Dataset, to: &Dataset) -> Result<DatasetDelta, AtomicError> {
    let mut out = DatasetDelta::new();
    let empty = Graph::new();
    let mut names: Vec<&str> = from.graph_names().chain(to.graph_names()).collect();
    names.sort_unstable();
    names.dedup();
    for name in names {
        let (a, b) = (from.graph(name), to.graph(name));
        let kind = match (a, b) {
            (None, Some(_)) => GraphChangeKind::Added,
            (Some(_), None) => GraphChangeKind::Removed,
            _ => GraphChangeKind::Modified,
        };
        let delta = diff(a.unwrap_or(&empty), b.unwrap_or(&empty))?;
        out.insert(name, kind, delta);
    }
    out.set_default(diff(from.default_graph(), to.default_graph())?);
    Ok(out)
}

/// Applies every per-graph delta after validating it against `dataset`.
pub fn apply_dataset(dataset: &Dataset, dd: &DatasetDelta) -> Result<Dataset, DeltaError> {
    let mut out = dataset.clone();
    let empty = Graph::new();
    for (name, change) in dd.graphs() {
        let current = dataset.graph(name).unwrap_or(&empty);
        out.set_graph(name, apply(current, &change.delta)?);
    }
    if let Some(d) = dd.default_delta() {
        out.set_default_graph(apply(dataset.default_graph(), d)?);
    }
    Ok(out)
}

/// Convenience: a delta adding or removing exactly the given atomic graphs.
pub fn delta_of<I, J>(additions: I, removals: J) -> Delta
where
    I: IntoIterator<Item = CanonicalAtomicGraph>,
    J: IntoIterator<Item = CanonicalAtomicGraph>,
{
    Delta::new(additions.into_iter().collect(), removals.into_iter().collect())
}
