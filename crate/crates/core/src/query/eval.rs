use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use super::{
    ConstructQuery, GraphScope, ScopedPattern, SelectQuery, TriplePattern, UpdateOp,
    UpdateRequest, VarOrTerm, BLANK_VAR,
};
use crate::atomic::{canonical_partition, flatten, AtomicError, Partition};
use crate::delta::{diff_partitions, DatasetDelta, GraphChangeKind};
use crate::history::PartitionedDataset;
use crate::rdf::{write_term, Dataset, Graph, Quad, Term, Triple};

/// Projected variable bindings of one result row.
pub type Solution = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solutions {
    pub variables: Vec<String>,
    pub rows: Vec<Solution>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Bound {
    term: Term,
    /// Graph a blank node was found in; blank nodes never join across
    /// graphs.
    home: Option<Option<String>>,
}

type Row = BTreeMap<String, Bound>;

fn unify(row: &mut Row, part: &VarOrTerm, term: &Term, graph: Option<&str>) -> bool {
    match part {
        VarOrTerm::Term(c) => c == term,
        VarOrTerm::Var(v) => {
            let home = term.is_blank().then(|| graph.map(str::to_owned));
            match row.get(v) {
                Some(b) => b.term == *term && (b.home.is_none() || b.home == home),
                None => {
                    row.insert(
                        v.clone(),
                        Bound {
                            term: term.clone(),
                            home,
                        },
                    );
                    true
                }
            }
        }
    }
}

fn match_bgp(graph: &Graph, name: Option<&str>, triples: &[TriplePattern], rows: Vec<Row>) -> Vec<Row> {
    let mut rows = rows;
    for pattern in triples {
        let mut next = Vec::new();
        for row in &rows {
            for t in graph.iter() {
                let mut candidate = row.clone();
                if unify(&mut candidate, &pattern.subject, &t.subject, name)
                    && unify(&mut candidate, &pattern.predicate, &t.predicate, name)
                    && unify(&mut candidate, &pattern.object, &t.object, name)
                {
                    next.push(candidate);
                }
            }
        }
        rows = next;
        if rows.is_empty() {
            break;
        }
    }
    rows
}

fn match_patterns(d: &Dataset, patterns: &[ScopedPattern]) -> Vec<Row> {
    let empty = Graph::new();
    let mut rows = vec![Row::new()];
    for sp in patterns {
        rows = match &sp.graph {
            GraphScope::Default => match_bgp(d.default_graph(), None, &sp.triples, rows),
            GraphScope::Named(g) => {
                match_bgp(d.graph(g).unwrap_or(&empty), Some(g), &sp.triples, rows)
            }
            GraphScope::Var(v) => {
                let mut out = Vec::new();
                for row in rows {
                    let graphs: Vec<&str> = match row.get(v).map(|b| &b.term) {
                        Some(Term::Iri(g)) => vec![g.as_str()],
                        Some(_) => vec![],
                        None => d.graph_names().collect(),
                    };
                    for g in graphs {
                        let Some(graph) = d.graph(g) else { continue };
                        let mut seeded = row.clone();
                        seeded.insert(
                            v.clone(),
                            Bound {
                                term: Term::iri(g),
                                home: None,
                            },
                        );
                        out.extend(match_bgp(graph, Some(g), &sp.triples, vec![seeded]));
                    }
                }
                out
            }
        };
    }
    rows
}

/// Sort key: serialized bindings in variable-name order.
fn order_key(row: &Row, vars: &BTreeSet<&String>) -> Vec<String> {
    vars.iter()
        .map(|v| {
            let mut s = String::new();
            if let Some(b) = row.get(*v) {
                write_term(&mut s, &b.term);
            }
            s
        })
        .collect()
}

fn order_and_slice(
    mut rows: Vec<Row>,
    vars: &[String],
    limit: Option<usize>,
    offset: Option<usize>,
) -> Vec<Row> {
    let key_vars: BTreeSet<&String> = vars.iter().collect();
    let mut keyed: Vec<(Vec<String>, Row)> = rows
        .drain(..)
        .map(|r| (order_key(&r, &key_vars), r))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed
        .into_iter()
        .skip(offset.unwrap_or(0))
        .take(limit.unwrap_or(usize::MAX))
        .map(|(_, r)| r)
        .collect()
}

pub fn eval_select(d: &Dataset, q: &SelectQuery) -> Solutions {
    let variables = q.variables();
    let rows = order_and_slice(match_patterns(d, &q.patterns), &variables, q.limit, q.offset);
    let rows = rows
        .into_iter()
        .map(|r| {
            variables
                .iter()
                .filter_map(|v| r.get(v).map(|b| (v.clone(), b.term.clone())))
                .collect()
        })
        .collect();
    Solutions { variables, rows }
}

/// Instantiates the template once per solution. Template blank nodes are
/// fresh per solution; triples with unbound or ill-placed terms are skipped.
pub fn eval_construct(d: &Dataset, q: &ConstructQuery) -> Graph {
    let mut all_vars = super::pattern_variables(&q.patterns);
    all_vars.sort();
    let rows = order_and_slice(match_patterns(d, &q.patterns), &all_vars, q.limit, q.offset);
    let mut out = Graph::new();
    for (i, row) in rows.iter().enumerate() {
        let inst = |part: &VarOrTerm| -> Option<Term> {
            match part {
                VarOrTerm::Term(t) => Some(t.clone()),
                VarOrTerm::Var(v) => match v.strip_prefix(BLANK_VAR) {
                    Some(label) => Some(Term::blank(format!("c{i}x{label}"))),
                    None => row.get(v).map(|b| b.term.clone()),
                },
            }
        };
        for t in &q.template {
            let (Some(s), Some(p), Some(o)) = (inst(&t.subject), inst(&t.predicate), inst(&t.object))
            else {
                continue;
            };
            if matches!(s, Term::Literal(_)) || !matches!(p, Term::Iri(_)) {
                continue;
            }
            out.insert(Triple::new(s, p, o));
        }
    }
    out
}

type GraphKey = Option<String>;

/// Effective delta of an update against `d`. Blank nodes in the dataset
/// are canonicalized first.
pub fn eval_update(d: &Dataset, u: &UpdateRequest) -> Result<DatasetDelta, AtomicError> {
    let mut parts = PartitionedDataset::new();
    for (name, g) in d.named_graphs() {
        if !g.is_empty() {
            parts.insert(name.to_owned(), Arc::new(canonical_partition(g)?));
        }
    }
    let default = canonical_partition(d.default_graph())?;
    let view = view_of(&parts, &default);
    eval_with_default(&view, &parts, default, u)
}

/// Like [`eval_update`] for a version already in canonical form: `view`
/// must hold exactly the triples of `parts`.
pub fn eval_update_partitioned(
    view: &Dataset,
    parts: &PartitionedDataset,
    u: &UpdateRequest,
) -> Result<DatasetDelta, AtomicError> {
    let default = canonical_partition(view.default_graph())?;
    eval_with_default(view, parts, default, u)
}

fn view_of(parts: &PartitionedDataset, default: &Partition) -> Dataset {
    let mut out = Dataset::new();
    for (g, p) in parts {
        out.set_graph(g.clone(), flatten(p.iter()));
    }
    out.set_default_graph(flatten(default.iter()));
    out
}

fn eval_with_default(
    view: &Dataset,
    parts: &PartitionedDataset,
    default: Partition,
    u: &UpdateRequest,
) -> Result<DatasetDelta, AtomicError> {
    let initial: BTreeMap<GraphKey, Partition> = parts
        .iter()
        .map(|(g, p)| (Some(g.clone()), (**p).clone()))
        .chain(std::iter::once((None, default)))
        .collect();
    let mut state = initial.clone();
    let mut owned_view: Option<Dataset> = None;
    for (idx, op) in u.ops.iter().enumerate() {
        let current_view = owned_view.as_ref().unwrap_or(view);
        let touched = apply_op(&mut state, current_view, op, idx)?;
        if idx + 1 < u.ops.len() && !touched.is_empty() {
            let mut v = current_view.clone();
            for key in touched {
                let g = flatten(state.get(&key).into_iter().flatten());
                match key {
                    Some(name) => v.set_graph(name, g),
                    None => v.set_default_graph(g),
                }
            }
            owned_view = Some(v);
        }
    }
    let empty = Partition::new();
    let mut out = DatasetDelta::new();
    let keys: BTreeSet<&GraphKey> = initial.keys().chain(state.keys()).collect();
    for key in keys {
        let before = initial.get(key).unwrap_or(&empty);
        let after = state.get(key).unwrap_or(&empty);
        let delta = diff_partitions(before, after);
        match key {
            Some(name) => {
                let kind = match (before.is_empty(), after.is_empty()) {
                    (true, false) => GraphChangeKind::Added,
                    (false, true) => GraphChangeKind::Removed,
                    _ => GraphChangeKind::Modified,
                };
                out.insert(name.clone(), kind, delta);
            }
            None => out.set_default(delta),
        }
    }
    Ok(out)
}

fn group_quads(quads: &[Quad], blank_prefix: Option<String>) -> BTreeMap<GraphKey, Graph> {
    let mut out: BTreeMap<GraphKey, Graph> = BTreeMap::new();
    let fresh = |t: &Term| match (t, &blank_prefix) {
        (Term::Blank(l), Some(p)) => Term::blank(format!("{p}{l}")),
        _ => t.clone(),
    };
    for q in quads {
        out.entry(q.graph.clone()).or_default().insert(Triple::new(
            fresh(&q.subject),
            q.predicate.clone(),
            fresh(&q.object),
        ));
    }
    out
}

fn apply_op(
    state: &mut BTreeMap<GraphKey, Partition>,
    view: &Dataset,
    op: &UpdateOp,
    idx: usize,
) -> Result<Vec<GraphKey>, AtomicError> {
    let mut touched = Vec::new();
    match op {
        UpdateOp::InsertData(quads) => {
            for (key, g) in group_quads(quads, Some(format!("u{idx}x"))) {
                let current = state.entry(key.clone()).or_default();
                let before = current.len();
                current.extend(canonical_partition(&g)?);
                if current.len() != before {
                    touched.push(key);
                }
            }
        }
        UpdateOp::DeleteData(quads) => {
            for (key, g) in group_quads(quads, None) {
                let Some(current) = state.get_mut(&key) else { continue };
                let before = current.len();
                for atom in canonical_partition(&g)? {
                    current.remove(&atom);
                }
                if current.len() != before {
                    touched.push(key);
                }
            }
        }
        UpdateOp::DeleteWhere(patterns) => {
            let mut matched: BTreeMap<GraphKey, HashSet<Triple>> = BTreeMap::new();
            for row in match_patterns(view, patterns) {
                for sp in patterns {
                    let graph: Option<GraphKey> = match &sp.graph {
                        GraphScope::Default => Some(None),
                        GraphScope::Named(g) => Some(Some(g.clone())),
                        GraphScope::Var(v) => row
                            .get(v)
                            .and_then(|b| b.term.as_iri())
                            .map(|g| Some(g.to_owned())),
                    };
                    let Some(graph) = graph else { continue };
                    for t in &sp.triples {
                        let get = |p: &VarOrTerm| match p {
                            VarOrTerm::Term(t) => Some(t.clone()),
                            VarOrTerm::Var(v) => row.get(v).map(|b| b.term.clone()),
                        };
                        if let (Some(s), Some(p), Some(o)) =
                            (get(&t.subject), get(&t.predicate), get(&t.object))
                        {
                            matched
                                .entry(graph.clone())
                                .or_default()
                                .insert(Triple::new(s, p, o));
                        }
                    }
                }
            }
            for (key, triples) in matched {
                let Some(current) = state.get_mut(&key) else { continue };
                let before = current.len();
                current.retain(|atom| !atom.triples().iter().any(|t| triples.contains(t)));
                if current.len() != before {
                    touched.push(key);
                }
            }
        }
    }
    Ok(touched)
}
