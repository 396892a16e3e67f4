//! Merge strategies over canonical atomic partitions, conflict reports and
//! their resolution, and merge/revert commits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use crate::atomic::{canonical_partition, CanonicalAtomicGraph, Partition};
use crate::error::{Error, Result};
use crate::history::{CommitMeta, PartitionedDataset, Repository};
use crate::rdf::{parse_nquads_str, write_quad_line, write_term, Term};
use crate::store::{ObjectId, ObjectStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MergeStrategy {
    Union,
    Ours,
    Theirs,
    ThreeWay,
    Context,
}

impl MergeStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            MergeStrategy::Union => "union",
            MergeStrategy::Ours => "ours",
            MergeStrategy::Theirs => "theirs",
            MergeStrategy::ThreeWay => "three-way",
            MergeStrategy::Context => "context",
        }
    }
}

impl fmt::Display for MergeStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownStrategy(pub String);

impl fmt::Display for UnknownStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown merge strategy {:?} (expected union, ours, theirs, three-way or context)",
            self.0
        )
    }
}

impl std::error::Error for UnknownStrategy {}

impl FromStr for MergeStrategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "union" => Ok(MergeStrategy::Union),
            "ours" => Ok(MergeStrategy::Ours),
            "theirs" => Ok(MergeStrategy::Theirs),
            "three-way" | "threeway" | "three_way" | "3way" => Ok(MergeStrategy::ThreeWay),
            "context" => Ok(MergeStrategy::Context),
            _ => Err(UnknownStrategy(s.to_owned())),
        }
    }
}

/// Settings for the context strategy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ContextOptions {
    /// Treat predicate IRIs as nodes too.
    pub predicate_nodes: bool,
}

/// `𝒫(g1) ∪ 𝒫(g2)`.
pub fn union_merge(g1: &Partition, g2: &Partition) -> Partition {
    g1.union(g2).cloned().collect()
}

/// `(𝒫(ours) ∩ 𝒫(theirs)) ∪ C⁺_ours ∪ C⁺_theirs` with additions relative to
/// `base`.
pub fn three_way(base: &Partition, ours: &Partition, theirs: &Partition) -> Partition {
    let mut out: Partition = ours.intersection(theirs).cloned().collect();
    out.extend(ours.difference(base).cloned());
    out.extend(theirs.difference(base).cloned());
    out
}

/// Ground subject and object terms (and predicates when asked) of an atomic
/// graph.
pub fn nodes(atom: &CanonicalAtomicGraph, predicate_nodes: bool) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    for t in atom.triples() {
        for term in [&t.subject, &t.object] {
            if !term.is_blank() {
                out.insert(term.clone());
            }
        }
        if predicate_nodes {
            out.insert(t.predicate.clone());
        }
    }
    out
}

/// The four sections of a conflict report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    OursAdded,
    OursRemoved,
    TheirsAdded,
    TheirsRemoved,
}

impl Side {
    pub const ALL: [Side; 4] = [
        Side::OursAdded,
        Side::OursRemoved,
        Side::TheirsAdded,
        Side::TheirsRemoved,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Side::OursAdded => "ours+",
            Side::OursRemoved => "ours-",
            Side::TheirsAdded => "theirs+",
            Side::TheirsRemoved => "theirs-",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        Side::ALL.into_iter().find(|side| side.as_str() == s)
    }

    pub fn is_addition(self) -> bool {
        matches!(self, Side::OursAdded | Side::TheirsAdded)
    }

    pub fn is_ours(self) -> bool {
        matches!(self, Side::OursAdded | Side::OursRemoved)
    }
}

/// Conflicting atomic graphs of one graph plus everything that merged
/// without question.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflictReport {
    pub ours_added: Partition,
    pub ours_removed: Partition,
    pub theirs_added: Partition,
    pub theirs_removed: Partition,
    pub inodes: BTreeSet<Term>,
    pub unquestioned: Partition,
}

impl ConflictReport {
    pub fn section(&self, side: Side) -> &Partition {
        match side {
            Side::OursAdded => &self.ours_added,
            Side::OursRemoved => &self.ours_removed,
            Side::TheirsAdded => &self.theirs_added,
            Side::TheirsRemoved => &self.theirs_removed,
        }
    }

    fn section_mut(&mut self, side: Side) -> &mut Partition {
        match side {
            Side::OursAdded => &mut self.ours_added,
            Side::OursRemoved => &mut self.ours_removed,
            Side::TheirsAdded => &mut self.theirs_added,
            Side::TheirsRemoved => &mut self.theirs_removed,
        }
    }

    pub fn conflict_count(&self) -> usize {
        Side::ALL.iter().map(|s| self.section(*s).len()).sum()
    }

    /// Applies keep/drop decisions: kept additions join the result, dropped
    /// removals are restored.
    pub fn resolve(&self, decisions: &GraphResolution) -> Result<Partition> {
        let mut out = self.unquestioned.clone();
        for side in Side::ALL {
            let section = self.section(side);
            let chosen = decisions.decisions.get(&side).map(Vec::as_slice).unwrap_or(&[]);
            if chosen.len() != section.len() {
                return Err(Error::IncompleteResolution(format!(
                    "{} has {} entries, resolution covers {}",
                    side.as_str(),
                    section.len(),
                    chosen.len()
                )));
            }
            for (atom, decision) in section.iter().zip(chosen) {
                let restore = match decision {
                    Decision::Keep => side.is_addition(),
                    Decision::Drop => !side.is_addition(),
                };
                if restore {
                    out.insert(atom.clone());
                }
            }
        }
        Ok(out)
    }
}

/// Result of a graph-level context merge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContextMerge {
    Clean(Partition),
    Conflict(ConflictReport),
}

pub fn context_merge(
    base: &Partition,
    ours: &Partition,
    theirs: &Partition,
    options: ContextOptions,
) -> ContextMerge {
    let add1: Partition = ours.difference(base).cloned().collect();
    let del1: Partition = base.difference(ours).cloned().collect();
    let add2: Partition = theirs.difference(base).cloned().collect();
    let del2: Partition = base.difference(theirs).cloned().collect();
    let mut report = ConflictReport {
        ours_added: add1.difference(&add2).cloned().collect(),
        ours_removed: del1.difference(&del2).cloned().collect(),
        theirs_added: add2.difference(&add1).cloned().collect(),
        theirs_removed: del2.difference(&del1).cloned().collect(),
        ..ConflictReport::default()
    };
    let node_set = |parts: [&Partition; 2]| -> BTreeSet<Term> {
        parts
            .into_iter()
            .flatten()
            .flat_map(|a| nodes(a, options.predicate_nodes))
            .collect()
    };
    let n_ours = node_set([&report.ours_added, &report.ours_removed]);
    let n_theirs = node_set([&report.theirs_added, &report.theirs_removed]);
    let inodes: BTreeSet<Term> = n_ours.intersection(&n_theirs).cloned().collect();
    if inodes.is_empty() {
        return ContextMerge::Clean(three_way(base, ours, theirs));
    }
    for side in Side::ALL {
        report.section_mut(side).retain(|a| {
            nodes(a, options.predicate_nodes)
                .iter()
                .any(|n| inodes.contains(n))
        });
    }
    let mut unquestioned: Partition = ours.intersection(theirs).cloned().collect();
    unquestioned.extend(add1.difference(&report.ours_added).cloned());
    unquestioned.extend(add2.difference(&report.theirs_added).cloned());
    report.inodes = inodes;
    report.unquestioned = unquestioned;
    ContextMerge::Conflict(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Keep,
    Drop,
}

/// Keep/drop per block, in section order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphResolution {
    pub decisions: BTreeMap<Side, Vec<Decision>>,
}

impl GraphResolution {
    pub fn uniform(report: &ConflictReport, choose: impl Fn(Side) -> Decision) -> Self {
        let decisions = Side::ALL
            .into_iter()
            .filter(|s| !report.section(*s).is_empty())
            .map(|s| (s, vec![choose(s); report.section(s).len()]))
            .collect();
        GraphResolution { decisions }
    }
}

/// Per-graph resolutions for a dataset-level conflict.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Resolution {
    pub graphs: BTreeMap<String, GraphResolution>,
}

impl Resolution {
    fn uniform(conflict: &DatasetConflict, choose: impl Fn(Side) -> Decision + Copy) -> Self {
        Resolution {
            graphs: conflict
                .graphs
                .iter()
                .map(|(g, r)| (g.clone(), GraphResolution::uniform(r, choose)))
                .collect(),
        }
    }

    /// Our side's additions and removals win.
    pub fn keep_ours(conflict: &DatasetConflict) -> Self {
        Resolution::uniform(conflict, |s| {
            if s.is_ours() {
                Decision::Keep
            } else {
                Decision::Drop
            }
        })
    }

    pub fn keep_theirs(conflict: &DatasetConflict) -> Self {
        Resolution::uniform(conflict, |s| {
            if s.is_ours() {
                Decision::Drop
            } else {
                Decision::Keep
            }
        })
    }

    /// Every change as stated; reproduces the three-way result.
    pub fn keep_all(conflict: &DatasetConflict) -> Self {
        Resolution::uniform(conflict, |_| Decision::Keep)
    }

    /// `graph <iri>` headers followed by `<section> <index> keep|drop` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (graph, res) in &self.graphs {
            let _ = writeln!(out, "graph <{graph}>");
            for (side, decisions) in &res.decisions {
                for (i, d) in decisions.iter().enumerate() {
                    let word = match d {
                        Decision::Keep => "keep",
                        Decision::Drop => "drop",
                    };
                    let _ = writeln!(out, "{} {i} {word}", side.as_str());
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::InvalidDocument(format!("line {line}: {msg}"));
        let mut out = Resolution::default();
        let mut current: Option<String> = None;
        let mut raw: BTreeMap<(String, Side), BTreeMap<usize, Decision>> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(g) = parse_graph_header(line) {
                out.graphs.entry(g.clone()).or_default();
                current = Some(g);
                continue;
            }
            let graph = current.clone().ok_or_else(|| bad(idx + 1, "decision before graph header"))?;
            let mut parts = line.split_whitespace();
            let (Some(side), Some(index), Some(word), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(bad(idx + 1, "expected '<section> <index> keep|drop'"));
            };
            let side = Side::parse(side).ok_or_else(|| bad(idx + 1, "unknown section"))?;
            let index: usize = index.parse().map_err(|_| bad(idx + 1, "bad index"))?;
            let decision = match word {
                "keep" => Decision::Keep,
                "drop" => Decision::Drop,
                _ => return Err(bad(idx + 1, "expected keep or drop")),
            };
            if raw.entry((graph, side)).or_default().insert(index, decision).is_some() {
                return Err(bad(idx + 1, "duplicate decision"));
            }
        }
        for ((graph, side), by_index) in raw {
            let n = by_index.len();
            if by_index.keys().copied().ne(0..n) {
                return Err(Error::IncompleteResolution(format!(
                    "{} in <{graph}> has gaps in its block indices",
                    side.as_str()
                )));
            }
            out.graphs
                .entry(graph)
                .or_default()
                .decisions
                .insert(side, by_index.into_values().collect());
        }
        Ok(out)
    }
}

fn parse_graph_header(line: &str) -> Option<String> {
    line.strip_prefix("graph <")?
        .strip_suffix('>')
        .map(str::to_owned)
}

/// Conflicts of a dataset-level context merge.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetConflict {
    pub ours: Option<ObjectId>,
    pub theirs: Option<ObjectId>,
    pub base: Option<ObjectId>,
    /// Graphs that merged cleanly.
    pub clean: PartitionedDataset,
    pub graphs: BTreeMap<String, ConflictReport>,
}

impl DatasetConflict {
    pub fn resolve(&self, resolution: &Resolution) -> Result<PartitionedDataset> {
        let mut out = self.clean.clone();
        for (graph, report) in &self.graphs {
            let res = resolution
                .graphs
                .get(graph)
                .ok_or_else(|| Error::IncompleteResolution(format!("graph <{graph}>")))?;
            let part = report.resolve(res)?;
            if part.is_empty() {
                out.remove(graph);
            } else {
                out.insert(graph.clone(), Arc::new(part));
            }
        }
        Ok(out)
    }

    /// Renders the conflict document. Each graph lists `inodes`, then the
    /// four sections; every atomic graph is a block of N-Quads lines and
    /// blocks are separated by blank lines.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# quadgit conflict document\n");
        for (key, id) in [("ours", self.ours), ("theirs", self.theirs), ("base", self.base)] {
            if let Some(id) = id {
                let _ = writeln!(out, "{key} {id}");
            }
        }
        for (graph, report) in &self.graphs {
            let _ = writeln!(out, "\ngraph <{graph}>");
            out.push_str("inodes\n");
            for node in &report.inodes {
                write_term(&mut out, node);
                out.push('\n');
            }
            for side in Side::ALL {
                out.push_str(side.as_str());
                out.push('\n');
                for (i, atom) in report.section(side).iter().enumerate() {
                    if i > 0 {
                        out.push('\n');
                    }
                    let mut lines: Vec<String> = atom
                        .triples()
                        .iter()
                        .map(|t| {
                            let mut l = String::new();
                            write_quad_line(&mut l, t, Some(graph));
                            l
                        })
                        .collect();
                    lines.sort();
                    out.push_str(&lines.concat());
                }
            }
        }
        out
    }

    /// Parses the conflict sections back (the unquestioned result and clean
    /// graphs are not part of the document).
    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::InvalidDocument(format!("line {line}: {msg}"));
        let mut out = DatasetConflict::default();
        let mut graph: Option<String> = None;
        let mut section: Option<&str> = None;
        let mut block = String::new();
        let flush = |out: &mut DatasetConflict,
                     graph: &Option<String>,
                     section: Option<&str>,
                     block: &mut String|
         -> Result<()> {
            if block.trim().is_empty() {
                block.clear();
                return Ok(());
            }
            let (Some(g), Some(sec)) = (graph, section) else {
                return Err(Error::InvalidDocument("statements outside a section".into()));
            };
            let side = Side::parse(sec)
                .ok_or_else(|| Error::InvalidDocument(format!("{sec} holds no statements")))?;
            let parsed = parse_nquads_str(block).map_err(|e| Error::InvalidDocument(e.to_string()))?;
            let part = canonical_partition(parsed.graph(g).unwrap_or(&Default::default()))?;
            if part.len() != 1 {
                return Err(Error::InvalidDocument(format!(
                    "a block in {sec} of <{g}> is not one atomic graph"
                )));
            }
            out.graphs
                .entry(g.clone())
                .or_default()
                .section_mut(side)
                .extend(part);
            block.clear();
            Ok(())
        };
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.starts_with('#') {
                continue;
            }
            if trimmed.is_empty() {
                flush(&mut out, &graph, section, &mut block)?;
                continue;
            }
            if let Some(g) = parse_graph_header(trimmed) {
                flush(&mut out, &graph, section, &mut block)?;
                out.graphs.entry(g.clone()).or_default();
                graph = Some(g);
                section = None;
                continue;
            }
            if let Some((key, id)) = trimmed.split_once(' ') {
                if matches!(key, "ours" | "theirs" | "base") && graph.is_none() {
                    let id: ObjectId = id.parse().map_err(|_| bad(idx + 1, "bad commit id"))?;
                    match key {
                        "ours" => out.ours = Some(id),
                        "theirs" => out.theirs = Some(id),
                        _ => out.base = Some(id),
                    }
                    continue;
                }
            }
            if trimmed == "inodes" || Side::parse(trimmed).is_some() {
                flush(&mut out, &graph, section, &mut block)?;
                if graph.is_none() {
                    return Err(bad(idx + 1, "section before graph header"));
                }
                section = Some(if trimmed == "inodes" {
                    "inodes"
                } else {
                    Side::parse(trimmed).expect("checked").as_str()
                });
                continue;
            }
            if section == Some("inodes") {
                let g = graph.as_ref().expect("section implies graph");
                let doc = format!("<urn:x:s> <urn:x:p> {trimmed} .\n");
                let term = parse_nquads_str(&doc)
                    .ok()
                    .and_then(|d| d.default_graph().iter().next().map(|t| t.object.clone()))
                    .ok_or_else(|| bad(idx + 1, "bad node"))?;
                out.graphs.get_mut(g).expect("inserted").inodes.insert(term);
                continue;
            }
            block.push_str(line);
            block.push('\n');
        }
        flush(&mut out, &graph, section, &mut block)?;
        Ok(out)
    }
}

/// Result of a dataset-level merge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetMerge {
    Clean(PartitionedDataset),
    Conflict(DatasetConflict),
}

/// Applies one strategy graph by graph. Graphs missing on a side are empty
/// there.
pub fn merge_datasets(
    base: &PartitionedDataset,
    ours: &PartitionedDataset,
    theirs: &PartitionedDataset,
    strategy: MergeStrategy,
    options: ContextOptions,
) -> DatasetMerge {
    match strategy {
        MergeStrategy::Ours => return DatasetMerge::Clean(ours.clone()),
        MergeStrategy::Theirs => return DatasetMerge::Clean(theirs.clone()),
        _ => {}
    }
    let empty = Arc::new(Partition::new());
    let names: BTreeSet<&String> = base.keys().chain(ours.keys()).chain(theirs.keys()).collect();
    let mut clean = PartitionedDataset::new();
    let mut conflicts = BTreeMap::new();
    for name in names {
        let b = base.get(name).unwrap_or(&empty);
        let o = ours.get(name).unwrap_or(&empty);
        let t = theirs.get(name).unwrap_or(&empty);
        let merged = match strategy {
            MergeStrategy::Union => union_merge(o, t),
            MergeStrategy::ThreeWay => three_way(b, o, t),
            MergeStrategy::Context => match context_merge(b, o, t, options) {
                ContextMerge::Clean(p) => p,
                ContextMerge::Conflict(r) => {
                    conflicts.insert(name.clone(), r);
                    continue;
                }
            },
            MergeStrategy::Ours | MergeStrategy::Theirs => unreachable!(),
        };
        if !merged.is_empty() {
            clean.insert(name.clone(), Arc::new(merged));
        }
    }
    if conflicts.is_empty() {
        DatasetMerge::Clean(clean)
    } else {
        DatasetMerge::Conflict(DatasetConflict {
            clean,
            graphs: conflicts,
            ..DatasetConflict::default()
        })
    }
}

/// Result of a merge or revert.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MergeOutcome {
    Committed(ObjectId),
    /// Nothing to do; the branch stays at this commit.
    UpToDate(ObjectId),
    Conflict(Box<DatasetConflict>),
}

impl<S: ObjectStore> Repository<S> {
    /// Merges `theirs` (any revision) into branch `ours`, writing a
    /// two-parent commit. With the context strategy and conflicts, a
    /// resolution is applied if given; otherwise the report is returned and
    /// nothing is written.
    pub fn merge(
        &self,
        ours: &str,
        theirs: &str,
        strategy: MergeStrategy,
        meta: &CommitMeta,
        resolution: Option<&Resolution>,
        options: ContextOptions,
    ) -> Result<MergeOutcome> {
        let head = self
            .branch_head(ours)?
            .ok_or_else(|| Error::EmptyBranch(ours.to_owned()))?;
        let other = self.resolve(theirs)?;
        self.merge_commits(ours, head, other, strategy, meta, resolution, options)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn merge_commits(
        &self,
        branch: &str,
        head: ObjectId,
        other: ObjectId,
        strategy: MergeStrategy,
        meta: &CommitMeta,
        resolution: Option<&Resolution>,
        options: ContextOptions,
    ) -> Result<MergeOutcome> {
        if self.is_ancestor(&other, &head)? {
            return Ok(MergeOutcome::UpToDate(head));
        }
        let base_id = match strategy {
            MergeStrategy::ThreeWay | MergeStrategy::Context => Some(self.merge_base(&head, &other)?),
            _ => None,
        };
        let base = self.partitions_of(base_id.as_ref())?;
        let ours = self.partitions_at(&head)?;
        let theirs = self.partitions_at(&other)?;
        let merged = match merge_datasets(&base, &ours, &theirs, strategy, options) {
            DatasetMerge::Clean(d) => d,
            DatasetMerge::Conflict(mut c) => {
                c.ours = Some(head);
                c.theirs = Some(other);
                c.base = base_id;
                match resolution {
                    Some(r) => c.resolve(r)?,
                    None => return Ok(MergeOutcome::Conflict(Box::new(c))),
                }
            }
        };
        let tree = self.write_tree(None, &merged)?;
        let id = self.write_commit(branch, Some(head), vec![head, other], tree, meta)?;
        Ok(MergeOutcome::Committed(id))
    }

    /// Undoes the change `target` made. Reverting the head restores its
    /// parent; reverting an older commit merges with base = target,
    /// ours = parent(target), theirs = head. A root commit reverts against
    /// the empty dataset.
    pub fn revert(
        &self,
        branch: &str,
        target: &ObjectId,
        strategy: MergeStrategy,
        meta: &CommitMeta,
        resolution: Option<&Resolution>,
        options: ContextOptions,
    ) -> Result<MergeOutcome> {
        let head = self
            .branch_head(branch)?
            .ok_or_else(|| Error::EmptyBranch(branch.to_owned()))?;
        let record = self.commit(target)?;
        let parent = match record.parents.as_slice() {
            [] => None,
            [p] => Some(*p),
            _ => return Err(Error::MergeRevert(*target)),
        };
        if !self.is_ancestor(target, &head)? {
            return Err(Error::NotAnAncestor(*target, head));
        }
        let before = self.partitions_of(parent.as_ref())?;
        let at_target = self.partitions_at(target)?;
        let current = self.partitions_at(&head)?;
        let result = if *target == head {
            before
        } else {
            match merge_datasets(&at_target, &before, &current, strategy, options) {
                DatasetMerge::Clean(d) => d,
                DatasetMerge::Conflict(mut c) => {
                    c.ours = parent;
                    c.theirs = Some(head);
                    c.base = Some(*target);
                    match resolution {
                        Some(r) => c.resolve(r)?,
                        None => return Ok(MergeOutcome::Conflict(Box::new(c))),
                    }
                }
            }
        };
        if crate::history::same_content(&result, &current) {
            return Ok(MergeOutcome::UpToDate(head));
        }
        let tree = self.write_tree(None, &result)?;
        let id = self.write_commit(branch, Some(head), vec![head], tree, meta)?;
        Ok(MergeOutcome::Committed(id))
    }
}

/// Key set of a partition, for assertions and oracles.
pub fn keys(p: &Partition) -> BTreeSet<String> {
    p.iter().map(|a| a.key().to_owned()).collect()
}
