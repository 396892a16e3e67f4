//! Commit-message metadata, the PROV-O view of the history, and blame.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use chrono::{DateTime, FixedOffset};

use crate::atomic::CanonicalAtomicGraph;
use crate::error::{Error, Result};
use crate::history::{partition_diff, Repository};
use crate::rdf::{is_absolute_iri, write_quad_line, Dataset, Literal, Quad, Term, Triple, RDF_TYPE};
use crate::store::{encode_component, CommitRecord, ObjectId, ObjectStore, Signature};

pub const QUIT: &str = "http://quit.aksw.org/vocab/";
pub const PROV: &str = "http://www.w3.org/ns/prov#";
pub const FOAF: &str = "http://xmlns.com/foaf/0.1/";
pub const LOCAL: &str = "http://quit.local/";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

pub const KEY_SOURCE: &str = "Source";
pub const KEY_UPDATE: &str = "Update";

/// `Key: value` pairs carried in a commit message.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommitMetadata {
    pub entries: Vec<(String, String)>,
}

impl CommitMetadata {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn source(&self) -> Option<&str> {
        self.get(KEY_SOURCE)
    }

    pub fn update(&self) -> Option<&str> {
        self.get(KEY_UPDATE)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn is_key(k: &str) -> bool {
    let mut chars = k.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '-')
}

fn parse_block(block: &str) -> Option<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for line in block.lines() {
        if let Some(cont) = line.strip_prefix(' ') {
            let (_, value) = out.last_mut()?;
            value.push('\n');
            value.push_str(cont);
            continue;
        }
        let (key, value) = line.split_once(": ").or_else(|| {
            line.strip_suffix(':').map(|k| (k, ""))
        })?;
        if !is_key(key) {
            return None;
        }
        out.push((key.to_owned(), value.to_owned()));
    }
    (!out.is_empty()).then_some(out)
}

/// Splits a message into its metadata block (leading, or else trailing
/// paragraph) and the remaining prose.
pub fn parse_metadata(message: &str) -> (CommitMetadata, String) {
    let text = message.trim_end_matches('\n');
    let paragraphs: Vec<&str> = text.split("\n\n").collect();
    if let Some(entries) = paragraphs.first().and_then(|p| parse_block(p)) {
        let prose = paragraphs[1..].join("\n\n");
        return (CommitMetadata { entries }, prose);
    }
    if paragraphs.len() > 1 {
        if let Some(entries) = paragraphs.last().and_then(|p| parse_block(p)) {
            let prose = paragraphs[..paragraphs.len() - 1].join("\n\n");
            return (CommitMetadata { entries }, prose);
        }
    }
    (CommitMetadata::default(), text.to_owned())
}

/// Renders the metadata block first, then a blank line and the prose.
/// Multi-line values continue on lines indented by one space.
pub fn format_message(prose: &str, metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    for (key, value) in metadata {
        out.push_str(key);
        out.push(':');
        let mut lines = value.split('\n');
        if let Some(first) = lines.next() {
            if !first.is_empty() {
                out.push(' ');
                out.push_str(first);
            }
        }
        for line in lines {
            out.push_str("\n ");
            out.push_str(line);
        }
        out.push('\n');
    }
    let prose = prose.trim_end_matches('\n');
    if !prose.is_empty() {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(prose);
        out.push('\n');
    }
    out
}

/// `1487675007 +0100` as `2017-02-21T12:03:27+01:00`.
pub fn iso_time(sig: &Signature) -> String {
    let offset = FixedOffset::east_opt(sig.tz_offset_minutes * 60)
        .unwrap_or_else(|| FixedOffset::east_opt(0).expect("zero offset"));
    DateTime::from_timestamp(sig.time, 0)
        .map(|t| t.with_timezone(&offset).to_rfc3339())
        .unwrap_or_else(|| sig.time.to_string())
}

/// Which commits the provenance graph covers.
#[derive(Debug, Clone, Default)]
pub struct ProvenanceOptions {
    /// Branches to walk; empty means all local branches.
    pub branches: Vec<String>,
    /// Maximum commits walked per branch, newest first.
    pub depth: Option<usize>,
    /// Emit `quit:update` nodes and per-commit addition/removal graphs.
    pub include_updates: bool,
}

fn iri(s: impl Into<String>) -> Term {
    Term::iri(s)
}

fn vocab(ns: &str, local: &str) -> Term {
    Term::iri(format!("{ns}{local}"))
}

fn activity_iri(id: &ObjectId) -> String {
    format!("{LOCAL}{id}")
}

fn agent_iri(email: &str) -> String {
    format!("{LOCAL}agent/{}", encode_component(email))
}

struct Emitter {
    out: Dataset,
}

impl Emitter {
    fn add(&mut self, s: &Term, p: Term, o: Term) {
        self.out.insert(Quad::new(Triple::new(s.clone(), p, o), None));
    }

    fn add_in(&mut self, graph: &str, t: &Triple) {
        self.out.insert(Quad::new(t.clone(), Some(graph.to_owned())));
    }

    fn agent(&mut self, sig: &Signature) -> Term {
        let agent = iri(agent_iri(&sig.email));
        self.add(&agent, iri(RDF_TYPE), vocab(PROV, "Agent"));
        self.add(&agent, vocab(RDFS, "label"), Term::literal(sig.name.clone()));
        self.add(&agent, vocab(FOAF, "mbox"), iri(format!("mailto:{}", sig.email)));
        agent
    }

    fn association(&mut self, activity: &Term, id: &ObjectId, role: &str, sig: &Signature) {
        let agent = self.agent(sig);
        let assoc = iri(format!("{LOCAL}{id}/assoc/{role}"));
        self.add(activity, vocab(PROV, "wasAssociatedWith"), agent.clone());
        self.add(activity, vocab(PROV, "qualifiedAssociation"), assoc.clone());
        self.add(&assoc, iri(RDF_TYPE), vocab(PROV, "Association"));
        self.add(&assoc, vocab(PROV, "agent"), agent);
        self.add(&assoc, vocab(PROV, "hadRole"), vocab(QUIT, role));
    }
}

fn date_time(sig: &Signature) -> Term {
    Term::Literal(Literal::typed(iso_time(sig), format!("{XSD}dateTime")))
}

/// Builds the provenance dataset: activity, agent and entity statements in
/// the default graph; addition/removal graphs as named graphs when
/// requested.
pub fn build_provenance<S: ObjectStore>(
    repo: &Repository<S>,
    options: &ProvenanceOptions,
) -> Result<Dataset> {
    let heads: Vec<ObjectId> = if options.branches.is_empty() {
        repo.branches()?.into_iter().map(|(_, id)| id).collect()
    } else {
        options
            .branches
            .iter()
            .map(|b| {
                repo.branch_head(b)?
                    .ok_or_else(|| Error::UnknownRevision(b.clone()))
            })
            .collect::<Result<_>>()?
    };
    let mut walked: Vec<ObjectId> = Vec::new();
    let mut seen = HashSet::new();
    for head in heads {
        let log = repo.log(&head)?;
        let take = options.depth.unwrap_or(usize::MAX);
        for (id, _) in log.into_iter().take(take) {
            if seen.insert(id) {
                walked.push(id);
            }
        }
    }
    let mut em = Emitter { out: Dataset::new() };
    for id in walked {
        let record = repo.commit(&id)?;
        emit_commit(repo, &mut em, &id, &record, options.include_updates)?;
    }
    Ok(em.out)
}

fn emit_commit<S: ObjectStore>(
    repo: &Repository<S>,
    em: &mut Emitter,
    id: &ObjectId,
    record: &CommitRecord,
    include_updates: bool,
) -> Result<()> {
    let (meta, prose) = parse_metadata(&record.message);
    let activity = iri(activity_iri(id));
    em.add(&activity, iri(RDF_TYPE), vocab(PROV, "Activity"));
    em.add(&activity, vocab(QUIT, "hex"), Term::literal(id.to_hex()));
    em.add(&activity, vocab(PROV, "startedAtTime"), date_time(&record.author));
    em.add(&activity, vocab(PROV, "endedAtTime"), date_time(&record.committer));
    if !prose.is_empty() {
        em.add(&activity, vocab(RDFS, "comment"), Term::literal(prose));
    }
    for parent in &record.parents {
        em.add(&activity, vocab(PROV, "wasInformedBy"), iri(activity_iri(parent)));
    }
    if let Some(source) = meta.source() {
        em.add(&activity, iri(RDF_TYPE), vocab(QUIT, "Import"));
        let value = if is_absolute_iri(source) {
            iri(source)
        } else {
            Term::literal(source)
        };
        em.add(&activity, vocab(QUIT, "dataSource"), value);
    }
    if let Some(update) = meta.update() {
        em.add(&activity, iri(RDF_TYPE), vocab(QUIT, "Transformation"));
        em.add(&activity, vocab(QUIT, "query"), Term::literal(update));
    }
    em.association(&activity, id, "author", &record.author);
    em.association(&activity, id, "Committer", &record.committer);

    let parts = repo.partitions_at(id)?;
    for graph in parts.keys() {
        let entity = iri(format!("{LOCAL}{id}/{}", encode_component(graph)));
        em.add(&entity, iri(RDF_TYPE), vocab(PROV, "Entity"));
        em.add(&entity, vocab(PROV, "wasGeneratedBy"), activity.clone());
        em.add(&entity, vocab(PROV, "specializationOf"), iri(graph.clone()));
    }

    if include_updates {
        let before = repo.partitions_of(record.parents.first())?;
        let dd = partition_diff(&before, &parts);
        for (graph, change) in dd.graphs() {
            let enc = encode_component(graph);
            let node = iri(format!("{LOCAL}{id}/update/{enc}"));
            let adds = format!("{LOCAL}{id}/add/{enc}");
            let dels = format!("{LOCAL}{id}/del/{enc}");
            em.add(&activity, vocab(QUIT, "update"), node.clone());
            em.add(&node, vocab(QUIT, "graph"), iri(graph));
            em.add(&node, vocab(QUIT, "additions"), iri(adds.clone()));
            em.add(&node, vocab(QUIT, "removals"), iri(dels.clone()));
            for t in change.delta.additions.iter().flat_map(|a| a.triples()) {
                em.add_in(&adds, t);
            }
            for t in change.delta.removals.iter().flat_map(|a| a.triples()) {
                em.add_in(&dels, t);
            }
        }
    }
    Ok(())
}

/// A commit that introduced an atomic graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origin {
    pub commit: ObjectId,
    pub author: Signature,
    pub committer: Signature,
    pub update: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlameEntry {
    pub graph: String,
    pub atom: CanonicalAtomicGraph,
    pub origins: Vec<Origin>,
}

/// For every atomic graph at `at`: the commits that introduced it and from
/// which it survived continuously up to `at`.
pub fn blame<S: ObjectStore>(repo: &Repository<S>, at: &ObjectId) -> Result<Vec<BlameEntry>> {
    let history = repo.ancestors(at)?;
    let mut parts = HashMap::new();
    for c in &history {
        parts.insert(*c, repo.partitions_at(c)?);
    }
    let contains = |c: &ObjectId, graph: &str, atom: &CanonicalAtomicGraph| {
        parts[c].get(graph).is_some_and(|p| p.contains(atom))
    };
    let mut out = Vec::new();
    for (graph, part) in parts[at].iter() {
        for atom in part.iter() {
            let mut reached = HashSet::from([*at]);
            let mut queue = VecDeque::from([*at]);
            let mut introducers = Vec::new();
            while let Some(c) = queue.pop_front() {
                let record = repo.commit(&c)?;
                let mut introduced = true;
                for p in &record.parents {
                    if contains(p, graph, atom) {
                        introduced = false;
                        if reached.insert(*p) {
                            queue.push_back(*p);
                        }
                    }
                }
                if introduced {
                    introducers.push(c);
                }
            }
            let mut origins = introducers
                .into_iter()
                .map(|c| {
                    let record = repo.commit(&c)?;
                    let (meta, _) = parse_metadata(&record.message);
                    Ok(Origin {
                        commit: c,
                        author: record.author.clone(),
                        committer: record.committer.clone(),
                        update: meta.update().map(str::to_owned),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            origins.sort_by(|a, b| {
                (a.committer.time, a.commit).cmp(&(b.committer.time, b.commit))
            });
            out.push(BlameEntry {
                graph: graph.clone(),
                atom: atom.clone(),
                origins,
            });
        }
    }
    Ok(out)
}

/// One `<commit-hex> "<author>" <iso-time> <nquads-line>` line per triple
/// and origin, sorted.
pub fn blame_lines(entries: &[BlameEntry]) -> Vec<String> {
    let mut lines = Vec::new();
    for entry in entries {
        for origin in &entry.origins {
            for t in entry.atom.triples() {
                let mut quad = String::new();
                write_quad_line(&mut quad, t, Some(&entry.graph));
                let mut line = String::new();
                let _ = write!(
                    line,
                    "{} {:?} {} {}",
                    origin.commit,
                    origin.author.name,
                    iso_time(&origin.author),
                    quad.trim_end_matches('\n')
                );
                lines.push(line);
            }
        }
    }
    lines.sort();
    lines
}

/// Blame grouped by origin commit, for display.
pub fn blame_by_commit(entries: &[BlameEntry]) -> BTreeMap<ObjectId, usize> {
    let mut out = BTreeMap::new();
    for e in entries {
        for o in &e.origins {
            *out.entry(o.commit).or_insert(0) += e.atom.triples().len();
        }
    }
    out
}
