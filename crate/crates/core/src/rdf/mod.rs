//! RDF value model: terms, triples, graphs and datasets.
//!
//! Graphs have set semantics. A [`Dataset`] keeps a default graph plus a map
//! of named graphs; empty named graphs are never stored, so two datasets with
//! the same statements compare equal.

mod nquads;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use nquads::{
    parse_nquads, parse_nquads_str, serialize_canonical, write_quad_line, write_term,
    write_triple_line, ParseError,
};

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";

/// An RDF literal. `lang` is only present for `rdf:langString` literals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    lexical: String,
    datatype: String,
    lang: Option<String>,
}

impl Literal {
    /// A plain `xsd:string` literal.
    pub fn simple(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: XSD_STRING.to_owned(),
            lang: None,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: datatype.into(),
            lang: None,
        }
    }

    pub fn lang_string(lexical: impl Into<String>, lang: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: RDF_LANG_STRING.to_owned(),
            lang: Some(lang.into()),
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> &str {
        &self.datatype
    }

    pub fn lang(&self) -> Option<&str> {
        self.lang.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal(Literal),
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Self {
        Term::Iri(iri.into())
    }

    pub fn blank(label: impl Into<String>) -> Self {
        Term::Blank(label.into())
    }

    pub fn literal(lexical: impl Into<String>) -> Self {
        Term::Literal(Literal::simple(lexical))
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::Blank(_))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_blank(&self) -> Option<&str> {
        match self {
            Term::Blank(label) => Some(label),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_term(&mut out, self);
        f.write_str(&out)
    }
}

/// True if `iri` starts with a URI scheme (`ALPHA *( ALPHA / DIGIT / "+" / "-" / "." ) ":"`).
pub fn is_absolute_iri(iri: &str) -> bool {
    let Some(colon) = iri.find(':') else {
        return false;
    };
    let scheme = &iri[..colon];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        Triple {
            subject,
            predicate,
            object,
        }
    }

    pub fn has_blank(&self) -> bool {
        self.subject.is_blank() || self.object.is_blank()
    }

    /// Blank labels in subject/object position, subject first.
    pub fn blanks(&self) -> impl Iterator<Item = &str> {
        [&self.subject, &self.object]
            .into_iter()
            .filter_map(|t| t.as_blank())
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_triple_line(&mut out, self);
        f.write_str(out.trim_end())
    }
}

/// A statement together with its graph name (`None` for the default graph).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quad {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
    pub graph: Option<String>,
}

impl Quad {
    pub fn new(triple: Triple, graph: Option<String>) -> Self {
        Quad {
            subject: triple.subject,
            predicate: triple.predicate,
            object: triple.object,
            graph,
        }
    }

    pub fn triple(&self) -> Triple {
        Triple::new(
            self.subject.clone(),
            self.predicate.clone(),
            self.object.clone(),
        )
    }
}

/// A set of triples.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Graph {
    triples: BTreeSet<Triple>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn insert(&mut self, triple: Triple) -> bool {
        self.triples.insert(triple)
    }

    pub fn remove(&mut self, triple: &Triple) -> bool {
        self.triples.remove(triple)
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn extend<I: IntoIterator<Item = Triple>>(&mut self, iter: I) {
        self.triples.extend(iter);
    }

    /// Serializes the graph as sorted N-Triples lines.
    pub fn to_ntriples(&self) -> String {
        let mut lines: Vec<String> = self
            .triples
            .iter()
            .map(|t| {
                let mut line = String::new();
                write_triple_line(&mut line, t);
                line
            })
            .collect();
        lines.sort_unstable();
        lines.concat()
    }
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        Graph {
            triples: iter.into_iter().collect(),
        }
    }
}

impl IntoIterator for Graph {
    type Item = Triple;
    type IntoIter = std::collections::btree_set::IntoIter<Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.into_iter()
    }
}

impl<'a> IntoIterator for &'a Graph {
    type Item = &'a Triple;
    type IntoIter = std::collections::btree_set::Iter<'a, Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

/// A default graph plus named graphs keyed by IRI.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    default: Graph,
    named: BTreeMap<String, Graph>,
}

impl Dataset {
    pub fn new() -> Self {
        Dataset::default()
    }

    pub fn default_graph(&self) -> &Graph {
        &self.default
    }

    pub fn graph(&self, name: &str) -> Option<&Graph> {
        self.named.get(name)
    }

    /// Graph for `name`, or the default graph when `name` is `None`.
    pub fn graph_for(&self, name: Option<&str>) -> Option<&Graph> {
        match name {
            None => Some(&self.default),
            Some(n) => self.named.get(n),
        }
    }

    pub fn graph_names(&self) -> impl Iterator<Item = &str> {
        self.named.keys().map(String::as_str)
    }

    pub fn named_graphs(&self) -> impl Iterator<Item = (&str, &Graph)> {
        self.named.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Replaces a named graph. Passing an empty graph removes the entry.
    pub fn set_graph(&mut self, name: impl Into<String>, graph: Graph) {
        let name = name.into();
        if graph.is_empty() {
            self.named.remove(&name);
        } else {
            self.named.insert(name, graph);
        }
    }

    pub fn set_default_graph(&mut self, graph: Graph) {
        self.default = graph;
    }

    pub fn remove_graph(&mut self, name: &str) -> Option<Graph> {
        self.named.remove(name)
    }

    pub fn insert(&mut self, quad: Quad) -> bool {
        let triple = Triple::new(quad.subject, quad.predicate, quad.object);
        match quad.graph {
            None => self.default.insert(triple),
            Some(g) => self.named.entry(g).or_default().insert(triple),
        }
    }

    pub fn quads(&self) -> impl Iterator<Item = Quad> + '_ {
        let default = self.default.iter().map(|t| Quad::new(t.clone(), None));
        let named = self
            .named
            .iter()
            .flat_map(|(g, graph)| graph.iter().map(move |t| Quad::new(t.clone(), Some(g.clone()))));
        default.chain(named)
    }

    pub fn len(&self) -> usize {
        self.default.len() + self.named.values().map(Graph::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.default.is_empty() && self.named.is_empty()
    }

    /// Copy of this dataset whose default graph is the union of all graphs.
    pub fn with_union_default(&self) -> Dataset {
        let mut default = self.default.clone();
        for graph in self.named.values() {
            default.extend(graph.iter().cloned());
        }
        Dataset {
            default,
            named: self.named.clone(),
        }
    }
}

impl FromIterator<Quad> for Dataset {
    fn from_iter<I: IntoIterator<Item = Quad>>(iter: I) -> Self {
        let mut d = Dataset::new();
        for q in iter {
            d.insert(q);
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absolute_iri_detection() {
        assert!(is_absolute_iri("http://ex.org/s"));
        assert!(is_absolute_iri("urn:bsbm"));
        assert!(is_absolute_iri("a+b.c-d:x"));
        assert!(!is_absolute_iri("s"));
        assert!(!is_absolute_iri("1http://x"));
        assert!(!is_absolute_iri(":x"));
    }

    #[test]
    fn empty_named_graph_is_dropped() {
        let mut d = Dataset::new();
        d.set_graph("http://ex.org/g", Graph::new());
        assert_eq!(d, Dataset::new());
        assert_eq!(d.graph_names().count(), 0);
    }

    #[test]
    fn union_default_contains_everything() {
        let t = Triple::new(
            Term::iri("http://ex.org/s"),
            Term::iri("http://ex.org/p"),
            Term::literal("o"),
        );
        let d: Dataset = [Quad::new(t.clone(), Some("http://ex.org/g".into()))]
            .into_iter()
            .collect();
        assert!(d.default_graph().is_empty());
        assert!(d.with_union_default().default_graph().contains(&t));
    }
}
