//! A SPARQL subset: SELECT and CONSTRUCT over basic graph patterns with
//! GRAPH scoping and LIMIT/OFFSET; INSERT DATA, DELETE DATA and DELETE
//! WHERE updates.

mod eval;
mod lexer;
mod parser;
mod results;

use thiserror::Error;

use crate::rdf::{Quad, Term};

pub use eval::{
    eval_construct, eval_select, eval_update, eval_update_partitioned, Solution, Solutions,
};
pub use parser::{parse, parse_query, parse_update};
pub use results::{solutions_to_json, term_to_json};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported SPARQL feature: {0}")]
    Unsupported(String),
}

impl QueryError {
    pub(crate) fn syntax(src: &str, pos: usize, message: impl Into<String>) -> Self {
        let before = &src[..pos.min(src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        QueryError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarOrTerm {
    Var(String),
    Term(Term),
}

impl VarOrTerm {
    pub fn var(&self) -> Option<&str> {
        match self {
            VarOrTerm::Var(v) => Some(v),
            VarOrTerm::Term(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: VarOrTerm,
    pub predicate: VarOrTerm,
    pub object: VarOrTerm,
}

impl TriplePattern {
    pub fn parts(&self) -> [&VarOrTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphScope {
    Default,
    Named(String),
    Var(String),
}

/// A basic graph pattern matched inside one graph scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScopedPattern {
    pub graph: GraphScope,
    pub triples: Vec<TriplePattern>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectQuery {
    /// `None` for `SELECT *`.
    pub projection: Option<Vec<String>>,
    pub patterns: Vec<ScopedPattern>,
    pub limit: Option<usize>,
    pub offset: Option<usize>,
}

impl SelectQuery {
    /// Projected variables; for `*` every named variable in order of first
    /// appearance.
    pub fn variables(&self) -> Vec<String> {
        if let Some(p) = &self.projection {
            return p.clone();
        }
        pattern_variables(&self.patterns)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructQuery {
    pub template: Vec<TriplePattern>,
    pub patterns: Vec<ScopedPattern>,
    pub limit: Option<usize>,
    pub offset: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Select(SelectQuery),
    Construct(ConstructQuery),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UpdateOp {
    InsertData(Vec<Quad>),
    DeleteData(Vec<Quad>),
    DeleteWhere(Vec<ScopedPattern>),
}

/// One or more update operations separated by `;`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateRequest {
    pub ops: Vec<UpdateOp>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Query(Query),
    Update(UpdateRequest),
}

/// Variables introduced by blank nodes in patterns carry this prefix and are
/// never projected.
pub(crate) const BLANK_VAR: &str = "_:";

pub(crate) fn pattern_variables(patterns: &[ScopedPattern]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut push = |v: &str| {
        if !v.starts_with(BLANK_VAR) && !out.iter().any(|o| o == v) {
            out.push(v.to_owned());
        }
    };
    for sp in patterns {
        if let GraphScope::Var(v) = &sp.graph {
            push(v);
        }
        for t in &sp.triples {
            for part in t.parts() {
                if let Some(v) = part.var() {
                    push(v);
                }
            }
        }
    }
    out
}

impl<S: crate::store::ObjectStore> crate::history::Repository<S> {
    /// Evaluates `update` against the head of `branch` and commits the
    /// effective change. Updates that change nothing write no commit.
    pub fn update(
        &self,
        branch: &str,
        update: &UpdateRequest,
        meta: &crate::history::CommitMeta,
    ) -> crate::Result<crate::history::CommitOutcome> {
        let head = self.branch_head(branch)?;
        let parts = self.partitions_of(head.as_ref())?;
        let view = crate::history::unpartition(&parts);
        let dd = eval_update_partitioned(&view, &parts, update)?;
        self.commit_change_on(branch, head, &dd, meta)
    }
}
