use std::collections::HashMap;

use super::lexer::{tokenize, Tok, Token};
use super::{
    pattern_variables, ConstructQuery, GraphScope, Query, QueryError, Request, ScopedPattern,
    SelectQuery, TriplePattern, UpdateOp, UpdateRequest, VarOrTerm, BLANK_VAR,
};
use crate::rdf::{is_absolute_iri, Literal, Quad, Term, Triple, RDF_TYPE};

const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

/// Keywords that belong to SPARQL but not to the supported subset.
const UNSUPPORTED: &[&str] = &[
    "FILTER", "OPTIONAL", "UNION", "MINUS", "BIND", "VALUES", "SERVICE", "DISTINCT", "REDUCED",
    "ORDER", "GROUP", "HAVING", "ASK", "DESCRIBE", "FROM", "NAMED", "LOAD", "CLEAR", "DROP",
    "CREATE", "ADD", "MOVE", "COPY", "WITH", "USING", "EXISTS", "NOT",
];

/// Parses either a query or an update.
pub fn parse(text: &str) -> Result<Request, QueryError> {
    let mut p = Parser::new(text)?;
    p.prologue()?;
    match p.peek_word().as_deref() {
        Some("SELECT") | Some("CONSTRUCT") => Ok(Request::Query(p.query_body()?)),
        Some("INSERT") | Some("DELETE") => Ok(Request::Update(p.update_body()?)),
        Some(w) if UNSUPPORTED.contains(&w) => Err(QueryError::Unsupported(w.to_owned())),
        _ => Err(p.error("expected SELECT, CONSTRUCT, INSERT or DELETE")),
    }
}

pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    match parse(text)? {
        Request::Query(q) => Ok(q),
        Request::Update(_) => Err(QueryError::syntax(text, 0, "expected a query, found an update")),
    }
}

pub fn parse_update(text: &str) -> Result<UpdateRequest, QueryError> {
    match parse(text)? {
        Request::Update(u) => Ok(u),
        Request::Query(_) => Err(QueryError::syntax(text, 0, "expected an update, found a query")),
    }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    i: usize,
    prefixes: HashMap<String, String>,
    base: Option<url::Url>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, QueryError> {
        Ok(Parser {
            src,
            toks: tokenize(src)?,
            i: 0,
            prefixes: HashMap::new(),
            base: None,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    fn peek_word(&self) -> Option<String> {
        match self.peek() {
            Some(Tok::Word(w)) => Some(w.to_ascii_uppercase()),
            _ => None,
        }
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map_or(self.src.len(), |t| t.pos)
    }

    fn error(&self, message: impl Into<String>) -> QueryError {
        QueryError::syntax(self.src, self.pos(), message)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.i).map(|t| t.tok.clone());
        self.i += 1;
        t
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Punct(c))
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.is_punct(c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), QueryError> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.peek_word().as_deref() == Some(w) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<(), QueryError> {
        if self.eat_word(w) {
            Ok(())
        } else {
            Err(self.error(format!("expected {w}")))
        }
    }

    /// Fails with unsupported-feature if the next word is outside the subset.
    fn reject_unsupported(&self) -> Result<(), QueryError> {
        if let Some(w) = self.peek_word() {
            if UNSUPPORTED.contains(&w.as_str()) {
                return Err(QueryError::Unsupported(w));
            }
        }
        Ok(())
    }

    fn prologue(&mut self) -> Result<(), QueryError> {
        loop {
            if self.eat_word("PREFIX") {
                let Some(Tok::PName(prefix, local)) = self.next() else {
                    self.i -= 1;
                    return Err(self.error("expected prefix name"));
                };
                if !local.is_empty() {
                    return Err(self.error("prefix declaration must end with ':'"));
                }
                let iri = self.iri_ref()?;
                self.prefixes.insert(prefix, iri);
            } else if self.eat_word("BASE") {
                let iri = self.iri_ref()?;
                self.base = Some(url::Url::parse(&iri).map_err(|_| self.error("BASE must be absolute"))?);
            } else {
                return Ok(());
            }
        }
    }

    fn iri_ref(&mut self) -> Result<String, QueryError> {
        match self.next() {
            Some(Tok::Iri(iri)) => self.resolve(iri),
            _ => {
                self.i -= 1;
                Err(self.error("expected <IRI>"))
            }
        }
    }

    fn resolve(&self, iri: String) -> Result<String, QueryError> {
        if is_absolute_iri(&iri) {
            return Ok(iri);
        }
        match &self.base {
            Some(base) => base
                .join(&iri)
                .map(|u| u.to_string())
                .map_err(|_| self.error(format!("cannot resolve <{iri}>"))),
            None => Err(self.error(format!("relative IRI <{iri}> without BASE"))),
        }
    }

    fn query_body(&mut self) -> Result<Query, QueryError> {
        if self.eat_word("SELECT") {
            self.reject_unsupported()?;
            let projection = if self.eat_punct('*') {
                None
            } else {
                let mut vars = Vec::new();
                loop {
                    match self.peek() {
                        Some(Tok::Var(v)) => {
                            vars.push(v.clone());
                            self.i += 1;
                        }
                        Some(Tok::Punct('(')) => {
                            return Err(QueryError::Unsupported("SELECT expressions".into()))
                        }
                        _ => break,
                    }
                }
                if vars.is_empty() {
                    return Err(self.error("expected variables or '*'"));
                }
                Some(vars)
            };
            self.reject_unsupported()?;
            let patterns = self.where_clause()?;
            let (limit, offset) = self.modifiers()?;
            self.end()?;
            if let Some(vars) = &projection {
                let known = pattern_variables(&patterns);
                if let Some(v) = vars.iter().find(|v| !known.contains(v)) {
                    return Err(QueryError::syntax(
                        self.src,
                        0,
                        format!("projected variable ?{v} does not occur in the pattern"),
                    ));
                }
            }
            Ok(Query::Select(SelectQuery {
                projection,
                patterns,
                limit,
                offset,
            }))
        } else {
            self.expect_word("CONSTRUCT")?;
            if self.peek_word().as_deref() == Some("WHERE") {
                return Err(QueryError::Unsupported("CONSTRUCT WHERE shorthand".into()));
            }
            self.expect_punct('{')?;
            let mut template = Vec::new();
            self.triples_block(&mut template, true)?;
            self.expect_punct('}')?;
            self.reject_unsupported()?;
            let patterns = self.where_clause()?;
            let (limit, offset) = self.modifiers()?;
            self.end()?;
            Ok(Query::Construct(ConstructQuery {
                template,
                patterns,
                limit,
                offset,
            }))
        }
    }

    fn end(&self) -> Result<(), QueryError> {
        self.reject_unsupported()?;
        if self.peek().is_some() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(())
    }

    fn modifiers(&mut self) -> Result<(Option<usize>, Option<usize>), QueryError> {
        let (mut limit, mut offset) = (None, None);
        loop {
            self.reject_unsupported()?;
            let slot = if self.eat_word("LIMIT") {
                &mut limit
            } else if self.eat_word("OFFSET") {
                &mut offset
            } else {
                return Ok((limit, offset));
            };
            match self.toks.get(self.i).map(|t| t.tok.clone()) {
                Some(Tok::Integer(n)) if !n.starts_with(['+', '-']) => {
                    *slot = Some(n.parse().map_err(|_| self.error("count too large"))?);
                    self.i += 1;
                }
                _ => return Err(self.error("expected a non-negative integer")),
            }
        }
    }

    fn where_clause(&mut self) -> Result<Vec<ScopedPattern>, QueryError> {
        self.eat_word("WHERE");
        self.group(true)
    }

    /// `{ triples | GRAPH term { triples } ... }`
    fn group(&mut self, allow_vars: bool) -> Result<Vec<ScopedPattern>, QueryError> {
        self.expect_punct('{')?;
        let mut out: Vec<ScopedPattern> = Vec::new();
        loop {
            self.reject_unsupported()?;
            if self.eat_punct('}') {
                return Ok(out);
            }
            if self.is_punct('{') {
                return Err(QueryError::Unsupported("nested group patterns".into()));
            }
            if self.eat_word("GRAPH") {
                let graph = match self.next() {
                    Some(Tok::Var(v)) if allow_vars => GraphScope::Var(v),
                    Some(Tok::Var(_)) => return Err(self.error("variables are not allowed here")),
                    Some(Tok::Iri(iri)) => GraphScope::Named(self.resolve(iri)?),
                    Some(Tok::PName(p, l)) => GraphScope::Named(self.expand(&p, &l)?),
                    _ => {
                        self.i -= 1;
                        return Err(self.error("expected graph IRI or variable"));
                    }
                };
                self.expect_punct('{')?;
                let mut triples = Vec::new();
                self.triples_block(&mut triples, allow_vars)?;
                self.expect_punct('}')?;
                self.eat_punct('.');
                out.push(ScopedPattern { graph, triples });
                continue;
            }
            let mut triples = Vec::new();
            self.triples_block(&mut triples, allow_vars)?;
            if triples.is_empty() {
                return Err(self.error("expected triple pattern, GRAPH or '}'"));
            }
            match out.last_mut() {
                Some(ScopedPattern {
                    graph: GraphScope::Default,
                    triples: existing,
                }) => existing.extend(triples),
                _ => out.push(ScopedPattern {
                    graph: GraphScope::Default,
                    triples,
                }),
            }
        }
    }

    fn triples_block(
        &mut self,
        out: &mut Vec<TriplePattern>,
        allow_vars: bool,
    ) -> Result<(), QueryError> {
        loop {
            self.reject_unsupported()?;
            match self.peek() {
                None | Some(Tok::Punct('}')) => return Ok(()),
                Some(Tok::Word(w)) if w.eq_ignore_ascii_case("GRAPH") => return Ok(()),
                _ => {}
            }
            let subject = self.term(allow_vars, Position::Subject)?;
            loop {
                let predicate = self.verb(allow_vars)?;
                loop {
                    let object = self.term(allow_vars, Position::Object)?;
                    if let Some(Tok::Punct('/' | '|' | '*' | '+' | '?' | '^')) = self.peek() {
                        return Err(QueryError::Unsupported("property paths".into()));
                    }
                    out.push(TriplePattern {
                        subject: subject.clone(),
                        predicate: predicate.clone(),
                        object,
                    });
                    if !self.eat_punct(',') {
                        break;
                    }
                }
                if !self.eat_punct(';') {
                    break;
                }
                while self.eat_punct(';') {}
                if matches!(self.peek(), Some(Tok::Punct('.' | '}')) | None) {
                    break;
                }
            }
            if !self.eat_punct('.') {
                return Ok(());
            }
        }
    }

    fn verb(&mut self, allow_vars: bool) -> Result<VarOrTerm, QueryError> {
        if let Some(Tok::Word(w)) = self.peek() {
            if w == "a" {
                self.i += 1;
                return Ok(VarOrTerm::Term(Term::iri(RDF_TYPE)));
            }
        }
        if let Some(Tok::Punct('^' | '!' | '(')) = self.peek() {
            return Err(QueryError::Unsupported("property paths".into()));
        }
        let v = self.term(allow_vars, Position::Predicate)?;
        if let Some(Tok::Punct('/' | '|' | '*' | '+' | '?')) = self.peek() {
            return Err(QueryError::Unsupported("property paths".into()));
        }
        Ok(v)
    }

    fn expand(&self, prefix: &str, local: &str) -> Result<String, QueryError> {
        let ns = self
            .prefixes
            .get(prefix)
            .ok_or_else(|| self.error(format!("undeclared prefix {prefix}:")))?;
        Ok(format!("{ns}{local}"))
    }

    fn term(&mut self, allow_vars: bool, position: Position) -> Result<VarOrTerm, QueryError> {
        let at = self.i;
        let tok = self.next().ok_or_else(|| self.error("unexpected end of input"))?;
        let term = match tok {
            Tok::Var(v) => {
                if !allow_vars {
                    self.i = at;
                    return Err(self.error("variables are not allowed in DATA blocks"));
                }
                return Ok(VarOrTerm::Var(v));
            }
            Tok::Iri(iri) => Term::iri(self.resolve(iri)?),
            Tok::PName(p, l) => Term::iri(self.expand(&p, &l)?),
            Tok::Blank(label) => {
                if allow_vars {
                    return Ok(VarOrTerm::Var(format!("{BLANK_VAR}{label}")));
                }
                Term::blank(label)
            }
            Tok::Punct('[') => return Err(QueryError::Unsupported("blank node property lists".into())),
            Tok::Punct('(') => return Err(QueryError::Unsupported("collections".into())),
            Tok::Str(s) => match self.peek().cloned() {
                Some(Tok::LangTag(tag)) => {
                    self.i += 1;
                    Term::Literal(Literal::lang_string(s, tag.to_ascii_lowercase()))
                }
                Some(Tok::DataType) => {
                    self.i += 1;
                    let dt = match self.next() {
                        Some(Tok::Iri(iri)) => self.resolve(iri)?,
                        Some(Tok::PName(p, l)) => self.expand(&p, &l)?,
                        _ => {
                            self.i -= 1;
                            return Err(self.error("expected datatype IRI"));
                        }
                    };
                    Term::Literal(Literal::typed(s, dt))
                }
                _ => Term::literal(s),
            },
            Tok::Integer(n) => Term::Literal(Literal::typed(n, format!("{XSD}integer"))),
            Tok::Decimal(n) => Term::Literal(Literal::typed(n, format!("{XSD}decimal"))),
            Tok::Double(n) => Term::Literal(Literal::typed(n, format!("{XSD}double"))),
            Tok::Word(w) if w == "true" || w == "false" => {
                Term::Literal(Literal::typed(w, format!("{XSD}boolean")))
            }
            _ => {
                self.i = at;
                return Err(self.error("expected an RDF term"));
            }
        };
        match (&term, position) {
            (Term::Literal(_), Position::Subject | Position::Predicate)
            | (Term::Blank(_), Position::Predicate) => {
                self.i = at;
                Err(self.error("term not allowed in this position"))
            }
            _ => Ok(VarOrTerm::Term(term)),
        }
    }

    fn update_body(&mut self) -> Result<UpdateRequest, QueryError> {
        let mut ops = Vec::new();
        loop {
            self.prologue()?;
            if self.peek().is_none() && !ops.is_empty() {
                break;
            }
            self.reject_unsupported()?;
            if self.eat_word("INSERT") {
                if !self.eat_word("DATA") {
                    return Err(QueryError::Unsupported("INSERT with WHERE templates".into()));
                }
                ops.push(UpdateOp::InsertData(self.quad_data(true)?));
            } else if self.eat_word("DELETE") {
                if self.eat_word("DATA") {
                    ops.push(UpdateOp::DeleteData(self.quad_data(false)?));
                } else if self.eat_word("WHERE") {
                    ops.push(UpdateOp::DeleteWhere(self.group(true)?));
                } else {
                    return Err(QueryError::Unsupported("DELETE with WHERE templates".into()));
                }
            } else {
                return Err(self.error("expected INSERT DATA, DELETE DATA or DELETE WHERE"));
            }
            if !self.eat_punct(';') {
                break;
            }
        }
        self.end()?;
        Ok(UpdateRequest { ops })
    }

    fn quad_data(&mut self, allow_blanks: bool) -> Result<Vec<Quad>, QueryError> {
        let start = self.i;
        let groups = self.group(false)?;
        let mut out = Vec::new();
        for sp in groups {
            let graph = match sp.graph {
                GraphScope::Default => None,
                GraphScope::Named(g) => Some(g),
                GraphScope::Var(_) => unreachable!("variables rejected"),
            };
            for t in sp.triples {
                let [s, p, o] = [t.subject, t.predicate, t.object].map(|v| match v {
                    VarOrTerm::Term(t) => t,
                    VarOrTerm::Var(_) => unreachable!("variables rejected"),
                });
                if !allow_blanks && (s.is_blank() || o.is_blank()) {
                    self.i = start;
                    return Err(self.error("blank nodes are not allowed in DELETE DATA"));
                }
                out.push(Quad::new(Triple::new(s, p, o), graph.clone()));
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy)]
enum Position {
    Subject,
    Predicate,
    Object,
}
