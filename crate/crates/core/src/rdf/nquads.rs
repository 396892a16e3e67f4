use std::fmt::Write as _;

use thiserror::Error;

use super::{is_absolute_iri, Dataset, Literal, Quad, Term, Triple, RDF_LANG_STRING, XSD_STRING};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

/// Parses an N-Quads document. Comments and blank lines are skipped and
/// duplicate statements collapse.
pub fn parse_nquads(bytes: &[u8]) -> Result<Dataset, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        ParseError {
            line,
            message: "invalid UTF-8".into(),
        }
    })?;
    parse_nquads_str(text)
}

pub fn parse_nquads_str(text: &str) -> Result<Dataset, ParseError> {
    let mut dataset = Dataset::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let mut cursor = Cursor::new(line, idx + 1);
        if let Some(quad) = cursor.statement()? {
            dataset.insert(quad);
        }
    }
    Ok(dataset)
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Cursor { src, pos: 0, line }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            line: self.line,
            message: message.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
    }

    fn at_end_or_comment(&self) -> bool {
        matches!(self.peek(), None | Some('#'))
    }

    fn statement(&mut self) -> Result<Option<Quad>, ParseError> {
        self.skip_ws();
        if self.at_end_or_comment() {
            return Ok(None);
        }
        let subject = match self.peek() {
            Some('<') => Term::Iri(self.iri()?),
            Some('_') => Term::Blank(self.blank()?),
            _ => return self.err("expected IRI or blank node as subject"),
        };
        self.skip_ws();
        let predicate = match self.peek() {
            Some('<') => Term::Iri(self.iri()?),
            _ => return self.err("expected IRI as predicate"),
        };
        self.skip_ws();
        let object = match self.peek() {
            Some('<') => Term::Iri(self.iri()?),
            Some('_') => Term::Blank(self.blank()?),
            Some('"') => Term::Literal(self.literal()?),
            _ => return self.err("expected IRI, blank node or literal as object"),
        };
        self.skip_ws();
        let graph = match self.peek() {
            Some('<') => Some(self.iri()?),
            Some('_') => return self.err("blank node graph labels are not supported"),
            _ => None,
        };
        self.skip_ws();
        if self.bump() != Some('.') {
            return self.err("expected '.' at end of statement");
        }
        self.skip_ws();
        if !self.at_end_or_comment() {
            return self.err("unexpected content after '.'");
        }
        Ok(Some(Quad {
            subject,
            predicate,
            object,
            graph,
        }))
    }

    fn iri(&mut self) -> Result<String, ParseError> {
        self.bump(); // '<'
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return self.err("unterminated IRI"),
                Some('>') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('u') => self.hex_escape(4)?,
                        Some('U') => self.hex_escape(8)?,
                        _ => return self.err("invalid escape in IRI"),
                    };
                    if is_forbidden_iri_char(c) {
                        return self.err(format!("escaped character {c:?} not allowed in IRI"));
                    }
                    out.push(c);
                }
                Some(c) if is_forbidden_iri_char(c) => {
                    return self.err(format!("character {c:?} not allowed in IRI"))
                }
                Some(c) => out.push(c),
            }
        }
        if !is_absolute_iri(&out) {
            return self.err(format!("relative IRI <{out}>"));
        }
        Ok(out)
    }

    fn blank(&mut self) -> Result<String, ParseError> {
        if !self.rest().starts_with("_:") {
            return self.err("expected '_:'");
        }
        self.pos += 2;
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_alphanumeric() || c == '_' => {}
            _ => return self.err("invalid blank node label"),
        }
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '\u{B7}') {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        // a trailing '.' terminates the statement rather than the label
        while self.src[start..self.pos].ends_with('.') {
            self.pos -= 1;
        }
        Ok(self.src[start..self.pos].to_owned())
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        self.bump(); // '"'
        let mut lexical = String::new();
        loop {
            match self.bump() {
                None => return self.err("unterminated string literal"),
                Some('"') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{C}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex_escape(4)?,
                        Some('U') => self.hex_escape(8)?,
                        _ => return self.err("invalid escape in string literal"),
                    };
                    lexical.push(c);
                }
                Some(c) => lexical.push(c),
            }
        }
        match self.peek() {
            Some('@') => {
                self.bump();
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                    self.pos += 1;
                }
                let tag = &self.src[start..self.pos];
                if !is_lang_tag(tag) {
                    return self.err(format!("invalid language tag {tag:?}"));
                }
                Ok(Literal::lang_string(lexical, tag))
            }
            Some('^') => {
                if !self.rest().starts_with("^^<") {
                    return self.err("expected '^^<' datatype");
                }
                self.pos += 2;
                let dt = self.iri()?;
                if dt == RDF_LANG_STRING {
                    return self.err("rdf:langString literal without language tag");
                }
                Ok(Literal::typed(lexical, dt))
            }
            _ => Ok(Literal::simple(lexical)),
        }
    }

    fn hex_escape(&mut self, digits: usize) -> Result<char, ParseError> {
        let end = self.pos + digits;
        let Some(hex) = self.src.get(self.pos..end) else {
            return self.err("truncated unicode escape");
        };
        if !hex.chars().all(|c| c.is_ascii_hexdigit()) {
            return self.err("invalid unicode escape");
        }
        self.pos = end;
        let code = u32::from_str_radix(hex, 16).expect("validated hex");
        match char::from_u32(code) {
            Some(c) => Ok(c),
            None => self.err(format!("invalid code point U+{code:X}")),
        }
    }
}

fn is_forbidden_iri_char(c: char) -> bool {
    c <= ' ' || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
}

fn is_lang_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    let Some(first) = parts.next() else {
        return false;
    };
    !first.is_empty()
        && first.chars().all(|c| c.is_ascii_alphabetic())
        && parts.all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric()))
}

pub fn write_term(out: &mut String, term: &Term) {
    match term {
        Term::Iri(iri) => write_iri(out, iri),
        Term::Blank(label) => {
            out.push_str("_:");
            out.push_str(label);
        }
        Term::Literal(lit) => {
            out.push('"');
            for c in lit.lexical().chars() {
                match c {
                    '\n' => out.push_str("\\n"),
                    '\r' => out.push_str("\\r"),
                    '\t' => out.push_str("\\t"),
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    c if c < ' ' || c == '\u{7F}' => {
                        let _ = write!(out, "\\u{:04X}", c as u32);
                    }
                    c => out.push(c),
                }
            }
            out.push('"');
            if let Some(lang) = lit.lang() {
                out.push('@');
                out.push_str(lang);
            } else if lit.datatype() != XSD_STRING {
                out.push_str("^^");
                write_iri(out, lit.datatype());
            }
        }
    }
}

fn write_iri(out: &mut String, iri: &str) {
    out.push('<');
    if !iri.chars().any(is_forbidden_iri_char) {
        out.push_str(iri);
        out.push('>');
        return;
    }
    for c in iri.chars() {
        if is_forbidden_iri_char(c) {
            let _ = write!(out, "\\u{:04X}", c as u32);
        } else {
            out.push(c);
        }
    }
    out.push('>');
}

/// Writes `s p o .\n`.
pub fn write_triple_line(out: &mut String, t: &Triple) {
    write_term(out, &t.subject);
    out.push(' ');
    write_term(out, &t.predicate);
    out.push(' ');
    write_term(out, &t.object);
    out.push_str(" .\n");
}

/// Writes `s p o [g] .\n`.
pub fn write_quad_line(out: &mut String, t: &Triple, graph: Option<&str>) {
    write_term(out, &t.subject);
    out.push(' ');
    write_term(out, &t.predicate);
    out.push(' ');
    write_term(out, &t.object);
    if let Some(g) = graph {
        out.push(' ');
        write_iri(out, g);
    }
    out.push_str(" .\n");
}

/// Serializes a dataset as N-Quads with lines sorted byte-wise.
///
/// Blank labels are written as stored; canonicalize the graphs first when the
/// output must be stable across blank-node renamings.
pub fn serialize_canonical(dataset: &Dataset) -> Vec<u8> {
    let mut lines: Vec<String> = Vec::with_capacity(dataset.len());
    for t in dataset.default_graph() {
        let mut line = String::new();
        write_quad_line(&mut line, t, None);
        lines.push(line);
    }
    for (name, graph) in dataset.named_graphs() {
        for t in graph {
            let mut line = String::new();
            write_quad_line(&mut line, t, Some(name));
            lines.push(line);
        }
    }
    lines.sort_unstable();
    lines.concat().into_bytes()
}
