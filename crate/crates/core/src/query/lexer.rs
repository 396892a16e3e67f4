use super::QueryError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Iri(String),
    PName(String, String),
    Var(String),
    Blank(String),
    Str(String),
    LangTag(String),
    DataType,
    Integer(String),
    Decimal(String),
    Double(String),
    Word(String),
    Punct(char),
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: usize,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, QueryError> {
    let mut lx = Lexer { src, pos: 0 };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia();
        let start = lx.pos;
        let Some(c) = lx.peek() else {
            return Ok(out);
        };
        let tok = match c {
            '<' => match lx.iri()? {
                Some(iri) => Tok::Iri(iri),
                None => {
                    lx.pos += 1;
                    Tok::Punct('<')
                }
            },
            '?' | '$' => {
                lx.pos += 1;
                let name = lx.take_while(is_name_char);
                if name.is_empty() {
                    Tok::Punct(c)
                } else {
                    Tok::Var(name.to_owned())
                }
            }
            '_' if lx.rest().starts_with("_:") => {
                lx.pos += 2;
                let label = lx.pname_local();
                if label.is_empty() {
                    return Err(QueryError::syntax(src, start, "empty blank node label"));
                }
                Tok::Blank(label)
            }
            '"' | '\'' => Tok::Str(lx.string()?),
            '@' => {
                lx.pos += 1;
                let tag = lx.take_while(|c| c.is_ascii_alphanumeric() || c == '-');
                if tag.is_empty() {
                    return Err(QueryError::syntax(src, start, "empty language tag"));
                }
                Tok::LangTag(tag.to_owned())
            }
            '^' if lx.rest().starts_with("^^") => {
                lx.pos += 2;
                Tok::DataType
            }
            '0'..='9' => lx.number(),
            '+' | '-' | '.'
                if lx.rest()[1..]
                    .chars()
                    .next()
                    .is_some_and(|d| d.is_ascii_digit())
                    && !(c == '.' && out.last().is_some_and(|t: &Token| ends_term(&t.tok))) =>
            {
                lx.number()
            }
            c if c.is_alphabetic() || c == ':' => {
                let word = lx.take_while(|c| c.is_alphanumeric() || c == '_' || c == '-');
                let word = word.to_owned();
                if lx.peek() == Some(':') {
                    lx.pos += 1;
                    let local = lx.pname_local();
                    Tok::PName(word, local)
                } else {
                    Tok::Word(word)
                }
            }
            c => {
                lx.pos += c.len_utf8();
                Tok::Punct(c)
            }
        };
        out.push(Token { tok, pos: start });
    }
}

fn ends_term(t: &Tok) -> bool {
    !matches!(t, Tok::Punct(_) | Tok::Word(_) | Tok::DataType)
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let rest = self.rest();
        let len = rest.find(|c| !f(c)).unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    fn skip_trivia(&mut self) {
        loop {
            self.take_while(char::is_whitespace);
            if self.peek() == Some('#') {
                self.take_while(|c| c != '\n');
            } else {
                return;
            }
        }
    }

    /// `None` when `<` does not open an IRI (e.g. a comparison).
    fn iri(&mut self) -> Result<Option<String>, QueryError> {
        let rest = &self.rest()[1..];
        let mut out = String::new();
        let mut chars = rest.char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '>' => {
                    self.pos += 1 + i + 1;
                    return Ok(Some(out));
                }
                '\\' => {
                    let n = match chars.next() {
                        Some((_, 'u')) => 4,
                        Some((_, 'U')) => 8,
                        _ => return Err(QueryError::syntax(self.src, self.pos, "bad IRI escape")),
                    };
                    let hex: String = chars.by_ref().take(n).map(|(_, c)| c).collect();
                    let cp = u32::from_str_radix(&hex, 16)
                        .ok()
                        .and_then(char::from_u32)
                        .ok_or_else(|| QueryError::syntax(self.src, self.pos, "bad IRI escape"))?;
                    out.push(cp);
                }
                c if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') => {
                    return Ok(None);
                }
                c => out.push(c),
            }
        }
        Ok(None)
    }

    fn pname_local(&mut self) -> String {
        let rest = self.rest();
        let mut end = 0;
        let mut out = String::new();
        let mut chars = rest.char_indices().peekable();
        while let Some(&(i, c)) = chars.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | ':') {
                out.push(c);
                chars.next();
                end = i + c.len_utf8();
            } else if c == '%'
                && rest
                    .get(i + 1..i + 3)
                    .is_some_and(|h| h.chars().all(|h| h.is_ascii_hexdigit()))
            {
                out.push_str(&rest[i..i + 3]);
                chars.next();
                chars.next();
                chars.next();
                end = i + 3;
            } else if c == '\\' && rest[i + 1..].chars().next().is_some_and(|e| "_~.-!$&'()*+,;=/?#@%".contains(e)) {
                let e = rest[i + 1..].chars().next().expect("checked");
                out.push(e);
                chars.next();
                chars.next();
                end = i + 1 + e.len_utf8();
            } else if c == '.' {
                let next = rest[i + 1..].chars().next();
                if next.is_some_and(|n| n.is_alphanumeric() || matches!(n, '_' | '-' | ':' | '%')) {
                    out.push('.');
                    chars.next();
                    end = i + 1;
                } else {
                    break;
                }
            } else {
                break;
            }
        }
        self.pos += end;
        out
    }

    fn string(&mut self) -> Result<String, QueryError> {
        let start = self.pos;
        let quote = self.peek().expect("caller checked");
        let long: String = std::iter::repeat_n(quote, 3).collect();
        let is_long = self.rest().starts_with(&long);
        self.pos += if is_long { 3 } else { 1 };
        let mut out = String::new();
        loop {
            let Some(c) = self.peek() else {
                return Err(QueryError::syntax(self.src, start, "unterminated string"));
            };
            if is_long && self.rest().starts_with(&long) {
                self.pos += 3;
                return Ok(out);
            }
            if !is_long && c == quote {
                self.pos += 1;
                return Ok(out);
            }
            if !is_long && (c == '\n' || c == '\r') {
                return Err(QueryError::syntax(self.src, self.pos, "newline in string"));
            }
            self.pos += c.len_utf8();
            if c != '\\' {
                out.push(c);
                continue;
            }
            let Some(e) = self.peek() else {
                return Err(QueryError::syntax(self.src, start, "unterminated string"));
            };
            self.pos += e.len_utf8();
            match e {
                't' => out.push('\t'),
                'n' => out.push('\n'),
                'r' => out.push('\r'),
                'b' => out.push('\u{8}'),
                'f' => out.push('\u{c}'),
                '"' => out.push('"'),
                '\'' => out.push('\''),
                '\\' => out.push('\\'),
                'u' | 'U' => {
                    let n = if e == 'u' { 4 } else { 8 };
                    let hex = self.rest().get(..n).unwrap_or("");
                    let cp = u32::from_str_radix(hex, 16)
                        .ok()
                        .filter(|_| hex.len() == n)
                        .and_then(char::from_u32)
                        .ok_or_else(|| QueryError::syntax(self.src, self.pos, "bad \\u escape"))?;
                    self.pos += n;
                    out.push(cp);
                }
                _ => return Err(QueryError::syntax(self.src, self.pos - 1, "bad string escape")),
            }
        }
    }

    fn number(&mut self) -> Tok {
        let start = self.pos;
        if matches!(self.peek(), Some('+' | '-')) {
            self.pos += 1;
        }
        self.take_while(|c| c.is_ascii_digit());
        let mut decimal = false;
        if self.peek() == Some('.') && self.rest()[1..].starts_with(|c: char| c.is_ascii_digit()) {
            decimal = true;
            self.pos += 1;
            self.take_while(|c| c.is_ascii_digit());
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if self.take_while(|c| c.is_ascii_digit()).is_empty() {
                self.pos = save;
            } else {
                return Tok::Double(self.src[start..self.pos].to_owned());
            }
        }
        let text = self.src[start..self.pos].to_owned();
        if decimal {
            Tok::Decimal(text)
        } else {
            Tok::Integer(text)
        }
    }
}
