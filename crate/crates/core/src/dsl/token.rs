use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Keyword {
    Policy,
    On,
    Require,
    And,
    Or,
    Not,
    True,
    False,
}

impl Keyword {
    fn from_ident(s: &str) -> Option<Keyword> {
        Some(match s {
            "policy" => Keyword::Policy,
            "on" => Keyword::On,
            "require" => Keyword::Require,
            "and" => Keyword::And,
            "or" => Keyword::Or,
            "not" => Keyword::Not,
            "true" => Keyword::True,
            "false" => Keyword::False,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Policy => "policy",
            Keyword::On => "on",
            Keyword::Require => "require",
            Keyword::And => "and",
            Keyword::Or => "or",
            Keyword::Not => "not",
            Keyword::True => "true",
            Keyword::False => "false",
        }
    }

    pub fn is_keyword(s: &str) -> bool {
        Keyword::from_ident(s).is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident,
    Integer,
    Operator,
    Punct,
}

impl TokenKind {
    pub fn category(self) -> &'static str {
        match self {
            TokenKind::Keyword(_) => "keyword",
            TokenKind::Ident => "identifier",
            TokenKind::Integer => "integer",
            TokenKind::Operator => "operator",
            TokenKind::Punct => "punct",
        }
    }
}

/// One lexeme with its 1-based position. `offset` is the byte offset of the
/// lexeme in the source, so `&source[offset..offset + lexeme.len()]` is the
/// lexeme itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub line: usize,
    pub column: usize,
    pub offset: usize,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.lexeme == p
    }

    pub fn is_keyword(&self, k: Keyword) -> bool {
        self.kind == TokenKind::Keyword(k)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} '{}'", self.kind.category(), self.lexeme)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct LexError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> LexError {
        LexError {
            line,
            column,
            message: message.into(),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits policy source into tokens, skipping whitespace, `#` line comments
/// and `/* */` block comments.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        src: source,
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    while let Some(c) = cur.peek() {
        let (line, column, start) = (cur.line, cur.column, cur.pos);
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if c == '/' && cur.peek2() == Some('*') {
            cur.bump();
            cur.bump();
            loop {
                match cur.bump() {
                    None => return Err(cur.error(line, column, "unterminated block comment")),
                    Some('*') if cur.peek() == Some('/') => {
                        cur.bump();
                        break;
                    }
                    Some(_) => {}
                }
            }
            continue;
        }
        let kind = if is_ident_start(c) {
            while cur.peek().is_some_and(is_ident_continue) {
                cur.bump();
            }
            match Keyword::from_ident(&source[start..cur.pos]) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident,
            }
        } else if c.is_ascii_digit() {
            while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                cur.bump();
            }
            if cur.peek().is_some_and(is_ident_start) {
                return Err(cur.error(line, column, "identifiers must not start with a digit"));
            }
            if source[start..cur.pos].parse::<i64>().is_err() {
                return Err(cur.error(line, column, "integer literal out of range"));
            }
            TokenKind::Integer
        } else {
            match c {
                '=' => {
                    cur.bump();
                    TokenKind::Operator
                }
                '<' | '>' => {
                    cur.bump();
                    if cur.peek() == Some('=') {
                        cur.bump();
                    }
                    TokenKind::Operator
                }
                '!' => {
                    cur.bump();
                    if cur.peek() != Some('=') {
                        return Err(cur.error(line, column, "'!' must be followed by '=' (use 'not' for negation)"));
                    }
                    cur.bump();
                    TokenKind::Operator
                }
                '{' | '}' | '(' | ')' | ';' | ':' | ',' | '.' => {
                    cur.bump();
                    TokenKind::Punct
                }
                other => {
                    return Err(cur.error(line, column, format!("illegal character {other:?}")));
                }
            }
        };
        tokens.push(Token {
            kind,
            lexeme: source[start..cur.pos].to_owned(),
            line,
            column,
            offset: start,
        });
    }
    Ok(tokens)
}

/// Position just past the last character of `source` (where an
/// end-of-input error points).
pub fn end_position(source: &str) -> (usize, usize) {
    let line = 1 + source.matches('\n').count();
    let last = source.rsplit('\n').next().unwrap_or("");
    (line, last.chars().count() + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.lexeme))
            .collect()
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").unwrap().is_empty());
        assert!(tokenize("  # only a comment\n/* and a block */").unwrap().is_empty());
    }

    #[test]
    fn policy_header() {
        assert_eq!(
            kinds("policy P4 on review_homework"),
            vec![
                (TokenKind::Keyword(Keyword::Policy), "policy".into()),
                (TokenKind::Ident, "P4".into()),
                (TokenKind::Keyword(Keyword::On), "on".into()),
                (TokenKind::Ident, "review_homework".into()),
            ]
        );
    }

    #[test]
    fn call_comparison() {
        let toks = tokenize("review_count(resource) < 3").unwrap();
        assert_eq!(toks.len(), 6);
        let last = toks.last().unwrap();
        assert_eq!(last.kind, TokenKind::Integer);
        assert_eq!(last.lexeme, "3");
        assert_eq!((last.line, last.column), (1, 26));
    }

    #[test]
    fn operators_are_maximal_munch() {
        let ops: Vec<String> = tokenize("a<=b>=c!=d<e>f=g")
            .unwrap()
            .into_iter()
            .filter(|t| t.kind == TokenKind::Operator)
            .map(|t| t.lexeme)
            .collect();
        assert_eq!(ops, ["<=", ">=", "!=", "<", ">", "="]);
    }

    #[test]
    fn positions_and_offsets() {
        let src = "policy P1\n  on\tupload_homework { }";
        for t in tokenize(src).unwrap() {
            assert_eq!(&src[t.offset..t.offset + t.lexeme.len()], t.lexeme);
        }
        let toks = tokenize(src).unwrap();
        assert_eq!((toks[2].line, toks[2].column), (2, 3));
    }

    #[test]
    fn lexical_errors_are_positioned() {
        let e = tokenize("policy P1 on x {\n  require $;").unwrap_err();
        assert_eq!((e.line, e.column), (2, 11));
        assert!(e.message.contains("illegal character"));
        let e = tokenize("a /* never closed").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
        assert!(e.message.contains("unterminated"));
        assert!(tokenize("a ! b").is_err());
        assert!(tokenize("99999999999999999999").is_err());
        assert!(tokenize("3abc").is_err());
    }

    #[test]
    fn end_of_input_position() {
        assert_eq!(end_position(""), (1, 1));
        assert_eq!(end_position("ab\ncd"), (2, 3));
    }
}
