//! Recursive-descent parser.
//!
//! ```text
//! doc       := policydef+
//! policydef := "policy" IDENT "on" IDENT "{" require* "}"
//! require   := "require" [IDENT ":"] expr ";"
//! expr      := and ("or" and)*
//! and       := unary ("and" unary)*
//! unary     := "not" unary | compare
//! compare   := primary [OP primary]
//! primary   := INT | "true" | "false" | path | call | "(" expr ")"
//! path      := IDENT ("." IDENT)*
//! call      := IDENT "(" [expr ("," expr)*] ")"
//! ```

use std::collections::HashMap;

use super::ast::{CmpOp, Expr, ExprKind, PolicyDef, PolicyDoc, Requirement, Span};
use super::token::{end_position, Keyword, Token, TokenKind};

/// Nesting bound for expressions; keeps recursion (and stack use) finite on
/// adversarial input.
pub const MAX_DEPTH: usize = 64;
/// Bound on operands joined by one run of `and` (or `or`); such runs build
/// left-leaning trees whose depth is the operand count.
pub const MAX_CHAIN: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    /// What the parser would have accepted at this point.
    pub expected: Vec<String>,
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    eof: (usize, usize),
    depth: usize,
}

fn describe(tok: Option<&Token>) -> String {
    match tok {
        Some(t) => t.to_string(),
        None => "end of input".to_owned(),
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'a Token> {
        self.tokens.get(self.pos + n)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map_or(self.eof, |t| (t.line, t.column))
    }

    fn span(&self) -> Span {
        let (line, column) = self.here();
        Span { line, column }
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        let (line, column) = self.here();
        ParseError {
            line,
            column,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let list = expected.join(" or ");
        self.error(format!("expected {list}, found {}", describe(self.peek())), expected)
    }

    fn expect_punct(&mut self, p: &'static str) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.is_punct(p) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected(&[&format!("'{p}'")])),
        }
    }

    fn expect_keyword(&mut self, k: Keyword) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.is_keyword(k) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected(&[&format!("'{}'", k.as_str())])),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<&'a Token, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    fn doc(&mut self) -> Result<PolicyDoc, ParseError> {
        let mut policies: Vec<PolicyDef> = Vec::new();
        let mut by_action: HashMap<String, (String, usize)> = HashMap::new();
        if self.peek().is_none() {
            return Err(self.error("expected 'policy', found end of input (a document needs at least one policy)", &["'policy'"]));
        }
        while self.peek().is_some() {
            let start = self.span();
            let def = self.policy()?;
            if let Some((first, line)) = by_action.get(&def.action) {
                return Err(ParseError {
                    line: start.line,
                    column: start.column,
                    message: format!(
                        "duplicate policy for action {} (already governed by {first} at line {line})",
                        def.action
                    ),
                    expected: vec![],
                });
            }
            by_action.insert(def.action.clone(), (def.id.clone(), start.line));
            policies.push(def);
        }
        Ok(PolicyDoc { policies })
    }

    fn policy(&mut self) -> Result<PolicyDef, ParseError> {
        let span = self.span();
        self.expect_keyword(Keyword::Policy)?;
        let id = self.expect_ident("policy identifier")?.lexeme.clone();
        self.expect_keyword(Keyword::On)?;
        let action_span = self.span();
        let action = self.expect_ident("action name")?.lexeme.clone();
        self.expect_punct("{")?;
        let mut requirements = Vec::new();
        loop {
            match self.peek() {
                Some(t) if t.is_punct("}") => {
                    self.pos += 1;
                    break;
                }
                Some(t) if t.is_keyword(Keyword::Require) => {
                    let index = requirements.len();
                    requirements.push(self.requirement(&id, index)?);
                }
                _ => return Err(self.unexpected(&["'require'", "'}'"])),
            }
        }
        Ok(PolicyDef {
            id,
            action,
            requirements,
            span,
            action_span,
        })
    }

    fn requirement(&mut self, policy: &str, index: usize) -> Result<Requirement, ParseError> {
        let span = self.span();
        self.expect_keyword(Keyword::Require)?;
        let label = match (self.peek(), self.peek_at(1)) {
            (Some(a), Some(b)) if a.kind == TokenKind::Ident && b.is_punct(":") => {
                self.pos += 2;
                Some(a.lexeme.clone())
            }
            _ => None,
        };
        let expr = self.expr()?;
        self.expect_punct(";")?;
        Ok(Requirement {
            condition_id: Requirement::synthesize_id(policy, label.as_deref(), index),
            label,
            expr,
            span,
        })
    }

    fn descend(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error(format!("expression nested deeper than {MAX_DEPTH} levels"), &[]));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.descend()?;
        let mut lhs = self.and()?;
        let mut operands = 1;
        while let Some(t) = self.peek().filter(|t| t.is_keyword(Keyword::Or)) {
            operands += 1;
            if operands > MAX_CHAIN {
                return Err(self.error(format!("more than {MAX_CHAIN} operands in one 'or' chain"), &[]));
            }
            self.pos += 1;
            let span = Span { line: t.line, column: t.column };
            let rhs = self.and()?;
            lhs = Expr::new(ExprKind::Or(Box::new(lhs), Box::new(rhs)), span);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        let mut operands = 1;
        while let Some(t) = self.peek().filter(|t| t.is_keyword(Keyword::And)) {
            operands += 1;
            if operands > MAX_CHAIN {
                return Err(self.error(format!("more than {MAX_CHAIN} operands in one 'and' chain"), &[]));
            }
            self.pos += 1;
            let span = Span { line: t.line, column: t.column };
            let rhs = self.unary()?;
            lhs = Expr::new(ExprKind::And(Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(t) = self.peek().filter(|t| t.is_keyword(Keyword::Not)) {
            self.pos += 1;
            self.descend()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::new(
                ExprKind::Not(Box::new(inner)),
                Span { line: t.line, column: t.column },
            ));
        }
        self.compare()
    }

    fn compare(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.primary()?;
        let Some(t) = self.peek().filter(|t| t.kind == TokenKind::Operator) else {
            return Ok(lhs);
        };
        self.pos += 1;
        let op = CmpOp::from_lexeme(&t.lexeme).expect("lexer only emits known operators");
        let rhs = self.primary()?;
        if self.peek().is_some_and(|t| t.kind == TokenKind::Operator) {
            return Err(self.error(
                "comparisons do not chain; use 'and' or parentheses",
                &["'and'", "'or'", "';'", "')'"],
            ));
        }
        Ok(Expr::new(
            ExprKind::Compare {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            Span { line: t.line, column: t.column },
        ))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let Some(t) = self.peek() else {
            return Err(self.error(
                "expected integer or attribute path, found end of input",
                &["integer", "'true'", "'false'", "attribute path", "function call", "'('"],
            ));
        };
        match t.kind {
            TokenKind::Integer => {
                self.pos += 1;
                let n = t.lexeme.parse().expect("lexer checked the range");
                Ok(Expr::new(ExprKind::Int(n), span))
            }
            TokenKind::Keyword(Keyword::True) => {
                self.pos += 1;
                Ok(Expr::new(ExprKind::Bool(true), span))
            }
            TokenKind::Keyword(Keyword::False) => {
                self.pos += 1;
                Ok(Expr::new(ExprKind::Bool(false), span))
            }
            TokenKind::Punct if t.lexeme == "(" => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_punct(")")?;
                Ok(inner)
            }
            TokenKind::Ident => {
                self.pos += 1;
                if self.peek().is_some_and(|t| t.is_punct("(")) {
                    self.pos += 1;
                    self.call(t.lexeme.clone(), span)
                } else {
                    let mut segs = vec![t.lexeme.clone()];
                    while self.peek().is_some_and(|t| t.is_punct(".")) {
                        self.pos += 1;
                        segs.push(self.expect_ident("attribute name")?.lexeme.clone());
                    }
                    Ok(Expr::new(ExprKind::Path(segs), span))
                }
            }
            _ => Err(self.error(
                format!("expected integer or attribute path, found {}", describe(Some(t))),
                &["integer", "'true'", "'false'", "attribute path", "function call", "'('"],
            )),
        }
    }

    fn call(&mut self, name: String, span: Span) -> Result<Expr, ParseError> {
        let mut args = Vec::new();
        if self.peek().is_some_and(|t| t.is_punct(")")) {
            self.pos += 1;
        } else {
            loop {
                args.push(self.expr()?);
                match self.peek() {
                    Some(t) if t.is_punct(",") => self.pos += 1,
                    Some(t) if t.is_punct(")") => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.unexpected(&["','", "')'"])),
                }
            }
        }
        Ok(Expr::new(ExprKind::Call { name, args }, span))
    }
}

/// Parses a token stream produced by [`tokenize`](super::tokenize).
/// `source` is only used to place end-of-input errors.
pub fn parse(tokens: &[Token], source: &str) -> Result<PolicyDoc, ParseError> {
    let mut p = Parser {
        tokens,
        pos: 0,
        eof: end_position(source),
        depth: 0,
    };
    p.doc()
}
