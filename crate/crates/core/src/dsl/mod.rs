//! A small policy language for the classroom workflow.
//!
//! ```text
//! policy P4 on review_homework {
//!     require not_author: resource.author != requester;
//!     require review_count_lt_3: review_count(resource) < 3;
//! }
//! ```
//!
//! Source goes through [`tokenize`], [`parse`], [`validate`] and
//! [`compile`]; the helpers at the bottom chain those steps. A labeled
//! requirement becomes condition `<policy>.<label>`, so a document using the
//! oracle's condition names yields decisions (and explanations) comparable
//! field by field with the oracle's.

mod ast;
mod compile;
mod parser;
mod pretty;
mod token;
mod validate;

use std::path::Path;

pub use ast::{CmpOp, Expr, ExprKind, PolicyDef, PolicyDoc, Requirement, Span};
pub use compile::{compile, CompiledPolicy, CompiledPolicySet};
pub use parser::{parse, ParseError, MAX_CHAIN, MAX_DEPTH};
pub use pretty::{expr_to_string, pretty_print};
pub use token::{tokenize, Keyword, LexError, Token, TokenKind};
pub use validate::{
    attribute_type, resource_type, validate, validate_dialect, Dialect, SemanticError, Type, ValidatedDoc,
    ValidatedPolicy, BUILTINS,
};

/// The reference encoding of the seven workflow policies.
pub const CLASSROOM_POLICY: &str = include_str!("../../../../policies/classroom.acpol");
/// The ABAC baseline's rules (restricted dialect).
pub const ABAC_BASELINE_POLICY: &str = include_str!("../../../../policies/abac_baseline.acpol");

#[derive(Debug, thiserror::Error)]
pub enum DslError {
    #[error("lexical error at {0}")]
    Lex(#[from] LexError),
    #[error("syntax error at {0}")]
    Parse(#[from] ParseError),
    #[error("{} semantic error(s); first at {}", .0.len(), .0[0])]
    Semantic(Vec<SemanticError>),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A positioned diagnostic line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl DslError {
    /// Every positioned problem, in source order.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            DslError::Lex(e) => vec![Diagnostic {
                line: e.line,
                column: e.column,
                message: e.message.clone(),
            }],
            DslError::Parse(e) => vec![Diagnostic {
                line: e.line,
                column: e.column,
                message: e.message.clone(),
            }],
            DslError::Semantic(es) => es
                .iter()
                .map(|e| Diagnostic {
                    line: e.line,
                    column: e.column,
                    message: e.message.clone(),
                })
                .collect(),
            DslError::Io { .. } => vec![],
        }
    }
}

pub fn parse_source(source: &str) -> Result<PolicyDoc, DslError> {
    let tokens = tokenize(source)?;
    Ok(parse(&tokens, source)?)
}

pub fn check_source(source: &str, dialect: Dialect) -> Result<ValidatedDoc, DslError> {
    let doc = parse_source(source)?;
    validate_dialect(&doc, dialect).map_err(DslError::Semantic)
}

pub fn compile_source(source: &str, dialect: Dialect) -> Result<CompiledPolicySet, DslError> {
    Ok(compile(&check_source(source, dialect)?))
}

pub fn read_source(path: impl AsRef<Path>) -> Result<String, DslError> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|source| DslError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_file(path: impl AsRef<Path>, dialect: Dialect) -> Result<CompiledPolicySet, DslError> {
    compile_source(&read_source(path)?, dialect)
}

/// The compiled reference policies.
pub fn classroom() -> CompiledPolicySet {
    compile_source(CLASSROOM_POLICY, Dialect::Full).expect("shipped policy file is valid")
}
