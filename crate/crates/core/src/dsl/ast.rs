use std::fmt;

/// Source position of a node. Spans never affect equality: two documents
/// are equal when their structure is, wherever they came from.
#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyDoc {
    pub policies: Vec<PolicyDef>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyDef {
    pub id: String,
    /// Raw action name; checked against the action set by validation.
    pub action: String,
    pub requirements: Vec<Requirement>,
    pub span: Span,
    pub action_span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Requirement {
    pub label: Option<String>,
    /// `<policy>.<label>`, or `<policy>.c<k>` for the k-th requirement when
    /// unlabeled.
    pub condition_id: String,
    pub expr: Expr,
    pub span: Span,
}

impl Requirement {
    pub fn synthesize_id(policy: &str, label: Option<&str>, index: usize) -> String {
        match label {
            Some(l) => format!("{policy}.{l}"),
            None => format!("{policy}.c{}", index + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn from_lexeme(s: &str) -> Option<CmpOp> {
        Some(match s {
            "=" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Bool(bool),
    Int(i64),
    /// `requester`, `resource.author`, `grade.creator`, ...
    Path(Vec<String>),
    Call { name: String, args: Vec<Expr> },
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Compare { op: CmpOp, lhs: Box<Expr>, rhs: Box<Expr> },
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Binding strength, used by the printer to decide on parentheses.
    pub(crate) fn precedence(&self) -> u8 {
        match self.kind {
            ExprKind::Or(..) => 1,
            ExprKind::And(..) => 2,
            ExprKind::Not(_) => 3,
            ExprKind::Compare { .. } => 4,
            _ => 5,
        }
    }

    /// Number of nodes, handy for bounding generated test inputs.
    pub fn size(&self) -> usize {
        match &self.kind {
            ExprKind::Bool(_) | ExprKind::Int(_) | ExprKind::Path(_) => 1,
            ExprKind::Call { args, .. } => 1 + args.iter().map(Expr::size).sum::<usize>(),
            ExprKind::Not(e) => 1 + e.size(),
            ExprKind::And(a, b) | ExprKind::Or(a, b) => 1 + a.size() + b.size(),
            ExprKind::Compare { lhs, rhs, .. } => 1 + lhs.size() + rhs.size(),
        }
    }
}
