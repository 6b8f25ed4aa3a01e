//! Random policy documents and random policy-ish text, from a seed.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use provac::dsl::{CmpOp, Expr, ExprKind, PolicyDef, PolicyDoc, Requirement, Span};

const IDENTS: &[&str] = &[
    "resource", "requester", "grade", "author", "submitted", "graded", "creator", "x", "y_2", "_tmp",
    "review_count", "has_reviewed", "policy_", "onx", "nott", "P9",
];
const ACTIONS: &[&str] = &[
    "upload_homework", "replace_homework", "submit_homework", "review_homework", "revise_review",
    "grade_homework", "append_review_to_grade", "other_action", "a", "b",
];
const OPS: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

fn ident(rng: &mut impl Rng) -> String {
    IDENTS.choose(rng).unwrap().to_string()
}

fn leaf(rng: &mut impl Rng) -> Expr {
    let kind = match rng.random_range(0..4) {
        0 => ExprKind::Bool(rng.random()),
        1 => ExprKind::Int(rng.random_range(0..=i64::MAX / 2)),
        _ => ExprKind::Path((0..rng.random_range(1..=3)).map(|_| ident(rng)).collect()),
    };
    Expr::new(kind, Span::default())
}

/// A random expression no deeper than `depth`.
pub fn expr(rng: &mut impl Rng, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return leaf(rng);
    }
    let d = depth - 1;
    let kind = match rng.random_range(0..5) {
        0 => ExprKind::Not(Box::new(expr(rng, d))),
        1 => ExprKind::And(Box::new(expr(rng, d)), Box::new(expr(rng, d))),
        2 => ExprKind::Or(Box::new(expr(rng, d)), Box::new(expr(rng, d))),
        3 => {
            let op = *OPS.choose(rng).unwrap();
            ExprKind::Compare { op, lhs: Box::new(expr(rng, d)), rhs: Box::new(expr(rng, d)) }
        }
        _ => {
            let name = ident(rng);
            let n = rng.random_range(0..=3);
            ExprKind::Call { name, args: (0..n).map(|_| expr(rng, d)).collect() }
        }
    };
    Expr::new(kind, Span::default())
}

/// A syntactically valid document (not necessarily a meaningful one).
pub fn doc(seed: u64) -> PolicyDoc {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=4);
    let actions: Vec<&str> = ACTIONS.choose_multiple(&mut rng, n).copied().collect();
    let policies = actions
        .into_iter()
        .enumerate()
        .map(|(i, action)| {
            let id = format!("P{}", i + 1);
            let requirements = (0..rng.random_range(0..=4))
                .map(|k| {
                    let label = rng.random_bool(0.6).then(|| format!("{}_{k}", ident(&mut rng)));
                    Requirement {
                        condition_id: Requirement::synthesize_id(&id, label.as_deref(), k),
                        label,
                        expr: expr(&mut rng, 4),
                        span: Span::default(),
                    }
                })
                .collect();
            PolicyDef { id, action: action.into(), requirements, span: Span::default(), action_span: Span::default() }
        })
        .collect();
    PolicyDoc { policies }
}

const FRAGMENTS: &[&str] = &[
    "policy", "on", "require", "and", "or", "not", "true", "false", "{", "}", "(", ")", ";", ":", ",", ".",
    "=", "!=", "<", "<=", ">", ">=", "!", "P1", "x", "resource", "requester", "review_count", "grade",
    "9", "99999999999999999999", "0", "#", "/*", "*/", "\n", " ", "\t", "@", "é", "\"", "1a", "_",
];

/// A random input for the tokenizer and parser: either fragment soup or a
/// byte-level mutation of `base`.
pub fn fuzz_input(rng: &mut impl Rng, base: &str) -> String {
    if rng.random_bool(0.5) {
        let n = rng.random_range(0..40);
        let mut s = String::new();
        for _ in 0..n {
            s.push_str(FRAGMENTS.choose(rng).unwrap());
            if rng.random_bool(0.5) {
                s.push(' ');
            }
        }
        s
    } else {
        let mut chars: Vec<char> = base.chars().collect();
        for _ in 0..rng.random_range(1..=4) {
            let at = rng.random_range(0..=chars.len());
            match rng.random_range(0..3) {
                0 if at < chars.len() => {
                    chars.remove(at);
                }
                1 => chars.insert(at, char::from(rng.random_range(0x20u8..0x7f))),
                _ => {
                    let frag = FRAGMENTS.choose(rng).unwrap();
                    for (i, c) in frag.chars().enumerate() {
                        chars.insert((at + i).min(chars.len()), c);
                    }
                }
            }
        }
        chars.into_iter().collect()
    }
}
