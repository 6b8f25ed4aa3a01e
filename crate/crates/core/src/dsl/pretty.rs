//! Canonical formatting for policy documents.

use super::ast::{Expr, ExprKind, PolicyDoc};

const INDENT: &str = "    ";

/// Formats `doc` canonically: one requirement per line, four-space indent,
/// a blank line between policies, and only the parentheses the grammar
/// needs. Comments are not preserved.
pub fn pretty_print(doc: &PolicyDoc) -> String {
    let mut out = String::new();
    for (i, p) in doc.policies.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("policy {} on {} {{\n", p.id, p.action));
        for r in &p.requirements {
            out.push_str(INDENT);
            out.push_str("require ");
            if let Some(label) = &r.label {
                out.push_str(label);
                out.push_str(": ");
            }
            write_expr(&r.expr, &mut out);
            out.push_str(";\n");
        }
        out.push_str("}\n");
    }
    out
}

/// Formats a single expression.
pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn write_child(e: &Expr, min_prec: u8, out: &mut String) {
    if e.precedence() < min_prec {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Int(n) => out.push_str(&n.to_string()),
        ExprKind::Path(segs) => out.push_str(&segs.join(".")),
        ExprKind::Call { name, args } => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(a, out);
            }
            out.push(')');
        }
        ExprKind::Not(inner) => {
            out.push_str("not ");
            write_child(inner, 3, out);
        }
        // Left-associative: the right operand needs strictly higher binding.
        ExprKind::And(a, b) => {
            write_child(a, 2, out);
            out.push_str(" and ");
            write_child(b, 3, out);
        }
        ExprKind::Or(a, b) => {
            write_child(a, 1, out);
            out.push_str(" or ");
            write_child(b, 2, out);
        }
        // Comparisons do not chain, so both sides must be primaries.
        ExprKind::Compare { op, lhs, rhs } => {
            write_child(lhs, 5, out);
            out.push(' ');
            out.push_str(op.as_str());
            out.push(' ');
            write_child(rhs, 5, out);
        }
    }
}
