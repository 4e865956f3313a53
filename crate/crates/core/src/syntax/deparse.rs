use super::ast::{Expr, ExprKind};

/// Renders an expression back to source text.
///
/// Output is canonical: single spaces around `+` and `<-`, `, ` between
/// arguments and `; ` inside blocks. Parentheses are only inserted where
/// the grammar would otherwise regroup the tree, so `parse(deparse(e)) == e`.
pub fn deparse(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

/// Quotes a string literal using the four supported escapes.
pub fn quote_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    push_quoted(&mut out, s);
    out
}

fn push_quoted(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn write_parens(out: &mut String, e: &Expr) {
    out.push('(');
    write_expr(out, e);
    out.push(')');
}

fn write_list(out: &mut String, items: &[Expr]) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, item);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Str(s) => push_quoted(out, s),
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Concat(lhs, rhs) => {
            // A function operand would swallow the rest of the chain into its body.
            match lhs.kind {
                ExprKind::Assign(..) | ExprKind::Function(..) => write_parens(out, lhs),
                _ => write_expr(out, lhs),
            }
            out.push_str(" + ");
            match rhs.kind {
                ExprKind::Assign(..) | ExprKind::Function(..) | ExprKind::Concat(..) => write_parens(out, rhs),
                _ => write_expr(out, rhs),
            }
        }
        ExprKind::Assign(name, rhs) => {
            out.push_str(name);
            out.push_str(" <- ");
            write_expr(out, rhs);
        }
        ExprKind::Function(params, body) => {
            out.push_str("function(");
            for (i, param) in params.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&param.name);
                if let Some(default) = &param.default {
                    out.push_str(" = ");
                    write_expr(out, default);
                }
            }
            out.push_str(") ");
            match body.kind {
                ExprKind::Assign(..) => write_parens(out, body),
                _ => write_expr(out, body),
            }
        }
        ExprKind::Call(callee, args) => {
            match callee.kind {
                ExprKind::Concat(..) | ExprKind::Assign(..) | ExprKind::Function(..) => write_parens(out, callee),
                _ => write_expr(out, callee),
            }
            out.push('(');
            write_list(out, args);
            out.push(')');
        }
        ExprKind::EnvCapture => out.push_str("environment()"),
        ExprKind::Substitute(name) => {
            out.push_str("substitute(");
            out.push_str(name);
            out.push(')');
        }
        ExprKind::Eval(code, env) => {
            out.push_str("eval(");
            write_expr(out, code);
            out.push_str(", ");
            write_expr(out, env);
            out.push(')');
        }
        ExprKind::DelayedAssign(name, code, env) => {
            out.push_str("delayedAssign(");
            out.push_str(name);
            out.push_str(", ");
            write_expr(out, code);
            out.push_str(", ");
            write_expr(out, env);
            out.push(')');
        }
        ExprKind::Block(exprs) => {
            out.push_str("{ ");
            for (i, item) in exprs.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                write_expr(out, item);
            }
            out.push_str(" }");
        }
    }
}
