use std::fmt;
use std::rc::Rc;

use crate::syntax::{deparse, quote_str, Expr, ExprKind, Param, SourceSpan};

use super::heap::{Env, Location};

/// A function value: code plus the environment it was created in.
#[derive(Debug)]
pub struct Closure {
    pub params: Rc<[Param]>,
    pub body: Rc<Expr>,
    pub env: Env,
    /// Span of the `function` expression; identifies the definition site.
    pub site: SourceSpan,
}

impl Closure {
    pub fn to_expr(&self) -> Expr {
        Expr::with_span(ExprKind::Function(self.params.clone(), self.body.clone()), self.site)
    }
}

#[derive(Clone, Debug)]
pub enum Value {
    Str(Rc<str>),
    Closure(Rc<Closure>),
    Env(Location),
    Promise(Location),
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(s.into())
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Source-like rendering used by the CLI.
    pub fn render(&self) -> String {
        match self {
            Value::Str(s) => quote_str(s),
            Value::Closure(c) => deparse(&c.to_expr()),
            Value::Env(_) => "<environment>".to_string(),
            Value::Promise(_) => "<promise>".to_string(),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Closure(a), Value::Closure(b)) => Rc::ptr_eq(a, b),
            (Value::Env(a), Value::Env(b)) => a == b,
            (Value::Promise(a), Value::Promise(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
