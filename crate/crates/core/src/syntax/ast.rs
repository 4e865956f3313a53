use std::fmt;
use std::rc::Rc;

/// Identifiers are shared, not copied, as they flow into frames and traces.
pub type Name = Rc<str>;

pub const RESERVED_WORDS: [&str; 5] = ["function", "environment", "substitute", "eval", "delayedAssign"];

/// Location of a node in the text it was parsed from.
///
/// `source` distinguishes the program file (0) from strings handed to
/// `eval` at run time, which are numbered by the machine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceSpan {
    pub source: u32,
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl SourceSpan {
    pub(crate) fn cover(self, other: SourceSpan) -> SourceSpan {
        SourceSpan { end: other.end.max(self.end), ..self }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug)]
pub struct Param {
    pub name: Name,
    pub default: Option<Expr>,
}

impl PartialEq for Param {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.default == other.default
    }
}

/// An expression node. Equality is structural and ignores spans.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Str(String),
    Var(Name),
    Concat(Box<Expr>, Box<Expr>),
    Assign(Name, Box<Expr>),
    Function(Rc<[Param]>, Rc<Expr>),
    Call(Box<Expr>, Vec<Expr>),
    EnvCapture,
    Substitute(Name),
    Eval(Box<Expr>, Box<Expr>),
    DelayedAssign(Name, Box<Expr>, Box<Expr>),
    Block(Vec<Expr>),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind) -> Expr {
        Expr { kind, span: SourceSpan::default() }
    }

    pub fn with_span(kind: ExprKind, span: SourceSpan) -> Expr {
        Expr { kind, span }
    }

    pub fn str(text: impl Into<String>) -> Expr {
        Expr::new(ExprKind::Str(text.into()))
    }

    pub fn var(name: &str) -> Expr {
        Expr::new(ExprKind::Var(name.into()))
    }

    pub fn concat(lhs: Expr, rhs: Expr) -> Expr {
        Expr::new(ExprKind::Concat(Box::new(lhs), Box::new(rhs)))
    }

    pub fn assign(name: &str, rhs: Expr) -> Expr {
        Expr::new(ExprKind::Assign(name.into(), Box::new(rhs)))
    }

    pub fn function(params: Vec<(&str, Option<Expr>)>, body: Expr) -> Expr {
        let params: Vec<Param> =
            params.into_iter().map(|(name, default)| Param { name: name.into(), default }).collect();
        Expr::new(ExprKind::Function(params.into(), Rc::new(body)))
    }

    pub fn call(callee: Expr, args: Vec<Expr>) -> Expr {
        Expr::new(ExprKind::Call(Box::new(callee), args))
    }

    pub fn env_capture() -> Expr {
        Expr::new(ExprKind::EnvCapture)
    }

    pub fn substitute(name: &str) -> Expr {
        Expr::new(ExprKind::Substitute(name.into()))
    }

    pub fn eval(code: Expr, env: Expr) -> Expr {
        Expr::new(ExprKind::Eval(Box::new(code), Box::new(env)))
    }

    pub fn delayed_assign(name: &str, code: Expr, env: Expr) -> Expr {
        Expr::new(ExprKind::DelayedAssign(name.into(), Box::new(code), Box::new(env)))
    }

    pub fn block(exprs: Vec<Expr>) -> Expr {
        assert!(!exprs.is_empty(), "a block holds at least one expression");
        Expr::new(ExprKind::Block(exprs))
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') && !RESERVED_WORDS.contains(&s)
}
