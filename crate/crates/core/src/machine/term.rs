use std::rc::Rc;

use crate::syntax::{Expr, ExprKind, Name, Param, SourceSpan};

use super::value::Value;

/// An expression in which evaluated positions may hold values.
///
/// This is the machine's focus: the surface syntax extended with values,
/// so that reduction can substitute results in place.
#[derive(Clone, Debug)]
pub enum Term {
    Val(Value),
    Var(Name, SourceSpan),
    Concat(Box<Term>, Box<Term>, SourceSpan),
    Assign(Name, Box<Term>, SourceSpan),
    Function(Rc<[Param]>, Rc<Expr>, SourceSpan),
    /// Arguments stay unevaluated; the call form is lazy in them.
    Call(Box<Term>, Vec<Expr>, SourceSpan),
    EnvCapture(SourceSpan),
    Substitute(Name, SourceSpan),
    Eval(Box<Term>, Box<Term>, SourceSpan),
    DelayedAssign(Name, Expr, Box<Term>, SourceSpan),
    Block(Vec<Term>, SourceSpan),
}

impl Term {
    pub fn from_expr(e: &Expr) -> Term {
        let span = e.span;
        match &e.kind {
            ExprKind::Str(s) => Term::Val(Value::Str(s.as_str().into())),
            ExprKind::Var(x) => Term::Var(x.clone(), span),
            ExprKind::Concat(a, b) => Term::Concat(Box::new(Term::from_expr(a)), Box::new(Term::from_expr(b)), span),
            ExprKind::Assign(x, rhs) => Term::Assign(x.clone(), Box::new(Term::from_expr(rhs)), span),
            ExprKind::Function(params, body) => Term::Function(params.clone(), body.clone(), span),
            ExprKind::Call(callee, args) => Term::Call(Box::new(Term::from_expr(callee)), args.clone(), span),
            ExprKind::EnvCapture => Term::EnvCapture(span),
            ExprKind::Substitute(x) => Term::Substitute(x.clone(), span),
            ExprKind::Eval(code, env) => {
                Term::Eval(Box::new(Term::from_expr(code)), Box::new(Term::from_expr(env)), span)
            }
            ExprKind::DelayedAssign(x, code, env) => {
                Term::DelayedAssign(x.clone(), (**code).clone(), Box::new(Term::from_expr(env)), span)
            }
            ExprKind::Block(items) => Term::Block(items.iter().map(Term::from_expr).collect(), span),
        }
    }

    pub fn is_value(&self) -> bool {
        matches!(self, Term::Val(_))
    }

    pub fn as_value(&self) -> Option<&Value> {
        match self {
            Term::Val(v) => Some(v),
            _ => None,
        }
    }

    pub fn span(&self) -> SourceSpan {
        match self {
            Term::Val(_) => SourceSpan::default(),
            Term::Var(_, s)
            | Term::Concat(_, _, s)
            | Term::Assign(_, _, s)
            | Term::Function(_, _, s)
            | Term::Call(_, _, s)
            | Term::EnvCapture(s)
            | Term::Substitute(_, s)
            | Term::Eval(_, _, s)
            | Term::DelayedAssign(_, _, _, s)
            | Term::Block(_, s) => *s,
        }
    }

    /// The unique redex of a non-value term, following the evaluation
    /// contexts: operands of `+`, the right side of `<-`, the callee, both
    /// `eval` operands, the environment of `delayedAssign` and the head of
    /// a block are evaluated first, left to right.
    pub fn redex_mut(&mut self) -> &mut Term {
        match self.pending_child() {
            Some(i) => self.child_mut(i).redex_mut(),
            None => self,
        }
    }

    fn pending_child(&self) -> Option<usize> {
        let first_open = |children: &[&Term]| children.iter().position(|c| !c.is_value());
        match self {
            Term::Concat(a, b, _) => first_open(&[a, b]),
            Term::Assign(_, rhs, _) => first_open(&[rhs]),
            Term::Call(callee, _, _) => first_open(&[callee]),
            Term::Eval(code, env, _) => first_open(&[code, env]),
            Term::DelayedAssign(_, _, env, _) => first_open(&[env]),
            Term::Block(items, _) => first_open(&[&items[0]]),
            _ => None,
        }
    }

    fn child_mut(&mut self, i: usize) -> &mut Term {
        match (self, i) {
            (Term::Concat(a, _, _), 0) => a,
            (Term::Concat(_, b, _), 1) => b,
            (Term::Assign(_, rhs, _), 0) => rhs,
            (Term::Call(callee, _, _), 0) => callee,
            (Term::Eval(code, _, _), 0) => code,
            (Term::Eval(_, env, _), 1) => env,
            (Term::DelayedAssign(_, _, env, _), 0) => env,
            (Term::Block(items, _), 0) => &mut items[0],
            _ => unreachable!("no such child"),
        }
    }
}
