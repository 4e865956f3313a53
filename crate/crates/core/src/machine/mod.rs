//! Small-step abstract machine for the calculus.
//!
//! A state is a stack of frames, each holding a focus term and the
//! environment it runs in, plus a heap of frames, captured environments and
//! promises. Every call to [`Machine::step`] fires exactly one reduction
//! rule, chosen by the unique decomposition of the top frame's focus into
//! an evaluation context and a redex. Results are substituted into the
//! focus in place.

mod error;
mod heap;
mod term;
mod value;

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use crate::syntax::{deparse, parse_source, Expr, Name, SourceSpan};

pub use error::RuntimeError;
pub use heap::{
    lookup_get, Binding, Env, ForceFlag, Frame, Heap, HeapCell, Location, Promise, PromiseKind, PromiseOrigin,
};
pub use term::Term;
pub use value::{Closure, Value};

/// Identifier of one function invocation, assigned from 1 in call order.
pub type CallId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameKind {
    Plain,
    /// Pushed by `Lookup2`; its focus is the promise until it is resolved.
    PromiseForce(Location),
    EvalCall,
    CallReturn(CallId),
}

#[derive(Clone, Debug)]
pub struct StackFrame {
    pub focus: Term,
    pub env: Env,
    pub kind: FrameKind,
}

/// Names of the reduction rules. `Invoke` covers the unary `Invk1`/`Invk0`
/// pair at any arity, `Ret` covers `Ret1`/`Ret0`, and `Seq` is the block
/// sequencing extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Fun,
    Concat,
    Assign,
    Delay,
    Env,
    Subst,
    Eval,
    EvalRet,
    Invoke,
    Ret,
    Lookup,
    Lookup2,
    Force,
    ReadVal,
    Memo,
    RetProm,
    Seq,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// What a step did, with the heap locations an observer needs to describe it.
#[derive(Clone, Debug, PartialEq)]
pub enum Fired {
    Fun,
    Concat,
    Seq,
    Assign { frame: Location, name: Name, existed: bool },
    Env { env: Location },
    Delay { promise: Location, frame: Location },
    Subst { promise: Location },
    Eval { env: Location },
    EvalRet,
    Invoke { call: CallId, site: SourceSpan, frame: Location, n_args: usize, promises: Vec<Location> },
    Ret { call: CallId },
    Lookup { frame: Location, name: Name },
    Lookup2 { frame: Location, name: Name, promise: Location },
    Force { promise: Location },
    ReadVal { promise: Location },
    Memo { promise: Location },
    RetProm { promise: Location },
}

impl Fired {
    pub fn rule(&self) -> Rule {
        match self {
            Fired::Fun => Rule::Fun,
            Fired::Concat => Rule::Concat,
            Fired::Seq => Rule::Seq,
            Fired::Assign { .. } => Rule::Assign,
            Fired::Env { .. } => Rule::Env,
            Fired::Delay { .. } => Rule::Delay,
            Fired::Subst { .. } => Rule::Subst,
            Fired::Eval { .. } => Rule::Eval,
            Fired::EvalRet => Rule::EvalRet,
            Fired::Invoke { .. } => Rule::Invoke,
            Fired::Ret { .. } => Rule::Ret,
            Fired::Lookup { .. } => Rule::Lookup,
            Fired::Lookup2 { .. } => Rule::Lookup2,
            Fired::Force { .. } => Rule::Force,
            Fired::ReadVal { .. } => Rule::ReadVal,
            Fired::Memo { .. } => Rule::Memo,
            Fired::RetProm { .. } => Rule::RetProm,
        }
    }
}

/// Hook invoked after every transition with the rule that fired and the
/// resulting state. Returning an error aborts the run.
pub trait Observer {
    fn observe(&mut self, fired: &Fired, machine: &Machine) -> Result<(), String>;
}

impl Observer for () {
    fn observe(&mut self, _: &Fired, _: &Machine) -> Result<(), String> {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_steps: u64,
}

impl Default for Limits {
    fn default() -> Limits {
        Limits { max_steps: 1_000_000 }
    }
}

#[derive(Clone, Debug)]
pub enum Step {
    Fired(Rule),
    Terminal(Value),
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub result: Result<Value, RuntimeError>,
    pub steps: u64,
}

pub struct Machine {
    stack: Vec<StackFrame>,
    heap: Heap,
    steps: u64,
    calls: CallId,
    promises: u64,
    eval_sources: HashMap<String, u32>,
}

impl Machine {
    /// Initial state: the program focused in an environment made of one
    /// fresh, empty global frame.
    pub fn new(program: &Expr) -> Machine {
        let mut heap = Heap::new();
        let global = heap.alloc(HeapCell::Frame(Frame::default()));
        let frame = StackFrame {
            focus: Term::from_expr(program),
            env: Env::cons(global, Env::empty()),
            kind: FrameKind::Plain,
        };
        Machine { stack: vec![frame], heap, steps: 0, calls: 0, promises: 0, eval_sources: HashMap::new() }
    }

    pub fn stack(&self) -> &[StackFrame] {
        &self.stack
    }

    pub fn heap(&self) -> &Heap {
        &self.heap
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Call ids of the frames awaiting a `Ret`, outermost first.
    pub fn open_calls(&self) -> impl Iterator<Item = CallId> + '_ {
        self.stack.iter().filter_map(|f| match f.kind {
            FrameKind::CallReturn(id) => Some(id),
            _ => None,
        })
    }

    pub fn terminal_value(&self) -> Option<&Value> {
        match self.stack.as_slice() {
            [only] => only.focus.as_value(),
            _ => None,
        }
    }

    /// Runs until a value, an error, or `limits.max_steps` transitions.
    pub fn run<O: Observer + ?Sized>(&mut self, limits: Limits, observer: &mut O) -> Outcome {
        let result = loop {
            if let Some(v) = self.terminal_value() {
                break Ok(v.clone());
            }
            if self.steps >= limits.max_steps {
                break Err(RuntimeError::StepLimitExceeded { limit: limits.max_steps });
            }
            if let Err(e) = self.step(observer) {
                break Err(e);
            }
        };
        Outcome { result, steps: self.steps }
    }

    pub fn step<O: Observer + ?Sized>(&mut self, observer: &mut O) -> Result<Step, RuntimeError> {
        if let Some(v) = self.terminal_value() {
            return Ok(Step::Terminal(v.clone()));
        }
        let fired = self.fire()?;
        self.steps += 1;
        observer.observe(&fired, self).map_err(RuntimeError::internal)?;
        Ok(Step::Fired(fired.rule()))
    }

    fn fire(&mut self) -> Result<Fired, RuntimeError> {
        let top = self.stack.last().expect("machine stack is never empty");
        match (&top.focus, top.kind) {
            (Term::Val(v), FrameKind::Plain) => {
                let v = v.clone();
                self.memo(v)
            }
            (Term::Val(Value::Promise(l)), FrameKind::PromiseForce(target)) if *l == target => {
                self.force_or_read(target)
            }
            (Term::Val(v), FrameKind::PromiseForce(target)) => {
                let v = v.clone();
                self.ret_prom(target, v)
            }
            (Term::Val(v), FrameKind::EvalCall) => {
                let v = v.clone();
                self.pop_into_redex(v, "eval")?;
                Ok(Fired::EvalRet)
            }
            (Term::Val(v), FrameKind::CallReturn(call)) => {
                let v = v.clone();
                self.pop_into_redex(v, "call")?;
                Ok(Fired::Ret { call })
            }
            _ => self.reduce_top(),
        }
    }

    /// `Memo`: a promise body produced `v`; cache it and collapse onto the
    /// forcing frame.
    fn memo(&mut self, v: Value) -> Result<Fired, RuntimeError> {
        let n = self.stack.len();
        let FrameKind::PromiseForce(l) = self.stack[n - 2].kind else {
            return Err(RuntimeError::internal("value on an inner plain frame without a forcing frame below"));
        };
        if let Value::Promise(_) = v {
            return Err(RuntimeError::internal("promise value produced by a promise body"));
        }
        let promise = self.heap.promise_mut(l).ok_or_else(|| dangling(l))?;
        if promise.flag != ForceFlag::Forcing || promise.val.is_some() {
            return Err(RuntimeError::internal(format!("memo on promise {l} that is not being forced")));
        }
        promise.val = Some(v.clone());
        promise.env = None;
        promise.flag = ForceFlag::NotForcing;
        self.stack.pop();
        self.stack[n - 2].focus = Term::Val(v);
        Ok(Fired::Memo { promise: l })
    }

    /// `Force` / `ReadVal`, or the stuck state of a promise that is
    /// already being forced.
    fn force_or_read(&mut self, l: Location) -> Result<Fired, RuntimeError> {
        let promise = self.heap.promise_mut(l).ok_or_else(|| dangling(l))?;
        if let Some(v) = &promise.val {
            let v = v.clone();
            self.stack.last_mut().unwrap().focus = Term::Val(v);
            return Ok(Fired::ReadVal { promise: l });
        }
        if promise.flag == ForceFlag::Forcing {
            return Err(RuntimeError::PromiseCycle { span: promise.exp.span });
        }
        let env = promise
            .env
            .clone()
            .ok_or_else(|| RuntimeError::internal(format!("unevaluated promise {l} has no environment")))?;
        promise.flag = ForceFlag::Forcing;
        let focus = Term::from_expr(&promise.exp);
        self.stack.push(StackFrame { focus, env, kind: FrameKind::Plain });
        Ok(Fired::Force { promise: l })
    }

    /// `RetProm`: hand a forced promise's value back to the variable
    /// occurrence that requested it.
    fn ret_prom(&mut self, l: Location, v: Value) -> Result<Fired, RuntimeError> {
        self.pop_into_redex(v, "variable")?;
        Ok(Fired::RetProm { promise: l })
    }

    /// Pops the top frame and substitutes `v` for the redex of the frame
    /// below, which must be of the expected shape.
    fn pop_into_redex(&mut self, v: Value, expected: &str) -> Result<(), RuntimeError> {
        self.stack.pop();
        let below =
            self.stack.last_mut().ok_or_else(|| RuntimeError::internal("returned past the bottom of the stack"))?;
        let redex = below.focus.redex_mut();
        let shape_ok = match redex {
            Term::Call(callee, ..) => expected == "call" && callee.is_value(),
            Term::Eval(..) => expected == "eval",
            Term::Var(..) => expected == "variable",
            _ => false,
        };
        if !shape_ok {
            return Err(RuntimeError::internal(format!("returning to a frame whose redex is not a {expected}")));
        }
        *redex = Term::Val(v);
        Ok(())
    }

    fn active_call(&self, current: &StackFrame) -> CallId {
        std::iter::once(current)
            .chain(self.stack.iter().rev())
            .find_map(|f| match f.kind {
                FrameKind::CallReturn(id) => Some(id),
                _ => None,
            })
            .unwrap_or(0)
    }

    fn reduce_top(&mut self) -> Result<Fired, RuntimeError> {
        let mut frame = self.stack.pop().expect("machine stack is never empty");
        let result = self.reduce(&mut frame);
        self.stack.push(frame);
        let (fired, pushed) = result?;
        if let Some(next) = pushed {
            self.stack.push(next);
        }
        Ok(fired)
    }

    /// Fires the rule for the redex of `frame`. Returns a frame to push when
    /// the rule schedules new work (`Invoke`, `Eval`, `Lookup2`).
    fn reduce(&mut self, frame: &mut StackFrame) -> Result<(Fired, Option<StackFrame>), RuntimeError> {
        let active_call = self.active_call(frame);
        let env = frame.env.clone();
        let redex = frame.focus.redex_mut();
        let span = redex.span();
        match redex {
            Term::Val(_) => Err(RuntimeError::internal("no redex in a value")),
            Term::Var(name, _) => {
                let binding = lookup_get(&self.heap, &env, name)
                    .ok_or_else(|| RuntimeError::UnboundVariable { name: name.clone(), span })?;
                let name = name.clone();
                match binding.value {
                    Value::Promise(l) => {
                        let force =
                            StackFrame { focus: Term::Val(Value::Promise(l)), env, kind: FrameKind::PromiseForce(l) };
                        Ok((Fired::Lookup2 { frame: binding.frame, name, promise: l }, Some(force)))
                    }
                    value => {
                        *redex = Term::Val(value);
                        Ok((Fired::Lookup { frame: binding.frame, name }, None))
                    }
                }
            }
            Term::Concat(a, b, _) => {
                let joined = match (a.as_value(), b.as_value()) {
                    (Some(Value::Str(a)), Some(Value::Str(b))) => format!("{a}{b}"),
                    _ => {
                        return Err(RuntimeError::TypeError { message: "non-string argument to `+`".to_string(), span })
                    }
                };
                *redex = Term::Val(Value::Str(joined.into()));
                Ok((Fired::Concat, None))
            }
            Term::Assign(name, rhs, _) => {
                let Term::Val(v) = rhs.as_ref() else { unreachable!() };
                let v = v.clone();
                let name = name.clone();
                let target = env.head().ok_or_else(|| RuntimeError::internal("empty environment"))?;
                let frame_map = self.heap.frame_mut(target).ok_or_else(|| dangling(target))?;
                let existed = frame_map.insert(name.clone(), v.clone()).is_some();
                *redex = Term::Val(v);
                Ok((Fired::Assign { frame: target, name, existed }, None))
            }
            Term::Function(params, body, site) => {
                let closure = Closure { params: params.clone(), body: body.clone(), env, site: *site };
                *redex = Term::Val(Value::Closure(Rc::new(closure)));
                Ok((Fired::Fun, None))
            }
            Term::EnvCapture(_) => {
                let l = self.heap.alloc(HeapCell::Env(env));
                *redex = Term::Val(Value::Env(l));
                Ok((Fired::Env { env: l }, None))
            }
            Term::Substitute(name, _) => {
                let binding = lookup_get(&self.heap, &env, name)
                    .ok_or_else(|| RuntimeError::UnboundVariable { name: name.clone(), span })?;
                let Value::Promise(l) = binding.value else {
                    return Err(RuntimeError::TypeError {
                        message: format!("`{name}` is not bound to a promise"),
                        span,
                    });
                };
                let promise = self.heap.promise(l).ok_or_else(|| dangling(l))?;
                let text = deparse(&promise.exp);
                *redex = Term::Val(Value::Str(text.into()));
                Ok((Fired::Subst { promise: l }, None))
            }
            Term::Eval(code, target, _) => {
                let (Some(Value::Str(text)), Some(target)) = (code.as_value(), target.as_value()) else {
                    return Err(RuntimeError::TypeError { message: "`eval` expects a string".to_string(), span });
                };
                let Value::Env(l) = target else {
                    return Err(RuntimeError::TypeError { message: "`eval` expects an environment".to_string(), span });
                };
                let l = *l;
                let eval_env = self.heap.env_record(l).ok_or_else(|| dangling(l))?.clone();
                let next_source = self.eval_sources.len() as u32 + 1;
                let source = *self.eval_sources.entry(text.to_string()).or_insert(next_source);
                let code =
                    parse_source(text, source).map_err(|error| RuntimeError::ParseErrorInEval { error, span })?;
                let scheduled = StackFrame { focus: Term::from_expr(&code), env: eval_env, kind: FrameKind::EvalCall };
                Ok((Fired::Eval { env: l }, Some(scheduled)))
            }
            Term::DelayedAssign(name, code, target, _) => {
                let Some(Value::Env(l)) = target.as_value() else {
                    return Err(RuntimeError::TypeError {
                        message: "`delayedAssign` expects an environment".to_string(),
                        span,
                    });
                };
                let l = *l;
                let target_env = self.heap.env_record(l).ok_or_else(|| dangling(l))?;
                let target_frame =
                    target_env.head().ok_or_else(|| RuntimeError::internal("captured an empty environment"))?;
                self.promises += 1;
                let promise = Promise {
                    val: None,
                    exp: code.clone(),
                    env: Some(env),
                    flag: ForceFlag::NotForcing,
                    origin: PromiseOrigin {
                        id: self.promises,
                        kind: PromiseKind::Delayed,
                        call: active_call,
                        param: None,
                    },
                };
                let p = self.heap.alloc(HeapCell::Promise(promise));
                let name = name.clone();
                self.heap
                    .frame_mut(target_frame)
                    .ok_or_else(|| dangling(target_frame))?
                    .insert(name, Value::Promise(p));
                *redex = Term::Val(Value::Env(l));
                Ok((Fired::Delay { promise: p, frame: target_frame }, None))
            }
            Term::Block(items, _) => {
                if items.len() > 1 {
                    items.remove(0);
                } else {
                    let last = items.pop().unwrap();
                    *redex = last;
                }
                Ok((Fired::Seq, None))
            }
            Term::Call(callee, args, _) => {
                let Some(Value::Closure(closure)) = callee.as_value() else {
                    return Err(RuntimeError::NotAClosure { span });
                };
                let closure = closure.clone();
                let (fired, body) = self.invoke(&closure, args, &env, span)?;
                Ok((fired, Some(body)))
            }
        }
    }

    /// Generalised `Invk1`/`Invk0`: one promise per parameter, from the
    /// argument in the caller's environment or from the default in the
    /// callee's.
    fn invoke(
        &mut self,
        closure: &Closure,
        args: &[Expr],
        caller_env: &Env,
        span: SourceSpan,
    ) -> Result<(Fired, StackFrame), RuntimeError> {
        let params = &closure.params;
        if args.len() > params.len() {
            return Err(RuntimeError::ArityError { expected: params.len(), given: args.len(), span });
        }
        if let Some(p) = params[args.len()..].iter().find(|p| p.default.is_none()) {
            return Err(RuntimeError::MissingDefault { param: p.name.clone(), span });
        }
        self.calls += 1;
        let call = self.calls;
        let frame = self.heap.alloc(HeapCell::Frame(Frame::default()));
        let callee_env = Env::cons(frame, closure.env.clone());
        let mut promises = Vec::with_capacity(params.len());
        for (i, param) in params.iter().enumerate() {
            let (exp, env, kind) = match args.get(i) {
                Some(arg) => (arg.clone(), caller_env.clone(), PromiseKind::Arg),
                None => (param.default.clone().expect("checked above"), callee_env.clone(), PromiseKind::Default),
            };
            self.promises += 1;
            let promise = Promise {
                val: None,
                exp,
                env: Some(env),
                flag: ForceFlag::NotForcing,
                origin: PromiseOrigin { id: self.promises, kind, call, param: Some(param.name.clone()) },
            };
            let l = self.heap.alloc(HeapCell::Promise(promise));
            self.heap.frame_mut(frame).expect("frame just allocated").insert(param.name.clone(), Value::Promise(l));
            promises.push(l);
        }
        let body =
            StackFrame { focus: Term::from_expr(&closure.body), env: callee_env, kind: FrameKind::CallReturn(call) };
        let fired = Fired::Invoke { call, site: closure.site, frame, n_args: args.len(), promises };
        Ok((fired, body))
    }
}

fn dangling(l: Location) -> RuntimeError {
    RuntimeError::internal(format!("dangling or mistyped heap location {l}"))
}

/// Runs `program` from a fresh state.
pub fn run<O: Observer + ?Sized>(program: &Expr, limits: Limits, observer: &mut O) -> Outcome {
    Machine::new(program).run(limits, observer)
}

#[cfg(test)]
mod tests;
