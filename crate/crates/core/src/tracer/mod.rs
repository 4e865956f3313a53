//! Instrumentation that turns machine transitions into a trace event stream.
//!
//! The tracer keeps a shadow stack of open calls (mirroring the machine's
//! call-return frames) and a stack of promises currently being forced. The
//! first gives force depths, the second attributes variable writes to the
//! promise whose evaluation performed them.

mod event;

use std::collections::HashMap;

use crate::machine::{Fired, Limits, Location, Machine, Observer, Outcome};
use crate::syntax::{deparse, Expr};

pub(crate) use event::parse_decimal;
pub use event::{ExprClass, FnSite, Locality, Status, TraceEvent};

/// Consumer of a strictly ordered event stream.
pub trait EventSink {
    fn emit(&mut self, event: TraceEvent);
}

impl EventSink for Vec<TraceEvent> {
    fn emit(&mut self, event: TraceEvent) {
        self.push(event);
    }
}

/// Discards everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&mut self, _: TraceEvent) {}
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShadowCall {
    pub call: u64,
    pub frame: Location,
}

struct Forcing {
    prom: u64,
    env_frames: Vec<Location>,
}

/// Force depth of a promise created by `creator` when the shadow stack is
/// `stack`: the number of calls pushed above the creator, or above its
/// nearest live ancestor if the creator has already returned.
pub fn force_depth(creator: u64, stack: &[u64], parent: impl Fn(u64) -> u64) -> u64 {
    let position = |call: u64| stack.iter().position(|&c| c == call).map(|i| i + 1);
    let mut anchor = creator;
    loop {
        if anchor == 0 {
            return stack.len() as u64;
        }
        if let Some(pos) = position(anchor) {
            return (stack.len() - pos) as u64;
        }
        anchor = parent(anchor);
    }
}

pub struct Tracer<S: EventSink> {
    sink: S,
    shadow: Vec<ShadowCall>,
    parents: HashMap<u64, u64>,
    forcing: Vec<Forcing>,
}

impl<S: EventSink> Tracer<S> {
    /// Starts a trace; emits `ProgramStart`.
    pub fn new(name: &str, mut sink: S) -> Tracer<S> {
        sink.emit(TraceEvent::ProgramStart { name: name.to_string() });
        Tracer { sink, shadow: Vec::new(), parents: HashMap::new(), forcing: Vec::new() }
    }

    pub fn shadow_stack(&self) -> &[ShadowCall] {
        &self.shadow
    }

    /// Emits `ProgramEnd` and hands back the sink.
    pub fn finish(mut self, outcome: &Outcome) -> S {
        let status = match &outcome.result {
            Ok(_) => Status::Ok,
            Err(e) => Status::Error(e.code().to_string()),
        };
        self.sink.emit(TraceEvent::ProgramEnd { steps: outcome.steps, status });
        self.sink
    }

    fn active_call(&self) -> u64 {
        self.shadow.last().map_or(0, |c| c.call)
    }

    fn locality(&self, frame: Location) -> (Locality, u64) {
        let Some(forcing) = self.forcing.last() else {
            return (Locality::None, 0);
        };
        let locality = match forcing.env_frames.iter().position(|&f| f == frame) {
            Some(0) => Locality::Local,
            Some(_) => Locality::Lexical,
            None => Locality::Other,
        };
        (locality, forcing.prom)
    }

    fn promise_created(&mut self, machine: &Machine, l: Location) -> Result<(), String> {
        let p = machine.heap().promise(l).ok_or_else(|| format!("no promise at {l}"))?;
        self.sink.emit(TraceEvent::PromCreate {
            prom: p.origin.id,
            call: p.origin.call,
            param: p.origin.param.as_deref().unwrap_or("").to_string(),
            kind: p.origin.kind,
            class: ExprClass::of(&p.exp),
            expr: deparse(&p.exp),
        });
        Ok(())
    }

    fn promise_id(machine: &Machine, l: Location) -> Result<u64, String> {
        machine.heap().promise(l).map(|p| p.origin.id).ok_or_else(|| format!("no promise at {l}"))
    }

    #[cfg(debug_assertions)]
    fn check_shadow(&self, machine: &Machine) -> Result<(), String> {
        if !self.shadow.iter().map(|c| c.call).eq(machine.open_calls()) {
            return Err("shadow stack diverged from the machine's call frames".to_string());
        }
        Ok(())
    }
}

impl<S: EventSink> Observer for Tracer<S> {
    fn observe(&mut self, fired: &Fired, machine: &Machine) -> Result<(), String> {
        match fired {
            Fired::Fun | Fired::Concat | Fired::Seq | Fired::Env { .. } | Fired::RetProm { .. } => {}
            Fired::Assign { frame, name, existed } => {
                let (locality, prom) = self.locality(*frame);
                let frame = frame.0;
                let name = name.to_string();
                self.sink.emit(if *existed {
                    TraceEvent::VarWrite { frame, name, locality, prom }
                } else {
                    TraceEvent::VarDef { frame, name, locality, prom }
                });
            }
            Fired::Delay { promise, .. } => self.promise_created(machine, *promise)?,
            Fired::Subst { promise } => {
                let prom = Self::promise_id(machine, *promise)?;
                self.sink.emit(TraceEvent::PromMeta { prom, call: self.active_call() });
            }
            Fired::Eval { env } => self.sink.emit(TraceEvent::EvalEnter { env: env.0 }),
            Fired::EvalRet => self.sink.emit(TraceEvent::EvalExit),
            Fired::Invoke { call, site, frame, n_args, promises } => {
                self.sink.emit(TraceEvent::CallEnter {
                    call: *call,
                    site: FnSite::from(*site),
                    n_params: promises.len(),
                    n_args: *n_args,
                });
                for &l in promises {
                    self.promise_created(machine, l)?;
                }
                self.parents.insert(*call, self.active_call());
                self.shadow.push(ShadowCall { call: *call, frame: *frame });
            }
            Fired::Ret { call } => {
                match self.shadow.pop() {
                    Some(top) if top.call == *call => {}
                    other => return Err(format!("return from call {call} but shadow top is {other:?}")),
                }
                self.sink.emit(TraceEvent::CallExit { call: *call });
            }
            Fired::Lookup { frame, name } | Fired::Lookup2 { frame, name, .. } => {
                self.sink.emit(TraceEvent::VarRead { frame: frame.0, name: name.to_string() });
            }
            Fired::Force { promise } => {
                let p = machine.heap().promise(*promise).ok_or_else(|| format!("no promise at {promise}"))?;
                let calls: Vec<u64> = self.shadow.iter().map(|c| c.call).collect();
                let depth = force_depth(p.origin.call, &calls, |c| self.parents.get(&c).copied().unwrap_or(0));
                let env_frames = p.env.as_ref().map(|e| e.frames().collect()).unwrap_or_default();
                self.sink.emit(TraceEvent::PromForceEnter { prom: p.origin.id, call: self.active_call(), depth });
                self.forcing.push(Forcing { prom: p.origin.id, env_frames });
            }
            Fired::ReadVal { promise } => {
                let prom = Self::promise_id(machine, *promise)?;
                self.sink.emit(TraceEvent::PromRead { prom, call: self.active_call() });
            }
            Fired::Memo { promise } => {
                let prom = Self::promise_id(machine, *promise)?;
                match self.forcing.pop() {
                    Some(top) if top.prom == prom => {}
                    _ => return Err(format!("memo of promise {prom} out of forcing order")),
                }
                self.sink.emit(TraceEvent::PromForceExit { prom });
            }
        }
        #[cfg(debug_assertions)]
        self.check_shadow(machine)?;
        Ok(())
    }
}

/// Runs `program` under a tracer writing to `sink`; the returned sink holds
/// the complete trace, `ProgramStart` through `ProgramEnd`.
pub fn trace_program<S: EventSink>(program: &Expr, name: &str, limits: Limits, sink: S) -> (Outcome, S) {
    let mut tracer = Tracer::new(name, sink);
    let outcome = Machine::new(program).run(limits, &mut tracer);
    let sink = tracer.finish(&outcome);
    (outcome, sink)
}

/// Convenience for tests and in-memory pipelines.
pub fn trace_to_vec(program: &Expr, name: &str, limits: Limits) -> (Outcome, Vec<TraceEvent>) {
    trace_program(program, name, limits, Vec::new())
}
