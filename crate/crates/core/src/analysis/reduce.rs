use std::collections::{BTreeMap, HashMap, HashSet};

use super::record::{FunctionFacts, PromiseRecord, Reduction, SideEffects};
use crate::machine::PromiseKind;
use crate::trace_format::FormatError;
use crate::tracer::{force_depth, FnSite, Locality, Status, TraceEvent};

/// A well-formed trace that violates a tracer invariant.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("event {event}: {message}")]
pub struct TraceInvariantError {
    /// 1-based position of the offending event in the stream.
    pub event: usize,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ReduceError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("corrupt trace: {0}")]
    Invariant(#[from] TraceInvariantError),
}

struct OpenCall {
    call: u64,
    n_params: usize,
    params: usize,
}

struct CallFacts {
    site: FnSite,
    n_params: usize,
    order: Vec<usize>,
    completed: bool,
}

struct PromState {
    record: PromiseRecord,
    /// 1-based parameter position for argument and default promises.
    position: Option<usize>,
    forcing: bool,
}

#[derive(Default)]
struct Reducer {
    program: Option<String>,
    end: Option<(u64, Status)>,
    stack: Vec<OpenCall>,
    parents: HashMap<u64, u64>,
    exited: HashSet<u64>,
    calls: BTreeMap<u64, CallFacts>,
    promises: BTreeMap<u64, PromState>,
    forcing: Vec<u64>,
    evals: usize,
}

impl Reducer {
    fn active(&self) -> u64 {
        self.stack.last().map_or(0, |c| c.call)
    }

    fn prom(&mut self, prom: u64) -> Result<&mut PromState, String> {
        self.promises.get_mut(&prom).ok_or_else(|| format!("unknown promise {prom}"))
    }

    fn check_call(&self, call: u64) -> Result<(), String> {
        if call != self.active() {
            return Err(format!("event attributed to call {call} but call {} is active", self.active()));
        }
        Ok(())
    }

    /// Appends a use letter, synthesizing the escape first if the creating
    /// call has already returned.
    fn touch(&mut self, prom: u64, letter: char) -> Result<(), String> {
        let p = self.promises.get_mut(&prom).ok_or_else(|| format!("unknown promise {prom}"))?;
        let exited = p.record.call != 0 && self.exited.contains(&p.record.call);
        if exited && !p.record.escaped {
            p.record.escaped = true;
            p.record.lifecycle.push('E');
        }
        p.record.lifecycle.push(letter);
        Ok(())
    }

    fn event(&mut self, ev: TraceEvent) -> Result<(), String> {
        if self.end.is_some() {
            return Err("event after PROGRAM_END".into());
        }
        if self.program.is_none() && !matches!(ev, TraceEvent::ProgramStart { .. }) {
            return Err(format!("{} before PROGRAM_START", ev.name()));
        }
        match ev {
            TraceEvent::ProgramStart { name } => {
                if self.program.is_some() {
                    return Err("repeated PROGRAM_START".into());
                }
                self.program = Some(name);
            }
            TraceEvent::CallEnter { call, site, n_params, n_args } => {
                if call == 0 || self.parents.contains_key(&call) {
                    return Err(format!("call id {call} is not fresh"));
                }
                if n_args > n_params {
                    return Err(format!("call {call} has {n_args} arguments for {n_params} parameters"));
                }
                self.parents.insert(call, self.active());
                self.calls.insert(call, CallFacts { site, n_params, order: Vec::new(), completed: false });
                self.stack.push(OpenCall { call, n_params, params: 0 });
            }
            TraceEvent::CallExit { call } => {
                match self.stack.pop() {
                    Some(top) if top.call == call => {
                        if top.params != top.n_params {
                            return Err(format!(
                                "call {call} created {} of {} parameter promises",
                                top.params, top.n_params
                            ));
                        }
                    }
                    Some(top) => return Err(format!("exit from call {call} while call {} is active", top.call)),
                    None => return Err(format!("exit from call {call} with no open call")),
                }
                self.exited.insert(call);
                if let Some(c) = self.calls.get_mut(&call) {
                    c.completed = true;
                }
            }
            TraceEvent::PromCreate { prom, call, param, kind, class, expr: _ } => {
                self.check_call(call)?;
                if prom == 0 || self.promises.contains_key(&prom) {
                    return Err(format!("promise id {prom} is not fresh"));
                }
                let position = match kind {
                    PromiseKind::Delayed => None,
                    _ => {
                        let top = self.stack.last_mut().ok_or("argument promise outside a call")?;
                        top.params += 1;
                        if top.params > top.n_params {
                            return Err(format!("call {call} created too many parameter promises"));
                        }
                        Some(top.params)
                    }
                };
                let record = PromiseRecord {
                    prom,
                    kind,
                    call,
                    param,
                    class,
                    lifecycle: String::new(),
                    force_depth: None,
                    read_count: 0,
                    meta_count: 0,
                    escaped: false,
                    side_effects: SideEffects::default(),
                };
                self.promises.insert(prom, PromState { record, position, forcing: false });
            }
            TraceEvent::PromForceEnter { prom, call, depth } => {
                self.check_call(call)?;
                let stack: Vec<u64> = self.stack.iter().map(|c| c.call).collect();
                let parents = &self.parents;
                let p = self.promises.get(&prom).ok_or_else(|| format!("unknown promise {prom}"))?;
                if p.record.force_depth.is_some() {
                    return Err(format!("promise {prom} forced twice"));
                }
                let expected = force_depth(p.record.call, &stack, |c| parents.get(&c).copied().unwrap_or(0));
                if depth != expected {
                    return Err(format!("promise {prom} forced at depth {depth}, stack says {expected}"));
                }
                if let Some(position) = p.position {
                    if let Some(c) = self.calls.get_mut(&p.record.call) {
                        c.order.push(position);
                    }
                }
                self.touch(prom, 'F')?;
                let p = self.prom(prom)?;
                p.record.force_depth = Some(depth);
                p.forcing = true;
                self.forcing.push(prom);
            }
            TraceEvent::PromForceExit { prom } => {
                if self.forcing.pop() != Some(prom) {
                    return Err(format!("force exit of promise {prom} out of order"));
                }
                self.prom(prom)?.forcing = false;
            }
            TraceEvent::PromRead { prom, call } => {
                self.check_call(call)?;
                let p = self.prom(prom)?;
                if p.record.force_depth.is_none() || p.forcing {
                    return Err(format!("read of promise {prom} without a value"));
                }
                p.record.read_count += 1;
                self.touch(prom, 'R')?;
            }
            TraceEvent::PromMeta { prom, call } => {
                self.check_call(call)?;
                self.prom(prom)?.record.meta_count += 1;
                self.touch(prom, 'M')?;
            }
            TraceEvent::EvalEnter { .. } => self.evals += 1,
            TraceEvent::EvalExit => {
                self.evals = self.evals.checked_sub(1).ok_or("EVAL_EXIT without EVAL_ENTER")?;
            }
            TraceEvent::VarDef { locality, prom, .. } | TraceEvent::VarWrite { locality, prom, .. } => {
                let forcing = self.forcing.last().copied().unwrap_or(0);
                if prom != forcing || (locality == Locality::None) != (prom == 0) {
                    return Err(format!("write attributed to promise {prom} while forcing {forcing}"));
                }
                if prom != 0 {
                    let effects = &mut self.prom(prom)?.record.side_effects;
                    match locality {
                        Locality::Local => effects.local += 1,
                        Locality::Lexical => effects.lexical += 1,
                        Locality::Other => effects.other += 1,
                        Locality::None => {}
                    }
                }
            }
            TraceEvent::VarRead { .. } => {}
            TraceEvent::ProgramEnd { steps, status } => {
                if status == Status::Ok && (!self.stack.is_empty() || !self.forcing.is_empty() || self.evals != 0) {
                    return Err("successful program ended with open calls, forces or evals".into());
                }
                self.end = Some((steps, status));
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<Reduction, String> {
        let program = self.program.ok_or("empty trace")?;
        let (steps, status) = self.end.ok_or("missing PROGRAM_END")?;
        let mut functions: BTreeMap<FnSite, FunctionFacts> = BTreeMap::new();
        for call in self.calls.values() {
            let n = call.n_params;
            let facts = functions.entry(call.site).or_insert_with(|| FunctionFacts::new(call.site, n));
            if facts.n_params != n {
                return Err(format!("function {} called with {n} and {} parameters", call.site, facts.n_params));
            }
            if call.completed {
                facts.calls += 1;
                for &position in &call.order {
                    facts.forced[position - 1] += 1;
                }
                facts.orders.insert(call.order.clone());
            } else {
                facts.aborted += 1;
            }
        }
        Ok(Reduction {
            program,
            steps,
            status,
            promises: self.promises.into_values().map(|p| p.record).collect(),
            functions: functions.into_values().collect(),
        })
    }
}

/// Reduces a stream of decoded events in one pass.
pub fn reduce_events<I>(events: I) -> Result<Reduction, ReduceError>
where
    I: IntoIterator<Item = Result<TraceEvent, FormatError>>,
{
    let mut reducer = Reducer::default();
    let mut position = 0;
    for ev in events {
        position += 1;
        reducer.event(ev?).map_err(|message| TraceInvariantError { event: position, message })?;
    }
    reducer.finish().map_err(|message| TraceInvariantError { event: position, message }.into())
}

/// Reduces an in-memory trace.
pub fn reduce_trace(events: &[TraceEvent]) -> Result<Reduction, ReduceError> {
    reduce_events(events.iter().cloned().map(Ok))
}
