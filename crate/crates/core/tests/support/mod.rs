#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use lazycore::analysis::{FunctionFacts, PromiseRecord, Reduction, SideEffects};
use lazycore::machine::{Fired, Limits, Machine, Observer, PromiseKind};
use lazycore::syntax::{deparse, parse, Expr};
use lazycore::trace_format::read_trace_bytes;
use lazycore::tracer::{trace_to_vec, FnSite, Locality, Status, TraceEvent, Tracer};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub struct Golden {
    pub name: String,
    pub source: String,
    pub trace: Vec<u8>,
    pub stdout: String,
}

pub fn goldens() -> Vec<Golden> {
    let dir = golden_dir();
    let mut names: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.strip_suffix(".cr").map(str::to_string)
        })
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| Golden {
            source: fs::read_to_string(dir.join(format!("{name}.cr"))).unwrap(),
            trace: fs::read(dir.join(format!("{name}.crtrace"))).unwrap(),
            stdout: fs::read_to_string(dir.join(format!("{name}.stdout"))).unwrap(),
            name,
        })
        .collect()
}

pub fn fuzz_limits() -> Limits {
    Limits { max_steps: 10_000 }
}

// ---------------------------------------------------------------------
// Random programs
//
// Mostly well-typed: globals `a`, `b`, `x` hold strings, `f` and `g` hold
// functions of known arity, parameters are `p`, `q`, `r`. A tenth of the
// programs come from an untyped generator to reach the error paths.

const STRINGS: [&str; 4] = ["", "s", "t\tu", "q\"r"];
const GLOBALS: [&str; 3] = ["a", "b", "x"];
const PARAMS: [&str; 3] = ["p", "q", "r"];

struct Scope {
    strings: Vec<&'static str>,
    /// Names bound to promises: parameters of enclosing functions.
    params: Vec<&'static str>,
    /// Callable globals and their arity.
    callable: Vec<(&'static str, usize)>,
}

fn literal(rng: &mut ChaCha8Rng) -> Expr {
    Expr::str(*STRINGS.choose(rng).unwrap())
}

fn gen_function(rng: &mut ChaCha8Rng, depth: u32, scope: &Scope, arity: usize) -> Expr {
    let params: Vec<&'static str> = PARAMS[..arity].to_vec();
    let inner = Scope {
        strings: scope.strings.iter().chain(&params).copied().collect(),
        params: scope.params.iter().chain(&params).copied().collect(),
        callable: scope.callable.clone(),
    };
    let with_defaults: Vec<(&str, Option<Expr>)> = params
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let default = rng.gen_ratio(1, 3).then(|| {
                // defaults may see earlier parameters
                let seen = Scope {
                    strings: scope.strings.iter().chain(&params[..i]).copied().collect(),
                    params: scope.params.iter().chain(&params[..i]).copied().collect(),
                    callable: scope.callable.clone(),
                };
                gen_str(rng, depth.saturating_sub(1), &seen)
            });
            (p, default)
        })
        .collect();
    Expr::function(with_defaults, gen_str(rng, depth.saturating_sub(1), &inner))
}

fn args(rng: &mut ChaCha8Rng, depth: u32, scope: &Scope, n: usize) -> Vec<Expr> {
    (0..n).map(|_| gen_str(rng, depth, scope)).collect()
}

fn gen_str(rng: &mut ChaCha8Rng, depth: u32, scope: &Scope) -> Expr {
    let var = |rng: &mut ChaCha8Rng| {
        if !scope.params.is_empty() && rng.gen_bool(0.6) {
            *scope.params.choose(rng).unwrap()
        } else {
            *scope.strings.choose(rng).unwrap()
        }
    };
    if depth == 0 || rng.gen_ratio(1, 4) {
        return if rng.gen_bool(0.6) { Expr::var(var(rng)) } else { literal(rng) };
    }
    let d = depth - 1;
    match rng.gen_range(0..12) {
        0 | 1 => Expr::concat(gen_str(rng, d, scope), gen_str(rng, d, scope)),
        2 => Expr::assign(var(rng), gen_str(rng, d, scope)),
        3 | 4 if !scope.callable.is_empty() => {
            let &(f, arity) = scope.callable.choose(rng).unwrap();
            Expr::call(Expr::var(f), args(rng, d, scope, arity))
        }
        5 => {
            let arity = rng.gen_range(0..=2);
            let f = gen_function(rng, d, scope, arity);
            Expr::call(f, args(rng, d, scope, arity))
        }
        6 => {
            // hand a promise to a closure that outlives the call
            let mk = Expr::function(vec![("p", None)], Expr::function(vec![], Expr::var("p")));
            Expr::call(Expr::call(mk, vec![gen_str(rng, d, scope)]), vec![])
        }
        7 if !scope.params.is_empty() => Expr::substitute(scope.params.choose(rng).unwrap()),
        8 => {
            let code = if scope.params.is_empty() || rng.gen_bool(0.5) {
                let globals = Scope { strings: GLOBALS.to_vec(), params: Vec::new(), callable: scope.callable.clone() };
                Expr::str(deparse(&gen_str(rng, d, &globals)))
            } else {
                Expr::substitute(scope.params.choose(rng).unwrap())
            };
            Expr::eval(code, Expr::env_capture())
        }
        9 => {
            let n = var(rng);
            Expr::block(vec![Expr::delayed_assign(n, gen_str(rng, d, scope), Expr::env_capture()), Expr::var(n)])
        }
        10 => Expr::block(vec![Expr::assign("e", Expr::env_capture()), gen_str(rng, d, scope)]),
        _ => {
            let n = rng.gen_range(1..=3);
            Expr::block(args(rng, d, scope, n))
        }
    }
}

fn gen_untyped(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    let names = ["a", "f", "p", "x"];
    let name = |rng: &mut ChaCha8Rng| *names.choose(rng).unwrap();
    if depth == 0 || rng.gen_ratio(1, 3) {
        return match rng.gen_range(0..3) {
            0 => literal(rng),
            1 => Expr::env_capture(),
            _ => Expr::var(name(rng)),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..9) {
        0 => Expr::concat(gen_untyped(rng, d), gen_untyped(rng, d)),
        1 => Expr::assign(name(rng), gen_untyped(rng, d)),
        2 => {
            let default = rng.gen_bool(0.5).then(|| gen_untyped(rng, d));
            Expr::function(vec![("p", default)], gen_untyped(rng, d))
        }
        3 | 4 => {
            let n = rng.gen_range(0..=2);
            Expr::call(gen_untyped(rng, d), (0..n).map(|_| gen_untyped(rng, d)).collect())
        }
        5 => Expr::substitute(name(rng)),
        6 => Expr::eval(gen_untyped(rng, d), gen_untyped(rng, d)),
        7 => Expr::delayed_assign(name(rng), gen_untyped(rng, d), gen_untyped(rng, d)),
        _ => Expr::block(vec![gen_untyped(rng, d), gen_untyped(rng, d)]),
    }
}

/// A small program, returned as source text so closures carry real
/// definition sites.
pub fn random_program(rng: &mut ChaCha8Rng) -> String {
    let mut stmts = Vec::new();
    if rng.gen_ratio(1, 10) {
        for _ in 0..rng.gen_range(2..=4) {
            stmts.push(gen_untyped(rng, 4));
        }
    } else {
        let strings = Scope { strings: GLOBALS.to_vec(), params: Vec::new(), callable: Vec::new() };
        let mut globals = GLOBALS;
        globals.shuffle(rng);
        for g in globals {
            stmts.push(Expr::assign(g, literal(rng)));
        }
        let fa = rng.gen_range(0..=3);
        stmts.push(Expr::assign("f", gen_function(rng, 3, &strings, fa)));
        let with_f = Scope { strings: GLOBALS.to_vec(), params: Vec::new(), callable: vec![("f", fa)] };
        let ga = rng.gen_range(0..=3);
        stmts.push(Expr::assign("g", gen_function(rng, 3, &with_f, ga)));
        let top = Scope { strings: GLOBALS.to_vec(), params: Vec::new(), callable: vec![("f", fa), ("g", ga)] };
        for _ in 0..rng.gen_range(1..=3) {
            stmts.push(gen_str(rng, 3, &top));
            let &(h, arity) = top.callable.choose(rng).unwrap();
            stmts.push(Expr::call(Expr::var(h), args(rng, 2, &top, arity)));
        }
    }
    let text = deparse(&Expr::block(stmts));
    // drop the outer braces so definitions land in the global frame
    let inner = text.strip_prefix("{ ").and_then(|t| t.strip_suffix(" }")).unwrap().to_string();
    parse(&inner).expect("deparsed programs parse");
    inner
}

/// Tracer that also checks the heap right after every Memo.
struct Checked {
    tracer: Tracer<Vec<TraceEvent>>,
    memo_failures: usize,
    memos: usize,
}

impl Observer for Checked {
    fn observe(&mut self, fired: &Fired, machine: &Machine) -> Result<(), String> {
        if let Fired::Memo { promise } = fired {
            self.memos += 1;
            let p = machine.heap().promise(*promise).ok_or("memo of a non-promise")?;
            if p.env.is_some() || p.val.is_none() {
                self.memo_failures += 1;
            }
        }
        self.tracer.observe(fired, machine)
    }
}

pub struct FuzzRun {
    pub source: String,
    pub events: Vec<TraceEvent>,
    pub memo_failures: usize,
    pub memos: usize,
}

pub fn fuzz_run(seed: u64) -> FuzzRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source = random_program(&mut rng);
    let program = parse(&source).unwrap();
    let mut checked = Checked { tracer: Tracer::new("fuzz", Vec::new()), memo_failures: 0, memos: 0 };
    let outcome = Machine::new(&program).run(fuzz_limits(), &mut checked);
    let events = checked.tracer.finish(&outcome);
    FuzzRun { source, events, memo_failures: checked.memo_failures, memos: checked.memos }
}

/// The golden suite plus 40 generated programs, as traces.
pub fn analysis_corpus() -> Vec<Vec<TraceEvent>> {
    let mut traces: Vec<Vec<TraceEvent>> = goldens().iter().map(|g| read_trace_bytes(&g.trace).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for i in 0..40 {
        let src = random_program(&mut rng);
        traces.push(trace_to_vec(&parse(&src).unwrap(), &format!("gen{i}"), fuzz_limits()).1);
    }
    traces
}

// ---------------------------------------------------------------------
// Naive reducer: every fact is recomputed by rescanning the raw events.

fn stack_at(events: &[TraceEvent], upto: usize) -> Vec<u64> {
    let mut stack = Vec::new();
    for ev in &events[..upto] {
        match ev {
            TraceEvent::CallEnter { call, .. } => stack.push(*call),
            TraceEvent::CallExit { .. } => {
                stack.pop();
            }
            _ => {}
        }
    }
    stack
}

fn parent_of(events: &[TraceEvent], call: u64) -> u64 {
    let at = events
        .iter()
        .position(|e| matches!(e, TraceEvent::CallEnter { call: c, .. } if *c == call))
        .expect("call entered");
    stack_at(events, at).last().copied().unwrap_or(0)
}

fn exited_before(events: &[TraceEvent], call: u64, at: usize) -> bool {
    call != 0 && events[..at].iter().any(|e| matches!(e, TraceEvent::CallExit { call: c } if *c == call))
}

/// Depth recomputed from scratch for the force at `at`.
pub fn naive_depth(events: &[TraceEvent], creator: u64, at: usize) -> u64 {
    let stack = stack_at(events, at);
    let mut anchor = creator;
    loop {
        if anchor == 0 {
            return stack.len() as u64;
        }
        if let Some(i) = stack.iter().position(|&c| c == anchor) {
            return (stack.len() - i - 1) as u64;
        }
        anchor = parent_of(events, anchor);
    }
}

fn touches(ev: &TraceEvent, prom: u64) -> Option<char> {
    match ev {
        TraceEvent::PromForceEnter { prom: p, .. } if *p == prom => Some('F'),
        TraceEvent::PromRead { prom: p, .. } if *p == prom => Some('R'),
        TraceEvent::PromMeta { prom: p, .. } if *p == prom => Some('M'),
        _ => None,
    }
}

pub fn naive_reduce(events: &[TraceEvent]) -> Reduction {
    let program = match &events[0] {
        TraceEvent::ProgramStart { name } => name.clone(),
        other => panic!("trace starts with {other:?}"),
    };
    let (steps, status) = match events.last().unwrap() {
        TraceEvent::ProgramEnd { steps, status } => (*steps, status.clone()),
        other => panic!("trace ends with {other:?}"),
    };
    let mut promises = Vec::new();
    for ev in events {
        let TraceEvent::PromCreate { prom, call, param, kind, class, .. } = ev else { continue };
        let mut lifecycle = String::new();
        let mut force_depth = None;
        for (j, e) in events.iter().enumerate() {
            let Some(letter) = touches(e, *prom) else { continue };
            if exited_before(events, *call, j) && !lifecycle.contains('E') {
                lifecycle.push('E');
            }
            lifecycle.push(letter);
            if letter == 'F' {
                force_depth = Some(naive_depth(events, *call, j));
            }
        }
        let count = |c: char| lifecycle.chars().filter(|&l| l == c).count() as u64;
        let mut side_effects = SideEffects::default();
        for e in events {
            if let TraceEvent::VarDef { locality, prom: p, .. } | TraceEvent::VarWrite { locality, prom: p, .. } = e {
                if p == prom {
                    match locality {
                        Locality::Local => side_effects.local += 1,
                        Locality::Lexical => side_effects.lexical += 1,
                        Locality::Other => side_effects.other += 1,
                        Locality::None => {}
                    }
                }
            }
        }
        promises.push(PromiseRecord {
            prom: *prom,
            kind: *kind,
            call: *call,
            param: param.clone(),
            class: *class,
            read_count: count('R'),
            meta_count: count('M'),
            escaped: lifecycle.contains('E'),
            lifecycle,
            force_depth,
            side_effects,
        });
    }
    promises.sort_by_key(|p| p.prom);

    let mut functions: BTreeMap<FnSite, FunctionFacts> = BTreeMap::new();
    for ev in events {
        let TraceEvent::CallEnter { call, site, n_params, .. } = ev else { continue };
        let params: Vec<u64> = events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::PromCreate { prom, call: c, kind, .. } if c == call && *kind != PromiseKind::Delayed => {
                    Some(*prom)
                }
                _ => None,
            })
            .collect();
        let completed = events.iter().any(|e| matches!(e, TraceEvent::CallExit { call: c } if c == call));
        let facts = functions.entry(*site).or_insert_with(|| FunctionFacts::new(*site, *n_params));
        if !completed {
            facts.aborted += 1;
            continue;
        }
        facts.calls += 1;
        let order: Vec<usize> = events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::PromForceEnter { prom, .. } => params.iter().position(|p| p == prom).map(|i| i + 1),
                _ => None,
            })
            .collect();
        for &p in &order {
            facts.forced[p - 1] += 1;
        }
        facts.orders.insert(order);
    }
    Reduction { program, steps, status, promises, functions: functions.into_values().collect() }
}

/// Emitted force depths that disagree with a from-scratch stack rebuild.
pub fn depth_mismatches(events: &[TraceEvent]) -> Vec<String> {
    let creators: HashMap<u64, u64> = events
        .iter()
        .filter_map(|e| match e {
            TraceEvent::PromCreate { prom, call, .. } => Some((*prom, *call)),
            _ => None,
        })
        .collect();
    let mut bad = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        if let TraceEvent::PromForceEnter { prom, depth, .. } = ev {
            let expected = naive_depth(events, creators[prom], i);
            if expected != *depth {
                bad.push(format!("event {i}: promise {prom} depth {depth}, expected {expected}"));
            }
        }
    }
    bad
}

/// Promises with more than one force event.
pub fn multiply_forced(events: &[TraceEvent]) -> Vec<u64> {
    let mut seen = HashSet::new();
    let mut twice = Vec::new();
    for ev in events {
        if let TraceEvent::PromForceEnter { prom, .. } = ev {
            if !seen.insert(*prom) {
                twice.push(*prom);
            }
        }
    }
    twice
}

pub fn is_ok(status: &Status) -> bool {
    *status == Status::Ok
}
