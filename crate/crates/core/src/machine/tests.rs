use super::*;
use crate::syntax::parse;

/// Records the rule sequence and checks the promise invariants after each step.
#[derive(Default)]
struct RuleLog {
    rules: Vec<Rule>,
}

impl Observer for RuleLog {
    fn observe(&mut self, fired: &Fired, machine: &Machine) -> Result<(), String> {
        self.rules.push(fired.rule());
        for (l, p) in machine.heap().promises() {
            if p.val.is_some() && (p.env.is_some() || p.flag != ForceFlag::NotForcing) {
                return Err(format!("promise {l} has a value but keeps its environment"));
            }
            if p.flag == ForceFlag::Forcing && p.val.is_some() {
                return Err(format!("promise {l} is forcing with a value"));
            }
        }
        Ok(())
    }
}

fn eval_src(src: &str) -> (Result<Value, RuntimeError>, Vec<Rule>, Machine) {
    let program = parse(src).unwrap();
    let mut machine = Machine::new(&program);
    let mut log = RuleLog::default();
    let outcome = machine.run(Limits { max_steps: 10_000 }, &mut log);
    assert_eq!(outcome.steps as usize, log.rules.len());
    (outcome.result, log.rules, machine)
}

fn value_of(src: &str) -> Value {
    eval_src(src).0.unwrap_or_else(|e| panic!("{src}: {e}"))
}

fn global(machine: &Machine, name: &str) -> Option<Value> {
    machine.heap().frame(Location(1)).unwrap().get(name).cloned()
}

#[test]
fn concat_takes_one_step() {
    let (v, rules, _) = eval_src(r#""a" + "b""#);
    assert_eq!(v.unwrap(), Value::str("ab"));
    assert_eq!(rules, vec![Rule::Concat]);
}

#[test]
fn argument_side_effect_happens_once() {
    let (v, _, machine) = eval_src(r#"f <- function(x) x + x; f((y <- "h"))"#);
    assert_eq!(v.unwrap(), Value::str("hh"));
    assert_eq!(global(&machine, "y"), Some(Value::str("h")));
    let forced: Vec<_> = machine.heap().promises().filter(|(_, p)| p.val.is_some()).collect();
    assert_eq!(forced.len(), 1);
}

#[test]
fn memoized_program_step_sequence() {
    // Hand-stepped: Fun Assign Seq Lookup Invoke | Lookup2 Force Memo RetProm |
    // Lookup2 ReadVal RetProm | Concat Ret Seq.
    use Rule::*;
    let (v, rules, _) = eval_src(r#"f <- function(x) x + x; f("a")"#);
    assert_eq!(v.unwrap(), Value::str("aa"));
    assert_eq!(
        rules,
        vec![
            Fun, Assign, Seq, Lookup, Invoke, Lookup2, Force, Memo, RetProm, Lookup2, ReadVal, RetProm, Concat, Ret,
            Seq
        ]
    );
}

#[test]
fn self_referential_default_is_a_cycle() {
    let (v, rules, _) = eval_src("(function(x = x) x)()");
    match v {
        Err(RuntimeError::PromiseCycle { span }) => assert_eq!(span.start, 14),
        other => panic!("expected a cycle, got {other:?}"),
    }
    use Rule::*;
    assert_eq!(rules, vec![Fun, Invoke, Lookup2, Force, Lookup2]);
}

#[test]
fn unused_argument_is_never_evaluated() {
    let (v, _, machine) = eval_src(r#"g <- function(a, b) a; g("v", nonexistent)"#);
    assert_eq!(v.unwrap(), Value::str("v"));
    let (_, p) = machine.heap().promises().nth(1).unwrap();
    assert!(p.val.is_none());
    assert_eq!(p.flag, ForceFlag::NotForcing);
}

#[test]
fn delayed_assignment_forces_on_lookup() {
    // Hand-stepped: Env Assign Seq Lookup Delay Seq Lookup2 Force Concat Memo RetProm Seq.
    use Rule::*;
    let (v, rules, machine) = eval_src(r#"e <- environment(); delayedAssign(z, "a" + "b", e); z"#);
    assert_eq!(v.unwrap(), Value::str("ab"));
    assert_eq!(rules, vec![Env, Assign, Seq, Lookup, Delay, Seq, Lookup2, Force, Concat, Memo, RetProm, Seq]);
    let (_, p) = machine.heap().promises().next().unwrap();
    assert_eq!(p.origin.kind, PromiseKind::Delayed);
    assert_eq!(p.origin.call, 0);
    assert!(p.env.is_none());
}

#[test]
fn delayed_code_is_untouched_until_forced() {
    let (v, _, machine) = eval_src(r#"e <- environment(); delayedAssign(z, (s <- "x"), e); "done""#);
    assert_eq!(v.unwrap(), Value::str("done"));
    assert_eq!(global(&machine, "s"), None);
}

#[test]
fn substitute_deparses_without_forcing() {
    let (v, _, machine) = eval_src(r#"f <- function(x) substitute(x); f("a" + "b")"#);
    assert_eq!(v.unwrap(), Value::str(r#""a" + "b""#));
    assert!(machine.heap().promises().all(|(_, p)| p.val.is_none()));
}

#[test]
fn eval_runs_in_captured_environment() {
    let v = value_of(r#"f <- function(x) { y <- "in"; environment() }; e <- f("q"); eval("y + x", e)"#);
    assert_eq!(v, Value::str("inq"));
}

#[test]
fn eval_of_substitute_reevaluates_argument_text() {
    let v = value_of(r#"f <- function(x) eval(substitute(x), environment()); x <- "outer"; f(x)"#);
    // The deparsed text `x` is evaluated in f's frame, where x is the promise.
    assert_eq!(v, Value::str("outer"));
}

#[test]
fn default_is_evaluated_in_callee_environment() {
    let v = value_of(r#"f <- function(a, b = a + "!") { a <- "local"; b }; f("arg")"#);
    assert_eq!(v, Value::str("local!"));
}

#[test]
fn arguments_evaluate_in_caller_environment() {
    let v = value_of(r#"x <- "caller"; f <- function(y) { x <- "callee"; y }; f(x)"#);
    assert_eq!(v, Value::str("caller"));
}

#[test]
fn assignment_writes_top_frame_only() {
    let (_, _, machine) = eval_src(r#"x <- "g"; f <- function() x <- "l"; f(); x"#);
    assert_eq!(global(&machine, "x"), Some(Value::str("g")));
}

#[test]
fn closures_capture_definition_environment() {
    let v = value_of(r#"mk <- function(p) function(s) p + s; k <- mk("pre-"); k("fix")"#);
    assert_eq!(v, Value::str("pre-fix"));
}

#[test]
fn callee_is_strict_through_promises() {
    let v = value_of(r#"apply <- function(f, v) f(v); apply(function(z) z + z, "w")"#);
    assert_eq!(v, Value::str("ww"));
}

#[test]
fn runtime_errors_are_reported() {
    let cases = [
        ("y", "UNBOUND_VARIABLE"),
        (r#""a"("b")"#, "NOT_A_CLOSURE"),
        (r#""a" + environment()"#, "TYPE_ERROR"),
        (r#"eval(environment(), environment())"#, "TYPE_ERROR"),
        (r#"eval("a", "b")"#, "TYPE_ERROR"),
        (r#"delayedAssign(z, "a", "notenv")"#, "TYPE_ERROR"),
        (r#"z <- "a"; substitute(z)"#, "TYPE_ERROR"),
        (r#"(function(x) x)("a", "b")"#, "ARITY_ERROR"),
        (r#"(function(x) "k")()"#, "MISSING_DEFAULT"),
        (r#"eval("(", environment())"#, "PARSE_ERROR_IN_EVAL"),
    ];
    for (src, code) in cases {
        let err = eval_src(src).0.unwrap_err();
        assert_eq!(err.code(), code, "{src}: {err}");
        assert!(err.span().is_some());
    }
}

#[test]
fn diverging_recursion_hits_step_limit() {
    let program = parse(r#"f <- function(x) f(x); f("a")"#).unwrap();
    let outcome = run(&program, Limits { max_steps: 500 }, &mut ());
    assert_eq!(outcome.result.unwrap_err(), RuntimeError::StepLimitExceeded { limit: 500 });
    assert_eq!(outcome.steps, 500);
}

#[test]
fn limit_of_one_step_is_enough_for_one_rule() {
    let program = parse(r#""a" + "b""#).unwrap();
    let outcome = run(&program, Limits { max_steps: 1 }, &mut ());
    assert_eq!(outcome.result.unwrap(), Value::str("ab"));
}

#[test]
fn stack_is_balanced_on_termination() {
    let (v, _, machine) =
        eval_src(r#"h <- function(x) x; g <- function(x) h(x); e <- environment(); eval("g(\"a\")", e)"#);
    assert_eq!(v.unwrap(), Value::str("a"));
    assert_eq!(machine.stack().len(), 1);
    assert_eq!(machine.stack()[0].kind, FrameKind::Plain);
}

#[test]
fn runs_are_deterministic() {
    let src = r#"f <- function(a, b = a) { e <- environment(); delayedAssign(q, b + a, e); q }; f("1")"#;
    let (v1, r1, m1) = eval_src(src);
    let (v2, r2, m2) = eval_src(src);
    assert_eq!(v1.unwrap(), v2.unwrap());
    assert_eq!(r1, r2);
    assert_eq!(m1.heap().len(), m2.heap().len());
}
