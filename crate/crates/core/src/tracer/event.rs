use std::fmt;
use std::str::FromStr;

use crate::machine::PromiseKind;
use crate::syntax::{Expr, ExprKind, SourceSpan};

/// Definition site of a closure: the source it was parsed from and the
/// byte range of its `function` expression. Rendered as `source:start-end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FnSite {
    pub source: u32,
    pub start: usize,
    pub end: usize,
}

impl From<SourceSpan> for FnSite {
    fn from(span: SourceSpan) -> FnSite {
        FnSite { source: span.source, start: span.start, end: span.end }
    }
}

impl fmt::Display for FnSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}", self.source, self.start, self.end)
    }
}

impl FromStr for FnSite {
    type Err = String;

    fn from_str(s: &str) -> Result<FnSite, String> {
        let bad = || format!("bad function site `{s}`");
        let (source, range) = s.split_once(':').ok_or_else(bad)?;
        let (start, end) = range.split_once('-').ok_or_else(bad)?;
        let site = FnSite {
            source: parse_decimal(source).ok_or_else(bad)?,
            start: parse_decimal(start).ok_or_else(bad)?,
            end: parse_decimal(end).ok_or_else(bad)?,
        };
        if site.start > site.end {
            return Err(bad());
        }
        Ok(site)
    }
}

/// Plain decimal without sign or leading `+`.
pub(crate) fn parse_decimal<T: FromStr>(s: &str) -> Option<T> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Shape of a promise's code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExprClass {
    Sym,
    Const,
    Call,
    Other,
}

impl ExprClass {
    pub fn of(e: &Expr) -> ExprClass {
        match e.kind {
            ExprKind::Var(_) => ExprClass::Sym,
            ExprKind::Str(_) => ExprClass::Const,
            ExprKind::Call(..) => ExprClass::Call,
            _ => ExprClass::Other,
        }
    }
}

/// Where a variable write landed relative to the promise being forced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Locality {
    /// No promise was being forced.
    None,
    /// The top frame of the forcing promise's environment.
    Local,
    /// A frame further out on that environment's chain.
    Lexical,
    /// Any other frame.
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Error(String),
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Ok => f.write_str("OK"),
            Status::Error(code) => f.write_str(code),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    ProgramStart {
        name: String,
    },
    CallEnter {
        call: u64,
        site: FnSite,
        n_params: usize,
        n_args: usize,
    },
    CallExit {
        call: u64,
    },
    PromCreate {
        prom: u64,
        /// Creating call, 0 at top level.
        call: u64,
        /// Parameter name, empty for delayed assignments.
        param: String,
        kind: PromiseKind,
        class: ExprClass,
        expr: String,
    },
    PromForceEnter {
        prom: u64,
        call: u64,
        depth: u64,
    },
    PromForceExit {
        prom: u64,
    },
    PromRead {
        prom: u64,
        call: u64,
    },
    PromMeta {
        prom: u64,
        call: u64,
    },
    EvalEnter {
        env: u32,
    },
    EvalExit,
    VarDef {
        frame: u32,
        name: String,
        locality: Locality,
        prom: u64,
    },
    VarWrite {
        frame: u32,
        name: String,
        locality: Locality,
        prom: u64,
    },
    VarRead {
        frame: u32,
        name: String,
    },
    ProgramEnd {
        steps: u64,
        status: Status,
    },
}

impl TraceEvent {
    pub fn name(&self) -> &'static str {
        match self {
            TraceEvent::ProgramStart { .. } => "PROGRAM_START",
            TraceEvent::CallEnter { .. } => "CALL_ENTER",
            TraceEvent::CallExit { .. } => "CALL_EXIT",
            TraceEvent::PromCreate { .. } => "PROM_CREATE",
            TraceEvent::PromForceEnter { .. } => "PROM_FORCE_ENTER",
            TraceEvent::PromForceExit { .. } => "PROM_FORCE_EXIT",
            TraceEvent::PromRead { .. } => "PROM_READ",
            TraceEvent::PromMeta { .. } => "PROM_META",
            TraceEvent::EvalEnter { .. } => "EVAL_ENTER",
            TraceEvent::EvalExit => "EVAL_EXIT",
            TraceEvent::VarDef { .. } => "VAR_DEF",
            TraceEvent::VarWrite { .. } => "VAR_WRITE",
            TraceEvent::VarRead { .. } => "VAR_READ",
            TraceEvent::ProgramEnd { .. } => "PROGRAM_END",
        }
    }
}
