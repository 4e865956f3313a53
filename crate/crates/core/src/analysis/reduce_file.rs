//! Per-trace reduction files, so combining never re-reads traces.
//!
//! ```text
//! CRREDUCE\t1
//! PROGRAM\tname\tsteps\tstatus
//! PROMISE\tid\tkind\tcall\tparam\tclass\tlifecycle\tdepth|-\treads\tmetas\tescaped(0|1)\tlocal\tlexical\tother
//! FUNCTION\tsite\tparams\tcalls\taborted\tforced,...\t(1,2)(2,1)...
//! END\tpromises\tfunctions
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::record::{order_label, FunctionFacts, PromiseRecord, Reduction, SideEffects};
use crate::trace_format::{
    class_token, escape_field, kind_token, parse_class, parse_kind, parse_status, unescape_field, FormatError,
};
use crate::tracer::parse_decimal;

pub const REDUCE_MAGIC: &str = "CRREDUCE\t1";

pub fn write_reduction(r: &Reduction) -> String {
    let mut out = String::new();
    writeln!(out, "{REDUCE_MAGIC}").unwrap();
    writeln!(out, "PROGRAM\t{}\t{}\t{}", escape_field(&r.program), r.steps, r.status).unwrap();
    for p in &r.promises {
        let depth = p.force_depth.map_or("-".to_string(), |d| d.to_string());
        let e = p.side_effects;
        writeln!(
            out,
            "PROMISE\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            p.prom,
            kind_token(p.kind),
            p.call,
            escape_field(&p.param),
            class_token(p.class),
            p.lifecycle,
            depth,
            p.read_count,
            p.meta_count,
            u8::from(p.escaped),
            e.local,
            e.lexical,
            e.other
        )
        .unwrap();
    }
    for f in &r.functions {
        let forced: Vec<String> = f.forced.iter().map(|n| n.to_string()).collect();
        let orders: String = f.orders.iter().map(|o| order_label(o)).collect();
        writeln!(
            out,
            "FUNCTION\t{}\t{}\t{}\t{}\t{}\t{}",
            f.site,
            f.n_params,
            f.calls,
            f.aborted,
            forced.join(","),
            orders
        )
        .unwrap();
    }
    writeln!(out, "END\t{}\t{}", r.promises.len(), r.functions.len()).unwrap();
    out
}

fn parse_orders(s: &str) -> Option<BTreeSet<Vec<usize>>> {
    let mut orders = BTreeSet::new();
    let mut rest = s;
    while !rest.is_empty() {
        let inner = rest.strip_prefix('(')?;
        let close = inner.find(')')?;
        let body = &inner[..close];
        let order = if body.is_empty() {
            Vec::new()
        } else {
            body.split(',').map(parse_decimal).collect::<Option<Vec<usize>>>()?
        };
        orders.insert(order);
        rest = &inner[close + 1..];
    }
    Some(orders)
}

pub fn read_reduction(text: &str) -> Result<Reduction, FormatError> {
    let mut lines = text.split_terminator('\n').enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, REDUCE_MAGIC)) => {}
        _ => return Err(FormatError::at(1, "missing CRREDUCE header")),
    }
    let mut reduction: Option<Reduction> = None;
    let mut ended = false;
    for (n, line) in lines {
        let bad = |what: &str| FormatError::at(n, format!("bad {what}"));
        let f: Vec<&str> = line.split('\t').collect();
        if ended {
            return Err(FormatError::at(n, "line after END"));
        }
        let int = |i: usize| parse_decimal::<u64>(f[i]).ok_or_else(|| bad("integer"));
        let text = |i: usize| unescape_field(f[i]).map_err(|m| FormatError::at(n, m));
        match (f[0], f.len(), reduction.as_mut()) {
            ("PROGRAM", 4, None) => {
                reduction = Some(Reduction {
                    program: text(1)?,
                    steps: int(2)?,
                    status: parse_status(f[3]).ok_or_else(|| bad("status"))?,
                    promises: Vec::new(),
                    functions: Vec::new(),
                });
            }
            ("PROMISE", 14, Some(r)) => {
                if !f[6].bytes().all(|b| b"FRME".contains(&b)) {
                    return Err(bad("lifecycle"));
                }
                r.promises.push(PromiseRecord {
                    prom: int(1)?,
                    kind: parse_kind(f[2]).ok_or_else(|| bad("promise kind"))?,
                    call: int(3)?,
                    param: text(4)?,
                    class: parse_class(f[5]).ok_or_else(|| bad("expression class"))?,
                    lifecycle: f[6].to_string(),
                    force_depth: if f[7] == "-" { None } else { Some(int(7)?) },
                    read_count: int(8)?,
                    meta_count: int(9)?,
                    escaped: match f[10] {
                        "0" => false,
                        "1" => true,
                        _ => return Err(bad("escape flag")),
                    },
                    side_effects: SideEffects { local: int(11)?, lexical: int(12)?, other: int(13)? },
                });
            }
            ("FUNCTION", 7, Some(r)) => {
                let n_params = int(2)? as usize;
                let forced = if f[5].is_empty() {
                    Vec::new()
                } else {
                    f[5].split(',').map(parse_decimal).collect::<Option<Vec<u64>>>().ok_or_else(|| bad("counts"))?
                };
                if forced.len() != n_params {
                    return Err(bad("forced counts"));
                }
                r.functions.push(FunctionFacts {
                    site: f[1].parse().map_err(|m: String| FormatError::at(n, m))?,
                    n_params,
                    calls: int(3)?,
                    aborted: int(4)?,
                    forced,
                    orders: parse_orders(f[6]).ok_or_else(|| bad("orders"))?,
                });
            }
            ("END", 3, Some(r)) => {
                if int(1)? != r.promises.len() as u64 || int(2)? != r.functions.len() as u64 {
                    return Err(FormatError::at(n, "record counts do not match END"));
                }
                ended = true;
            }
            _ => return Err(FormatError::at(n, format!("unexpected line `{}`", escape_field(line)))),
        }
    }
    if !ended {
        return Err(FormatError::at(text.lines().count() + 1, "truncated: missing END"));
    }
    Ok(reduction.expect("END implies PROGRAM"))
}
