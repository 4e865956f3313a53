//! Reduce, combine and summarize promise traces.
//!
//! [`reduce_events`] folds one trace into per-promise records and
//! per-function facts. [`Combined`] accumulates any number of reductions
//! and produces a [`CorpusSummary`] of count tables.

mod combine;
mod record;
mod reduce;
mod reduce_file;
mod strictness;

pub use combine::{combine, Combined, CorpusSummary, Table, TABLE_NAMES};
pub use record::{order_label, FunctionFacts, LifecycleCategory, MetaUsage, PromiseRecord, Reduction, SideEffects};
pub use reduce::{reduce_events, reduce_trace, ReduceError, TraceInvariantError};
pub use reduce_file::{read_reduction, write_reduction, REDUCE_MAGIC};
pub use strictness::{classify_strictness, FunctionSummary, Strictness};

/// Lifecycle strings must match `M* E? M* (F (R|M|E)*)?` with at most one E.
pub fn lifecycle_is_valid(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    let mut escapes = 0;
    while i < b.len() && matches!(b[i], b'M' | b'E') {
        if b[i] == b'E' {
            escapes += 1;
        }
        i += 1;
    }
    if i < b.len() {
        if b[i] != b'F' {
            return false;
        }
        i += 1;
        while i < b.len() {
            match b[i] {
                b'R' | b'M' => {}
                b'E' => escapes += 1,
                _ => return false,
            }
            i += 1;
        }
    }
    escapes <= 1
}
