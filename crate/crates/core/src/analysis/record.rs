use std::collections::BTreeSet;

use crate::machine::PromiseKind;
use crate::tracer::{ExprClass, FnSite, Status};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SideEffects {
    pub local: u64,
    pub lexical: u64,
    pub other: u64,
}

impl SideEffects {
    pub fn total(&self) -> u64 {
        self.local + self.lexical + self.other
    }
}

/// Everything the analysis keeps about one promise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromiseRecord {
    pub prom: u64,
    pub kind: PromiseKind,
    pub call: u64,
    pub param: String,
    pub class: ExprClass,
    /// Letters F (force), R (read), M (meta), E (escape) in trace order.
    pub lifecycle: String,
    pub force_depth: Option<u64>,
    pub read_count: u64,
    pub meta_count: u64,
    pub escaped: bool,
    pub side_effects: SideEffects,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LifecycleCategory {
    Argument,
    Escaped,
    NonArgument,
}

impl LifecycleCategory {
    pub const ALL: [LifecycleCategory; 3] =
        [LifecycleCategory::Argument, LifecycleCategory::Escaped, LifecycleCategory::NonArgument];

    pub fn label(self) -> &'static str {
        match self {
            LifecycleCategory::Argument => "argument",
            LifecycleCategory::Escaped => "escaped",
            LifecycleCategory::NonArgument => "non-argument",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetaUsage {
    Unused,
    MetaOnly,
    MetaAndValue,
    ValueOnly,
}

impl MetaUsage {
    pub const ALL: [MetaUsage; 4] =
        [MetaUsage::Unused, MetaUsage::MetaOnly, MetaUsage::MetaAndValue, MetaUsage::ValueOnly];

    pub fn label(self) -> &'static str {
        match self {
            MetaUsage::Unused => "unused",
            MetaUsage::MetaOnly => "meta-only",
            MetaUsage::MetaAndValue => "meta-and-value",
            MetaUsage::ValueOnly => "value-only",
        }
    }
}

impl PromiseRecord {
    pub fn is_argument(&self) -> bool {
        self.kind != PromiseKind::Delayed
    }

    pub fn category(&self) -> LifecycleCategory {
        match (self.is_argument(), self.escaped) {
            (false, _) => LifecycleCategory::NonArgument,
            (true, false) => LifecycleCategory::Argument,
            (true, true) => LifecycleCategory::Escaped,
        }
    }

    pub fn forced(&self) -> bool {
        self.force_depth.is_some()
    }

    pub fn meta_usage(&self) -> MetaUsage {
        let meta = self.lifecycle.contains('M');
        let value = self.lifecycle.contains(['F', 'R']);
        match (meta, value) {
            (false, false) => MetaUsage::Unused,
            (true, false) => MetaUsage::MetaOnly,
            (true, true) => MetaUsage::MetaAndValue,
            (false, true) => MetaUsage::ValueOnly,
        }
    }
}

/// Raw strictness facts for one function definition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionFacts {
    pub site: FnSite,
    pub n_params: usize,
    /// Calls that returned normally.
    pub calls: u64,
    /// Calls still open when the program stopped with an error.
    pub aborted: u64,
    /// Per parameter, the number of completed calls that forced it.
    pub forced: Vec<u64>,
    /// Distinct force orders over completed calls, as 1-based positions.
    pub orders: BTreeSet<Vec<usize>>,
}

impl FunctionFacts {
    pub fn new(site: FnSite, n_params: usize) -> FunctionFacts {
        FunctionFacts { site, n_params, calls: 0, aborted: 0, forced: vec![0; n_params], orders: BTreeSet::new() }
    }

    pub fn merge(&mut self, other: &FunctionFacts) {
        self.n_params = self.n_params.max(other.n_params);
        self.calls += other.calls;
        self.aborted += other.aborted;
        if self.forced.len() < other.forced.len() {
            self.forced.resize(other.forced.len(), 0);
        }
        for (mine, theirs) in self.forced.iter_mut().zip(&other.forced) {
            *mine += theirs;
        }
        self.orders.extend(other.orders.iter().cloned());
    }
}

/// `(1,2)` style label; the empty order is `()`.
pub fn order_label(order: &[usize]) -> String {
    let inner: Vec<String> = order.iter().map(|p| p.to_string()).collect();
    format!("({})", inner.join(","))
}

/// Result of reducing one trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub program: String,
    pub steps: u64,
    pub status: Status,
    /// Ordered by promise id.
    pub promises: Vec<PromiseRecord>,
    /// Ordered by site.
    pub functions: Vec<FunctionFacts>,
}
