use std::collections::{BTreeMap, BTreeSet};

use super::record::FunctionFacts;
use crate::tracer::FnSite;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strictness {
    Always,
    Sometimes,
    Never,
}

impl Strictness {
    pub const ALL: [Strictness; 3] = [Strictness::Always, Strictness::Sometimes, Strictness::Never];

    pub fn label(self) -> &'static str {
        match self {
            Strictness::Always => "always",
            Strictness::Sometimes => "sometimes",
            Strictness::Never => "never",
        }
    }

    pub fn letter(self) -> char {
        match self {
            Strictness::Always => 'A',
            Strictness::Sometimes => 'S',
            Strictness::Never => 'N',
        }
    }

    /// A parameter forced in `forced` of `calls` completed calls. With no
    /// completed calls nothing was forced, which reads as `Never`.
    pub fn of(forced: u64, calls: u64) -> Strictness {
        if forced == 0 {
            Strictness::Never
        } else if forced == calls {
            Strictness::Always
        } else {
            Strictness::Sometimes
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSummary {
    pub program: String,
    pub site: FnSite,
    pub calls: u64,
    pub aborted: u64,
    pub params: Vec<Strictness>,
    pub orders: BTreeSet<Vec<usize>>,
    /// Called to completion at least twice and has a parameter.
    pub eligible: bool,
    pub strict: bool,
}

impl FunctionSummary {
    pub fn from_facts(program: &str, facts: &FunctionFacts) -> FunctionSummary {
        let params: Vec<Strictness> = facts.forced.iter().map(|&f| Strictness::of(f, facts.calls)).collect();
        let eligible = facts.calls >= 2 && facts.n_params >= 1;
        let strict = eligible && params.iter().all(|&s| s == Strictness::Always) && facts.orders.len() == 1;
        FunctionSummary {
            program: program.to_string(),
            site: facts.site,
            calls: facts.calls,
            aborted: facts.aborted,
            params,
            orders: facts.orders.clone(),
            eligible,
            strict,
        }
    }

    /// One letter per parameter: A, S or N.
    pub fn params_label(&self) -> String {
        self.params.iter().map(|s| s.letter()).collect()
    }
}

/// Classifies functions from facts gathered over one or more traces.
/// Facts for the same program and site are merged first.
pub fn classify_strictness<'a, I>(facts: I) -> Vec<FunctionSummary>
where
    I: IntoIterator<Item = (&'a str, &'a FunctionFacts)>,
{
    let mut merged: BTreeMap<(&str, FnSite), FunctionFacts> = BTreeMap::new();
    for (program, f) in facts {
        merged.entry((program, f.site)).and_modify(|m| m.merge(f)).or_insert_with(|| f.clone());
    }
    merged.iter().map(|((program, _), f)| FunctionSummary::from_facts(program, f)).collect()
}
