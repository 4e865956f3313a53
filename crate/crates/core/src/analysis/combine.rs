use std::collections::BTreeMap;

use super::record::{order_label, FunctionFacts, LifecycleCategory, MetaUsage, Reduction};
use super::strictness::{FunctionSummary, Strictness};
use crate::machine::PromiseKind;
use crate::trace_format::{class_token, escape_field, kind_token, locality_token};
use crate::tracer::{ExprClass, FnSite, Locality, Status};

/// File stems of the summary tables, in rendering order.
pub const TABLE_NAMES: [&str; 11] = [
    "corpus",
    "lifecycle",
    "strictness",
    "force_orders",
    "functions",
    "force_depth",
    "reads",
    "expr_class",
    "meta_usage",
    "side_effects",
    "escapes",
];

const CLASSES: [ExprClass; 4] = [ExprClass::Sym, ExprClass::Const, ExprClass::Call, ExprClass::Other];
const KINDS: [PromiseKind; 3] = [PromiseKind::Arg, PromiseKind::Default, PromiseKind::Delayed];
const LOCALITIES: [Locality; 3] = [Locality::Local, Locality::Lexical, Locality::Other];

/// A named table of strings. Cells hold already-escaped text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Table {
        Table { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        self.rows.push(cells.into_iter().collect());
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.columns.join("\t");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(name: &str, text: &str) -> Result<Table, String> {
        let mut lines = text.split_terminator('\n');
        let header = lines.next().ok_or_else(|| format!("{name}: empty table"))?;
        let columns: Vec<String> = header.split('\t').map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split('\t').map(str::to_string).collect();
            if row.len() != columns.len() {
                return Err(format!("{name}: row {} has {} cells, expected {}", i + 2, row.len(), columns.len()));
            }
            rows.push(row);
        }
        Ok(Table { name: name.to_string(), columns, rows })
    }
}

/// Running totals over reduced traces. `add` and `merge` commute, so any
/// grouping or order of inputs gives the same summary.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Combined {
    programs: u64,
    failed: u64,
    promises: u64,
    lifecycle: BTreeMap<(LifecycleCategory, String), u64>,
    depth: BTreeMap<u64, u64>,
    reads: BTreeMap<u64, u64>,
    /// Per class: promises, forced.
    classes: BTreeMap<ExprClass, (u64, u64)>,
    meta: BTreeMap<MetaUsage, u64>,
    /// Per locality: writes, promises with at least one.
    effects: BTreeMap<Locality, (u64, u64)>,
    /// Per kind: promises, escaped.
    escapes: BTreeMap<PromiseKind, (u64, u64)>,
    functions: BTreeMap<(String, FnSite), FunctionFacts>,
}

fn bump<K: Ord>(map: &mut BTreeMap<K, u64>, key: K, by: u64) {
    *map.entry(key).or_default() += by;
}

fn bump2<K: Ord>(map: &mut BTreeMap<K, (u64, u64)>, key: K, by: (u64, u64)) {
    let e = map.entry(key).or_default();
    e.0 += by.0;
    e.1 += by.1;
}

impl Combined {
    pub fn new() -> Combined {
        Combined::default()
    }

    pub fn add(&mut self, r: &Reduction) {
        self.programs += 1;
        self.failed += u64::from(r.status != Status::Ok);
        self.promises += r.promises.len() as u64;
        for p in &r.promises {
            bump(&mut self.lifecycle, (p.category(), p.lifecycle.clone()), 1);
            if let Some(d) = p.force_depth {
                bump(&mut self.depth, d, 1);
            }
            bump(&mut self.reads, p.read_count, 1);
            bump2(&mut self.classes, p.class, (1, u64::from(p.forced())));
            bump(&mut self.meta, p.meta_usage(), 1);
            let e = p.side_effects;
            for (locality, n) in LOCALITIES.into_iter().zip([e.local, e.lexical, e.other]) {
                if n > 0 {
                    bump2(&mut self.effects, locality, (n, 1));
                }
            }
            bump2(&mut self.escapes, p.kind, (1, u64::from(p.escaped)));
        }
        for f in &r.functions {
            self.functions.entry((r.program.clone(), f.site)).and_modify(|m| m.merge(f)).or_insert_with(|| f.clone());
        }
    }

    pub fn merge(&mut self, other: &Combined) {
        self.programs += other.programs;
        self.failed += other.failed;
        self.promises += other.promises;
        for (k, &v) in &other.lifecycle {
            bump(&mut self.lifecycle, k.clone(), v);
        }
        for (&k, &v) in &other.depth {
            bump(&mut self.depth, k, v);
        }
        for (&k, &v) in &other.reads {
            bump(&mut self.reads, k, v);
        }
        for (&k, &v) in &other.classes {
            bump2(&mut self.classes, k, v);
        }
        for (&k, &v) in &other.meta {
            bump(&mut self.meta, k, v);
        }
        for (&k, &v) in &other.effects {
            bump2(&mut self.effects, k, v);
        }
        for (&k, &v) in &other.escapes {
            bump2(&mut self.escapes, k, v);
        }
        for (k, f) in &other.functions {
            self.functions.entry(k.clone()).and_modify(|m| m.merge(f)).or_insert_with(|| f.clone());
        }
    }

    pub fn function_summaries(&self) -> Vec<FunctionSummary> {
        self.functions.iter().map(|((program, _), f)| FunctionSummary::from_facts(program, f)).collect()
    }

    pub fn summary(&self) -> CorpusSummary {
        let functions = self.function_summaries();
        let eligible: Vec<&FunctionSummary> = functions.iter().filter(|f| f.eligible).collect();
        let mut tables = Vec::new();

        let mut t = Table::new("corpus", &["metric", "value"]);
        let strict = eligible.iter().filter(|f| f.strict).count();
        for (metric, value) in [
            ("programs", self.programs),
            ("failed_programs", self.failed),
            ("promises", self.promises),
            ("functions", functions.len() as u64),
            ("eligible_functions", eligible.len() as u64),
            ("strict_functions", strict as u64),
        ] {
            t.row([metric.to_string(), value.to_string()]);
        }
        tables.push(t);

        let mut t = Table::new("lifecycle", &["category", "lifecycle", "promises"]);
        for category in LifecycleCategory::ALL {
            let mut rows: Vec<(&String, u64)> =
                self.lifecycle.iter().filter(|((c, _), _)| *c == category).map(|((_, l), &n)| (l, n)).collect();
            rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            for (lifecycle, n) in rows {
                t.row([category.label().to_string(), lifecycle.clone(), n.to_string()]);
            }
        }
        tables.push(t);

        let mut t = Table::new("strictness", &["strictness", "parameters"]);
        for s in Strictness::ALL {
            let n: usize = eligible.iter().map(|f| f.params.iter().filter(|&&p| p == s).count()).sum();
            t.row([s.label().to_string(), n.to_string()]);
        }
        tables.push(t);

        let mut t = Table::new("force_orders", &["orders", "functions"]);
        let mut orders: BTreeMap<usize, u64> = BTreeMap::new();
        for f in &eligible {
            *orders.entry(f.orders.len()).or_default() += 1;
        }
        for (k, n) in orders {
            t.row([k.to_string(), n.to_string()]);
        }
        tables.push(t);

        let mut t =
            Table::new("functions", &["program", "site", "calls", "aborted", "params", "orders", "eligible", "strict"]);
        for f in &functions {
            let orders: String = f.orders.iter().map(|o| order_label(o)).collect();
            t.row([
                escape_field(&f.program),
                f.site.to_string(),
                f.calls.to_string(),
                f.aborted.to_string(),
                f.params_label(),
                orders,
                yes_no(f.eligible),
                yes_no(f.strict),
            ]);
        }
        tables.push(t);

        let mut t = Table::new("force_depth", &["depth", "promises"]);
        for (d, n) in &self.depth {
            t.row([d.to_string(), n.to_string()]);
        }
        tables.push(t);

        let mut t = Table::new("reads", &["reads", "promises"]);
        for (r, n) in &self.reads {
            t.row([r.to_string(), n.to_string()]);
        }
        tables.push(t);

        let mut t = Table::new("expr_class", &["class", "promises", "forced"]);
        for c in CLASSES {
            let (n, forced) = self.classes.get(&c).copied().unwrap_or_default();
            t.row([class_token(c).to_string(), n.to_string(), forced.to_string()]);
        }
        tables.push(t);

        let mut t = Table::new("meta_usage", &["usage", "promises"]);
        for m in MetaUsage::ALL {
            t.row([m.label().to_string(), self.meta.get(&m).copied().unwrap_or(0).to_string()]);
        }
        tables.push(t);

        let mut t = Table::new("side_effects", &["locality", "writes", "promises"]);
        for l in LOCALITIES {
            let (writes, n) = self.effects.get(&l).copied().unwrap_or_default();
            t.row([locality_token(l).to_string(), writes.to_string(), n.to_string()]);
        }
        tables.push(t);

        let mut t = Table::new("escapes", &["kind", "promises", "escaped"]);
        for k in KINDS {
            let (n, escaped) = self.escapes.get(&k).copied().unwrap_or_default();
            t.row([kind_token(k).to_string(), n.to_string(), escaped.to_string()]);
        }
        tables.push(t);

        debug_assert!(tables.iter().map(|t| t.name.as_str()).eq(TABLE_NAMES));
        CorpusSummary { functions, tables }
    }
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

impl<'a> FromIterator<&'a Reduction> for Combined {
    fn from_iter<I: IntoIterator<Item = &'a Reduction>>(iter: I) -> Combined {
        let mut c = Combined::new();
        for r in iter {
            c.add(r);
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusSummary {
    pub functions: Vec<FunctionSummary>,
    /// One per entry of [`TABLE_NAMES`], in that order.
    pub tables: Vec<Table>,
}

impl CorpusSummary {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Folds reductions into a summary.
pub fn combine<'a>(reductions: impl IntoIterator<Item = &'a Reduction>) -> CorpusSummary {
    reductions.into_iter().collect::<Combined>().summary()
}
