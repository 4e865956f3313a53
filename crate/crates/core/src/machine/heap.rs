use std::fmt;
use std::rc::Rc;

use indexmap::IndexMap;

use crate::syntax::{Expr, Name};

use super::value::Value;

/// A heap reference. Locations are handed out sequentially from 1 and never
/// reused within a run; 0 is reserved to mean "none" in traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location(pub u32);

impl Location {
    pub const NONE: Location = Location(0);
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A mutable binding table. Iteration follows insertion order.
pub type Frame = IndexMap<Name, Value>;

/// Chain of frame locations, innermost first. Environments share their
/// tails, so extending one for a call is O(1).
#[derive(Clone, Default)]
pub struct Env(Option<Rc<EnvNode>>);

struct EnvNode {
    frame: Location,
    rest: Env,
}

impl Env {
    pub fn empty() -> Env {
        Env(None)
    }

    pub fn cons(frame: Location, rest: Env) -> Env {
        Env(Some(Rc::new(EnvNode { frame, rest })))
    }

    pub fn head(&self) -> Option<Location> {
        self.0.as_ref().map(|node| node.frame)
    }

    pub fn frames(&self) -> impl Iterator<Item = Location> + '_ {
        let mut cursor = self.0.as_deref();
        std::iter::from_fn(move || {
            let node = cursor?;
            cursor = node.rest.0.as_deref();
            Some(node.frame)
        })
    }

    pub fn contains(&self, frame: Location) -> bool {
        self.frames().any(|l| l == frame)
    }
}

impl PartialEq for Env {
    fn eq(&self, other: &Env) -> bool {
        self.frames().eq(other.frames())
    }
}

impl fmt::Debug for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.frames()).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForceFlag {
    NotForcing,
    Forcing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PromiseKind {
    Arg,
    Default,
    Delayed,
}

/// Where a promise came from; not part of the calculus, recorded for analysis.
#[derive(Clone, Debug, PartialEq)]
pub struct PromiseOrigin {
    /// Creation ordinal, starting at 1.
    pub id: u64,
    pub kind: PromiseKind,
    /// Call that created the promise, 0 for top level.
    pub call: u64,
    pub param: Option<Name>,
}

/// The four-slot promise: cached value, code, environment and forcing flag.
#[derive(Clone, Debug)]
pub struct Promise {
    pub val: Option<Value>,
    pub exp: Expr,
    /// `None` once the value has been memoized.
    pub env: Option<Env>,
    pub flag: ForceFlag,
    pub origin: PromiseOrigin,
}

#[derive(Clone, Debug)]
pub enum HeapCell {
    Frame(Frame),
    Env(Env),
    Promise(Promise),
}

/// Append-only store. Nothing is ever collected during a run.
#[derive(Clone, Debug, Default)]
pub struct Heap {
    cells: Vec<HeapCell>,
}

impl Heap {
    pub fn new() -> Heap {
        Heap::default()
    }

    pub fn alloc(&mut self, cell: HeapCell) -> Location {
        self.cells.push(cell);
        Location(self.cells.len() as u32)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, loc: Location) -> Option<&HeapCell> {
        (loc.0 as usize).checked_sub(1).and_then(|i| self.cells.get(i))
    }

    fn get_mut(&mut self, loc: Location) -> Option<&mut HeapCell> {
        (loc.0 as usize).checked_sub(1).and_then(|i| self.cells.get_mut(i))
    }

    pub fn frame(&self, loc: Location) -> Option<&Frame> {
        match self.get(loc)? {
            HeapCell::Frame(frame) => Some(frame),
            _ => None,
        }
    }

    pub fn frame_mut(&mut self, loc: Location) -> Option<&mut Frame> {
        match self.get_mut(loc)? {
            HeapCell::Frame(frame) => Some(frame),
            _ => None,
        }
    }

    pub fn env_record(&self, loc: Location) -> Option<&Env> {
        match self.get(loc)? {
            HeapCell::Env(env) => Some(env),
            _ => None,
        }
    }

    pub fn promise(&self, loc: Location) -> Option<&Promise> {
        match self.get(loc)? {
            HeapCell::Promise(p) => Some(p),
            _ => None,
        }
    }

    pub fn promise_mut(&mut self, loc: Location) -> Option<&mut Promise> {
        match self.get_mut(loc)? {
            HeapCell::Promise(p) => Some(p),
            _ => None,
        }
    }

    pub fn promises(&self) -> impl Iterator<Item = (Location, &Promise)> {
        self.cells.iter().enumerate().filter_map(|(i, cell)| match cell {
            HeapCell::Promise(p) => Some((Location(i as u32 + 1), p)),
            _ => None,
        })
    }
}

/// A successful variable lookup: the frame holding the binding and its value.
#[derive(Clone, Debug, PartialEq)]
pub struct Binding {
    pub frame: Location,
    pub value: Value,
}

/// Searches `env` innermost-out for `name`.
pub fn lookup_get(heap: &Heap, env: &Env, name: &str) -> Option<Binding> {
    env.frames().find_map(|loc| {
        let value = heap.frame(loc)?.get(name)?;
        Some(Binding { frame: loc, value: value.clone() })
    })
}
