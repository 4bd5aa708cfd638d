//! Events, interleavings and traces.
//!
//! An [`Interleaving`] is a linear sequence of `pid: action` events; a
//! [`Trace`] keeps only the per-process action sequences and stands for the
//! whole class of interleavings that project onto it.

mod format;
mod rename;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::causality::EventId;
use crate::ident::{Pid, Tag};
use crate::terms::{Constraint, NameMap, Term};

pub use format::{
    parse_interleaving, parse_trace, serialize_interleaving, serialize_trace,
};
pub(crate) use rename::canonical_constraints;
pub use rename::Renaming;
pub use validate::{
    validate_interleaving, validate_trace, Condition, TraceCondition, TraceViolation, Violation,
};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Spawn(Pid),
    Send { tag: Tag, value: Term, target: Pid },
    Rec { tag: Tag, cs: Arc<Constraint> },
}

impl Action {
    pub fn send(tag: Tag, value: Term, target: Pid) -> Action {
        Action::Send { tag, value, target }
    }

    pub fn rec(tag: Tag, cs: Arc<Constraint>) -> Action {
        Action::Rec { tag, cs }
    }

    pub fn tag(&self) -> Option<&Tag> {
        match self {
            Action::Spawn(_) => None,
            Action::Send { tag, .. } | Action::Rec { tag, .. } => Some(tag),
        }
    }

    pub fn is_rec(&self) -> bool {
        matches!(self, Action::Rec { .. })
    }

    pub fn is_send(&self) -> bool {
        matches!(self, Action::Send { .. })
    }

    pub fn map_names(&self, names: &dyn NameMap) -> Action {
        match self {
            Action::Spawn(p) => Action::Spawn(names.pid(p)),
            Action::Send { tag, value, target } => Action::Send {
                tag: names.tag(tag),
                value: value.map_names(names),
                target: names.pid(target),
            },
            Action::Rec { tag, cs } => Action::Rec {
                tag: names.tag(tag),
                cs: Arc::new(cs.map_names(names)),
            },
        }
    }

    /// Equality up to constraint identifiers.
    pub fn same_as(&self, other: &Action) -> bool {
        match (self, other) {
            (Action::Rec { tag: a, cs: x }, Action::Rec { tag: b, cs: y }) => {
                a == b && x.same_clauses(y)
            }
            _ => self == other,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Spawn(p) => write!(f, "spawn({p})"),
            Action::Send { tag, value, target } => write!(f, "send({tag}, {value}, {target})"),
            Action::Rec { tag, cs } => write!(f, "rec({tag}, {})", cs.id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub pid: Pid,
    pub action: Action,
}

impl Event {
    pub fn new(pid: Pid, action: Action) -> Event {
        Event { pid, action }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pid, self.action)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interleaving {
    pub initial: Pid,
    pub events: Vec<Event>,
}

impl Interleaving {
    pub fn new(initial: Pid, events: Vec<Event>) -> Interleaving {
        Interleaving { initial, events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn map_names(&self, names: &dyn NameMap) -> Interleaving {
        Interleaving {
            initial: names.pid(&self.initial),
            events: self
                .events
                .iter()
                .map(|e| Event::new(names.pid(&e.pid), e.action.map_names(names)))
                .collect(),
        }
    }
}

/// `actions(p, S)`: the actions of `p` in `S`, in order.
pub fn actions(p: &Pid, s: &Interleaving) -> Vec<Action> {
    s.events.iter().filter(|e| &e.pid == p).map(|e| e.action.clone()).collect()
}

/// A mapping from pids to action sequences.
///
/// Pids that are spawned but have not acted are kept with an empty
/// sequence; the initial pid is always present.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trace {
    initial: Pid,
    procs: BTreeMap<Pid, Vec<Action>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("interleaving is not valid: {0}")]
    InvalidInterleaving(Violation),
    #[error("traces have different initial pids ({0} vs {1})")]
    InitialMismatch(Pid, Pid),
}

impl Trace {
    /// The empty execution: `[initial ↦ ε]`.
    pub fn new(initial: Pid) -> Trace {
        let mut procs = BTreeMap::new();
        procs.insert(initial.clone(), Vec::new());
        Trace { initial, procs }
    }

    /// Builds a trace from per-process sequences, adding the initial pid and
    /// spawned pids with empty sequences when missing. No validity check.
    pub fn from_processes(initial: Pid, procs: impl IntoIterator<Item = (Pid, Vec<Action>)>) -> Trace {
        let mut t = Trace { initial, procs: procs.into_iter().collect() };
        t.fill_spawned();
        t
    }

    fn fill_spawned(&mut self) {
        self.procs.entry(self.initial.clone()).or_default();
        let spawned: Vec<Pid> = self
            .procs
            .values()
            .flatten()
            .filter_map(|a| match a {
                Action::Spawn(q) => Some(q.clone()),
                _ => None,
            })
            .collect();
        for q in spawned {
            self.procs.entry(q).or_default();
        }
    }

    pub fn initial(&self) -> &Pid {
        &self.initial
    }

    pub fn processes(&self) -> &BTreeMap<Pid, Vec<Action>> {
        &self.procs
    }

    pub fn pids(&self) -> impl Iterator<Item = &Pid> {
        self.procs.keys()
    }

    pub fn contains_pid(&self, p: &Pid) -> bool {
        self.procs.contains_key(p)
    }

    /// `τ(p)`; empty for unknown pids.
    pub fn actions(&self, p: &Pid) -> &[Action] {
        self.procs.get(p).map_or(&[], Vec::as_slice)
    }

    pub fn get(&self, e: &EventId) -> Option<&Action> {
        self.procs.get(&e.pid)?.get(e.index)
    }

    /// All events, in pid order and then position order.
    pub fn events(&self) -> impl Iterator<Item = (EventId, &Action)> {
        self.procs.iter().flat_map(|(p, acts)| {
            acts.iter()
                .enumerate()
                .map(move |(i, a)| (EventId::new(p.clone(), i), a))
        })
    }

    /// Number of events.
    pub fn len(&self) -> usize {
        self.procs.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `τ[p ↦ A]`.
    pub fn set(&mut self, p: Pid, actions: Vec<Action>) {
        self.procs.insert(p, actions);
        self.fill_spawned();
    }

    pub fn remove(&mut self, p: &Pid) -> Option<Vec<Action>> {
        if p == &self.initial {
            return self.procs.get_mut(p).map(std::mem::take);
        }
        self.procs.remove(p)
    }

    pub(crate) fn procs_mut(&mut self) -> &mut BTreeMap<Pid, Vec<Action>> {
        &mut self.procs
    }

    /// Locates the send of `tag`.
    pub fn find_send(&self, tag: &Tag) -> Option<(EventId, &Term, &Pid)> {
        self.events().find_map(|(id, a)| match a {
            Action::Send { tag: t, value, target } if t == tag => Some((id, value, target)),
            _ => None,
        })
    }

    /// Locates the receive of `tag`.
    pub fn find_rec(&self, tag: &Tag) -> Option<(EventId, &Arc<Constraint>)> {
        self.events().find_map(|(id, a)| match a {
            Action::Rec { tag: t, cs } if t == tag => Some((id, cs)),
            _ => None,
        })
    }

    /// Distinct constraints referenced by receive events, sorted by id.
    pub fn constraints(&self) -> Vec<Arc<Constraint>> {
        let mut by_id: BTreeMap<String, Arc<Constraint>> = BTreeMap::new();
        for (_, a) in self.events() {
            if let Action::Rec { cs, .. } = a {
                by_id.entry(cs.id.clone()).or_insert_with(|| cs.clone());
            }
        }
        let mut v: Vec<_> = by_id.into_values().collect();
        v.sort_by(|a, b| crate::ident::natural_cmp(&a.id, &b.id));
        v
    }

    pub fn map_names(&self, names: &dyn NameMap) -> Trace {
        Trace {
            initial: names.pid(&self.initial),
            procs: self
                .procs
                .iter()
                .map(|(p, acts)| (names.pid(p), acts.iter().map(|a| a.map_names(names)).collect()))
                .collect(),
        }
    }

    /// Canonical text form; see [`serialize_trace`].
    pub fn to_text(&self) -> String {
        serialize_trace(self)
    }
}

/// `tr(S)`: projects a valid interleaving onto its per-process sequences.
pub fn tr(s: &Interleaving) -> Result<Trace, ModelError> {
    validate_interleaving(s).map_err(ModelError::InvalidInterleaving)?;
    Ok(project(s))
}

/// `tr` without the validity check.
pub fn project(s: &Interleaving) -> Trace {
    let mut procs: BTreeMap<Pid, Vec<Action>> = BTreeMap::new();
    procs.insert(s.initial.clone(), Vec::new());
    for e in &s.events {
        if let Action::Spawn(q) = &e.action {
            procs.entry(q.clone()).or_default();
        }
        procs.entry(e.pid.clone()).or_default().push(e.action.clone());
    }
    Trace { initial: s.initial.clone(), procs }
}

/// `t1 ≪ t2`: every sequence of `t1` is a prefix of the corresponding
/// sequence of `t2`.
pub fn is_subtrace(t1: &Trace, t2: &Trace) -> Result<bool, ModelError> {
    if t1.initial != t2.initial {
        return Err(ModelError::InitialMismatch(t1.initial.clone(), t2.initial.clone()));
    }
    Ok(t1.procs.iter().all(|(p, a1)| match t2.procs.get(p) {
        Some(a2) => a2.starts_with(a1),
        None => false,
    }))
}

/// `S ∈ sched(t)`.
pub fn in_sched(s: &Interleaving, t: &Trace) -> bool {
    s.initial == t.initial && validate_interleaving(s).is_ok() && project(s) == *t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tr_of_single_spawn() {
        let s = Interleaving::new(
            Pid::new("p1"),
            vec![Event::new(Pid::new("p1"), Action::Spawn(Pid::new("p2")))],
        );
        let t = tr(&s).unwrap();
        assert_eq!(t.actions(&Pid::new("p1")), &[Action::Spawn(Pid::new("p2"))]);
        assert!(t.contains_pid(&Pid::new("p2")));
        assert!(t.actions(&Pid::new("p2")).is_empty());
    }

    #[test]
    fn actions_of_absent_pid_is_empty() {
        let s = Interleaving::new(Pid::new("p1"), vec![]);
        assert!(actions(&Pid::new("p7"), &s).is_empty());
    }

    #[test]
    fn subtrace_rejects_initial_mismatch() {
        let a = Trace::new(Pid::new("p1"));
        let b = Trace::new(Pid::new("q1"));
        assert!(matches!(is_subtrace(&a, &b), Err(ModelError::InitialMismatch(..))));
    }
}
