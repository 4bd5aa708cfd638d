//! Validity of interleavings and traces.
//!
//! Message consumption follows mailbox order: when `q` receives `l`, every
//! message sent to `q` before `l` (by any process) that also matches the
//! receive's constraint must already have been consumed by `q`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use super::{Action, Interleaving, Trace};
use crate::causality::{EventId, HbGraph};
use crate::ident::{Pid, Tag};
use crate::terms::Term;

/// The four interleaving validity conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    /// Every acting pid is the initial one or was spawned earlier.
    Spawned = 1,
    /// Every receive consumes an earlier send to the receiver whose value
    /// matches the constraint.
    Received = 2,
    /// Receives take the oldest matching message.
    MailboxOrder = 3,
    /// Spawned pids and message tags are fresh.
    Fresh = 4,
}

impl Condition {
    pub fn number(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("condition {} violated at event {index}: {message}", condition.number())]
pub struct Violation {
    pub condition: Condition,
    pub index: usize,
    pub message: String,
}

/// Checks an interleaving, reporting the first offending event.
pub fn validate_interleaving(s: &Interleaving) -> Result<(), Violation> {
    let mut alive: HashSet<&Pid> = HashSet::from([&s.initial]);
    let mut sends: HashMap<&Tag, (&Term, &Pid, usize)> = HashMap::new();
    let mut received: HashSet<&Tag> = HashSet::new();
    let mut mailbox: HashMap<&Pid, Vec<(&Tag, &Term)>> = HashMap::new();
    for (index, e) in s.events.iter().enumerate() {
        let fail = |condition, message: String| Err(Violation { condition, index, message });
        if !alive.contains(&e.pid) {
            return fail(Condition::Spawned, format!("{} acts before being spawned", e.pid));
        }
        match &e.action {
            Action::Spawn(q) => {
                if !alive.insert(q) {
                    return fail(Condition::Fresh, format!("pid {q} is not fresh"));
                }
            }
            Action::Send { tag, value, target } => {
                if sends.contains_key(tag) {
                    return fail(Condition::Fresh, format!("tag {tag} is sent twice"));
                }
                let pos = mailbox.get(target).map_or(0, Vec::len);
                sends.insert(tag, (value, target, pos));
                mailbox.entry(target).or_default().push((tag, value));
            }
            Action::Rec { tag, cs } => {
                if received.contains(tag) {
                    return fail(Condition::Fresh, format!("tag {tag} is received twice"));
                }
                let Some(&(value, target, pos)) = sends.get(tag) else {
                    return fail(Condition::Received, format!("{tag} is received before it is sent"));
                };
                if target != &e.pid {
                    return fail(
                        Condition::Received,
                        format!("{tag} was sent to {target}, not to {}", e.pid),
                    );
                }
                if !cs.matches(value) {
                    return fail(
                        Condition::Received,
                        format!("value {value} of {tag} does not match {}", cs.id),
                    );
                }
                let older = &mailbox[target][..pos];
                if let Some((t, _)) =
                    older.iter().find(|(t, v)| !received.contains(t) && cs.matches(v))
                {
                    return fail(
                        Condition::MailboxOrder,
                        format!("{} receives {tag} although the older message {t} also matches {}", e.pid, cs.id),
                    );
                }
                received.insert(tag);
            }
        }
    }
    Ok(())
}

/// The trace validity conditions, checked in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TraceCondition {
    /// (a) pids and tags are unique and every non-initial pid is spawned
    /// exactly once.
    Structure,
    /// (b) every receive has a send to the receiver whose value matches.
    Received,
    /// (c) receives respect mailbox order.
    MailboxOrder,
    /// (d) happened-before is acyclic.
    Acyclic,
}

impl TraceCondition {
    pub fn letter(self) -> char {
        match self {
            TraceCondition::Structure => 'a',
            TraceCondition::Received => 'b',
            TraceCondition::MailboxOrder => 'c',
            TraceCondition::Acyclic => 'd',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct TraceViolation {
    pub condition: TraceCondition,
    pub at: Option<EventId>,
    pub message: String,
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "condition ({})", self.condition.letter())?;
        if let Some(at) = &self.at {
            write!(f, " at {at}")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Checks that `t` is the projection of some valid interleaving.
pub fn validate_trace(t: &Trace) -> Result<(), TraceViolation> {
    check_structure(t)?;
    check_receives(t)?;
    check_order(t)
}

fn violation(condition: TraceCondition, at: Option<EventId>, message: String) -> TraceViolation {
    TraceViolation { condition, at, message }
}

fn check_structure(t: &Trace) -> Result<(), TraceViolation> {
    let structure = |at, msg| Err(violation(TraceCondition::Structure, at, msg));
    let mut spawned: HashMap<&Pid, EventId> = HashMap::new();
    let mut sent: HashSet<&Tag> = HashSet::new();
    let mut recd: HashSet<&Tag> = HashSet::new();
    for (id, a) in t.events() {
        match a {
            Action::Spawn(q) => {
                if q == t.initial() {
                    return structure(Some(id), format!("the initial pid {q} is spawned"));
                }
                if q == &id.pid {
                    return structure(Some(id), format!("{q} spawns itself"));
                }
                if let Some(prev) = spawned.get(q) {
                    return structure(Some(id), format!("{q} is already spawned at {prev}"));
                }
                spawned.insert(q, id);
            }
            Action::Send { tag, .. } => {
                if !sent.insert(tag) {
                    return structure(Some(id), format!("tag {tag} is sent twice"));
                }
            }
            Action::Rec { tag, .. } => {
                if !recd.insert(tag) {
                    return structure(Some(id), format!("tag {tag} is received twice"));
                }
            }
        }
    }
    for p in t.pids() {
        if p != t.initial() && !spawned.contains_key(p) {
            return structure(None, format!("{p} is never spawned"));
        }
    }
    Ok(())
}

fn check_receives(t: &Trace) -> Result<(), TraceViolation> {
    for (id, a) in t.events() {
        let Action::Rec { tag, cs } = a else { continue };
        let fail = |msg| Err(violation(TraceCondition::Received, Some(id.clone()), msg));
        match t.find_send(tag) {
            None => return fail(format!("{tag} is received but never sent")),
            Some((_, _, target)) if target != &id.pid => {
                return fail(format!("{tag} was sent to {target}, not to {}", id.pid))
            }
            Some((_, value, _)) if !cs.matches(value) => {
                return fail(format!("value {value} of {tag} does not match {}", cs.id))
            }
            Some(_) => {}
        }
    }
    Ok(())
}

fn check_order(t: &Trace) -> Result<(), TraceViolation> {
    let g = HbGraph::build(t);
    if let Err(left) = g.topo_order(false) {
        let on_cycle = left
            .iter()
            .copied()
            .find(|&n| g.path_nodes(n, n, None, false).is_some())
            .expect("a leftover node lies on a cycle");
        return Err(violation(
            TraceCondition::Acyclic,
            Some(g.id(on_cycle).clone()),
            "the event happens before itself".to_string(),
        ));
    }
    if g.topo_order(true).is_ok() {
        return Ok(());
    }
    for e in g.mailbox_edges() {
        if g.path_nodes(e.to, e.from, None, true).is_some() {
            let rec = g.id(e.cause).clone();
            let tag = |n| t.get(g.id(n)).and_then(|a| a.tag()).expect("send node").clone();
            let (x, y) = (tag(e.from), tag(e.to));
            return Err(violation(
                TraceCondition::MailboxOrder,
                Some(rec),
                format!("receiving {x} requires it to be older than {y}, but {y} must be sent first"),
            ));
        }
    }
    unreachable!("a mailbox cycle runs through some mailbox edge")
}
