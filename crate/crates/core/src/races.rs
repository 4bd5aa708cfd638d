//! Message races, race variants and orphan messages.
//!
//! For a receive `p[i] = rec(l, cs)`, a message `l'` sent to `p` races with
//! `l` when some causally consistent prefix that stops `p` just before the
//! receive can let `p` consume `l'` instead. [`race_set`] decides this
//! constructively; [`declarative_race_oracle`] decides it by searching all
//! subtraces and exists for cross-checking.
//!
//! The constructive check looks at each candidate in turn:
//!
//! 1. the receive must not happen before the send of `l'`;
//! 2. the value of `l'` must match `cs`;
//! 3. `p` must not have consumed `l'` before position `i`;
//! 4. in the smallest prefix containing `p[..i]` and the send of `l'`, no
//!    other matching unconsumed message for `p` may be forced to be older
//!    than `l'`. Such a message would be taken first. `l` itself counts,
//!    so a later message from the sender of `l` never races with `l`.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::causality::{CausalityError, EventId, HbGraph};
use crate::ident::{Pid, Tag};
use crate::model::{validate_trace, Action, Trace, TraceViolation};
use crate::terms::{Constraint, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Races,
    /// The receive happens before the send; `witness` is the path through
    /// the events where it changes process.
    HappensAfterReceive { witness: Vec<EventId> },
    NoMatch,
    AlreadyConsumed { at: EventId },
    /// An older matching message `by` would be consumed first.
    Blocked { by: Tag },
}

impl Verdict {
    pub fn races(&self) -> bool {
        matches!(self, Verdict::Races)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Races => write!(f, "races"),
            Verdict::HappensAfterReceive { witness } => {
                let path: Vec<String> = witness.iter().map(ToString::to_string).collect();
                write!(f, "excluded: the receive happens before the send ({})", path.join(" -> "))
            }
            Verdict::NoMatch => write!(f, "excluded: value does not match the constraint"),
            Verdict::AlreadyConsumed { at } => write!(f, "excluded: already received at {at}"),
            Verdict::Blocked { by } => {
                write!(f, "excluded: the older matching message {by} would be received first")
            }
        }
    }
}

/// The checks applied to one message sent to the receiving process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateCheck {
    pub tag: Tag,
    pub send: EventId,
    pub value: Term,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaceReport {
    pub receive: EventId,
    pub subject: Tag,
    pub cs: Arc<Constraint>,
    pub racers: BTreeSet<Tag>,
    /// One entry per other message sent to the receiver, sorted by tag.
    pub candidates: Vec<CandidateCheck>,
}

impl RaceReport {
    pub fn candidate(&self, tag: &Tag) -> Option<&CandidateCheck> {
        self.candidates.iter().find(|c| &c.tag == tag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RaceError {
    #[error("trace is not valid: {0}")]
    InvalidTrace(TraceViolation),
    #[error("no receive event for tag {0}")]
    NoReceive(Tag),
    #[error("{candidate} does not race with {subject}: {reason}")]
    NotARacer { subject: Tag, candidate: Tag, reason: String },
    #[error("variant is not a valid trace: {0}")]
    InvalidVariant(TraceViolation),
}

impl From<CausalityError> for RaceError {
    fn from(e: CausalityError) -> Self {
        match e {
            CausalityError::InvalidTrace(v) => RaceError::InvalidTrace(v),
            CausalityError::UnknownEvent(id) => unreachable!("event {id} taken from the trace"),
        }
    }
}

/// Keeps the first and last nodes of a path and the endpoints of each edge
/// that crosses processes.
fn compress(path: &[EventId]) -> Vec<EventId> {
    let mut out: Vec<EventId> = Vec::new();
    let mut push = |e: &EventId| {
        if out.last() != Some(e) {
            out.push(e.clone());
        }
    };
    if let Some(first) = path.first() {
        push(first);
    }
    for w in path.windows(2) {
        if w[0].pid != w[1].pid {
            push(&w[0]);
            push(&w[1]);
        }
    }
    if let Some(last) = path.last() {
        push(last);
    }
    out
}

fn report(t: &Trace, g: &HbGraph, rec: &EventId) -> RaceReport {
    let Some(Action::Rec { tag: subject, cs }) = t.get(rec) else {
        unreachable!("caller passes a receive event")
    };
    let p = &rec.pid;
    let r = g.node(rec).expect("receive in graph");
    let mut sends: Vec<(EventId, &Tag, &Term)> = t
        .events()
        .filter_map(|(id, a)| match a {
            Action::Send { tag, value, target } if target == p => Some((id, tag, value)),
            _ => None,
        })
        .collect();
    sends.sort_by(|a, b| a.1.cmp(b.1));
    let consumed_before: BTreeMap<&Tag, EventId> = t.actions(p)[..rec.index]
        .iter()
        .enumerate()
        .filter_map(|(k, a)| match a {
            Action::Rec { tag, .. } => Some((tag, EventId::new(p.clone(), k))),
            _ => None,
        })
        .collect();
    let prefix_nodes: Vec<usize> = (0..rec.index)
        .map(|k| g.node(&EventId::new(p.clone(), k)).expect("event in graph"))
        .collect();

    let mut candidates = Vec::new();
    for (send, tag, value) in &sends {
        if *tag == subject {
            continue;
        }
        let s = g.node(send).expect("send in graph");
        let verdict = if let Some(path) = g.path_nodes(r, s, None, false) {
            let ids: Vec<EventId> = path.iter().map(|&n| g.id(n).clone()).collect();
            Verdict::HappensAfterReceive { witness: compress(&ids) }
        } else if !cs.matches(value) {
            Verdict::NoMatch
        } else if let Some(at) = consumed_before.get(tag) {
            Verdict::AlreadyConsumed { at: at.clone() }
        } else {
            let mask = g.down_closure(prefix_nodes.iter().copied().chain([s]));
            let blocker = sends.iter().find(|(other, otag, ovalue)| {
                let o = g.node(other).expect("send in graph");
                *otag != *tag
                    && mask[o]
                    && cs.matches(ovalue)
                    && !consumed_before.contains_key(otag)
                    && g.path_nodes(o, s, Some(&mask), true).is_some()
            });
            match blocker {
                Some((_, by, _)) => Verdict::Blocked { by: (*by).clone() },
                None => Verdict::Races,
            }
        };
        candidates.push(CandidateCheck {
            tag: (*tag).clone(),
            send: send.clone(),
            value: (*value).clone(),
            verdict,
        });
    }
    RaceReport {
        receive: rec.clone(),
        subject: subject.clone(),
        cs: cs.clone(),
        racers: candidates.iter().filter(|c| c.verdict.races()).map(|c| c.tag.clone()).collect(),
        candidates,
    }
}

/// `race_set_t(l)` with a justification per candidate.
pub fn race_set(t: &Trace, l: &Tag) -> Result<RaceReport, RaceError> {
    let g = crate::causality::hb_graph(t)?;
    let (rec, _) = t.find_rec(l).ok_or_else(|| RaceError::NoReceive(l.clone()))?;
    Ok(report(t, &g, &rec))
}

/// One report per receive event, in pid order and then position order.
pub fn all_races(t: &Trace) -> Result<Vec<RaceReport>, RaceError> {
    let g = crate::causality::hb_graph(t)?;
    Ok(t.events()
        .filter(|(_, a)| a.is_rec())
        .map(|(id, _)| report(t, &g, &id))
        .collect())
}

/// Decides whether `l2` races with `l` by trying every subtrace that stops
/// the receiver just before the receive of `l`.
pub fn declarative_race_oracle(t: &Trace, l: &Tag, l2: &Tag) -> bool {
    if l == l2 {
        return false;
    }
    let Some((rec, cs)) = t.find_rec(l) else { return false };
    let cs = cs.clone();
    let pids: Vec<&Pid> = t.pids().filter(|q| **q != rec.pid).collect();
    let spawner: BTreeMap<&Pid, EventId> = t
        .events()
        .filter_map(|(id, a)| match a {
            Action::Spawn(q) => Some((q, id)),
            _ => None,
        })
        .collect();
    let mut lens = vec![0usize; pids.len()];
    loop {
        if let Some(sub) = subtrace(t, &rec, &pids, &lens, &spawner) {
            if validate_trace(&sub).is_ok() {
                let mut alt = sub;
                let mut seq = t.actions(&rec.pid)[..rec.index].to_vec();
                seq.push(Action::rec(l2.clone(), cs.clone()));
                alt.set(rec.pid.clone(), seq);
                if validate_trace(&alt).is_ok() {
                    return true;
                }
            }
        }
        // Odometer over prefix lengths.
        let mut k = 0;
        loop {
            if k == pids.len() {
                return false;
            }
            if lens[k] < t.actions(pids[k]).len() {
                lens[k] += 1;
                break;
            }
            lens[k] = 0;
            k += 1;
        }
    }
}

fn subtrace(
    t: &Trace,
    rec: &EventId,
    pids: &[&Pid],
    lens: &[usize],
    spawner: &BTreeMap<&Pid, EventId>,
) -> Option<Trace> {
    let keep = |id: &EventId| {
        if id.pid == rec.pid {
            id.index < rec.index
        } else {
            let k = pids.iter().position(|q| **q == id.pid).expect("known pid");
            id.index < lens[k]
        }
    };
    let mut procs = Vec::new();
    for (k, q) in pids.iter().enumerate() {
        let spawned = *q == t.initial() || spawner.get(q).is_some_and(keep);
        if spawned {
            procs.push(((*q).clone(), t.actions(q)[..lens[k]].to_vec()));
        } else if lens[k] > 0 {
            return None;
        }
    }
    let p = &rec.pid;
    if p != t.initial() && !spawner.get(p).is_some_and(keep) {
        return None;
    }
    procs.push((p.clone(), t.actions(p)[..rec.index].to_vec()));
    Some(Trace::from_processes(t.initial().clone(), procs))
}

/// `variant_t(l, l')`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variant {
    pub trace: Trace,
    pub replaced_at: EventId,
    pub old_tag: Tag,
    pub new_tag: Tag,
}

/// Replaces the receive of `l` by a receive of the racer `l2` and erases
/// everything that depends on the original receive.
pub fn variant(t: &Trace, l: &Tag, l2: &Tag) -> Result<Variant, RaceError> {
    let rep = race_set(t, l)?;
    if !rep.racers.contains(l2) {
        let reason = match rep.candidate(l2) {
            Some(c) => c.verdict.to_string(),
            None if l2 == l => "a message cannot race with itself".to_string(),
            None => format!("{l2} is not sent to {}", rep.receive.pid),
        };
        return Err(RaceError::NotARacer { subject: l.clone(), candidate: l2.clone(), reason });
    }
    let at = rep.receive.clone();
    let mut out = t.clone();
    let seq = t.actions(&at.pid);
    let mut head = seq[..at.index].to_vec();
    head.push(Action::rec(l2.clone(), rep.cs.clone()));
    let rest = seq[at.index + 1..].to_vec();
    out.procs_mut().insert(at.pid.clone(), head);
    rdep(rest, &mut out);
    validate_trace(&out).map_err(RaceError::InvalidVariant)?;
    Ok(Variant { trace: out, replaced_at: at, old_tag: l.clone(), new_tag: l2.clone() })
}

/// Erases the actions in `work` and, transitively, everything that depends
/// on them, processing the worklist front to back.
fn rdep(work: Vec<Action>, t: &mut Trace) {
    let mut work: VecDeque<Action> = work.into();
    while let Some(a) = work.pop_front() {
        match a {
            Action::Rec { .. } => {}
            Action::Spawn(q) => {
                if let Some(seq) = t.procs_mut().remove(&q) {
                    work.extend(seq);
                }
            }
            Action::Send { tag, target, .. } => {
                let Some(seq) = t.procs_mut().get_mut(&target) else { continue };
                let pos = seq.iter().position(|b| matches!(b, Action::Rec { tag: x, .. } if *x == tag));
                if let Some(k) = pos {
                    let suffix = seq.split_off(k);
                    work.extend(suffix.into_iter().skip(1));
                }
            }
        }
    }
}

/// Tags that are sent but never received.
pub fn orphans(t: &Trace) -> BTreeSet<Tag> {
    let received: HashSet<&Tag> = t
        .events()
        .filter_map(|(_, a)| match a {
            Action::Rec { tag, .. } => Some(tag),
            _ => None,
        })
        .collect();
    t.events()
        .filter_map(|(_, a)| match a {
            Action::Send { tag, .. } if !received.contains(tag) => Some(tag.clone()),
            _ => None,
        })
        .collect()
}
