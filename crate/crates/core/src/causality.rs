//! Happened-before, linearizations and causal equivalence.
//!
//! The graph holds one node per event. Happened-before edges are program
//! order, spawn to the child's first event, and send to the matching
//! receive. Alongside them the graph keeps *mailbox edges*: a receive of
//! `l` by `q` that skips a matching, still unconsumed message `l''` forces
//! `send(l)` to precede `send(l'')`. Mailbox edges are not part of
//! happened-before, but every linearization must respect them.
//!
//! Reachability is answered by forward search per query.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::ident::{Pid, Tag};
use crate::model::{
    project, validate_interleaving, validate_trace, Action, Event, Interleaving, Trace,
    TraceViolation,
};

/// Position of an action in its process's sequence (0-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId {
    pub pid: Pid,
    pub index: usize,
}

impl EventId {
    pub fn new(pid: Pid, index: usize) -> EventId {
        EventId { pid, index }
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.pid, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Program,
    Spawn,
    Message(Tag),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub from: EventId,
    pub to: EventId,
    pub kind: EdgeKind,
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.from, self.to)?;
        match &self.kind {
            EdgeKind::Program => write!(f, " (program)"),
            EdgeKind::Spawn => write!(f, " (spawn)"),
            EdgeKind::Message(t) => write!(f, " (message {t})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CausalityError {
    #[error("trace is not valid: {0}")]
    InvalidTrace(TraceViolation),
    #[error("no event {0} in trace")]
    UnknownEvent(EventId),
}

/// A mailbox-order constraint: `from` must precede `to` because of the
/// receive `cause`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct MailboxEdge {
    pub from: usize,
    pub to: usize,
    pub cause: usize,
}

#[derive(Debug, Clone)]
pub struct HbGraph {
    ids: Vec<EventId>,
    index: HashMap<EventId, usize>,
    starts: HashMap<Pid, usize>,
    succ: Vec<Vec<(usize, EdgeKind)>>,
    pred: Vec<Vec<usize>>,
    mailbox: Vec<MailboxEdge>,
    mbox_succ: Vec<Vec<(usize, usize)>>,
    mbox_pred: Vec<Vec<usize>>,
}

/// Builds the happened-before graph of a valid trace.
pub fn hb_graph(t: &Trace) -> Result<HbGraph, CausalityError> {
    validate_trace(t).map_err(CausalityError::InvalidTrace)?;
    Ok(HbGraph::build(t))
}

impl HbGraph {
    /// Builds the graph without validating. Tag uniqueness is assumed; a
    /// receive without a send to its process simply gets no message edge.
    pub(crate) fn build(t: &Trace) -> HbGraph {
        let mut ids = Vec::with_capacity(t.len());
        let mut index = HashMap::new();
        let mut starts = HashMap::new();
        for (p, acts) in t.processes() {
            starts.insert(p.clone(), ids.len());
            for i in 0..acts.len() {
                let id = EventId::new(p.clone(), i);
                index.insert(id.clone(), ids.len());
                ids.push(id);
            }
        }
        let n = ids.len();
        let mut g = HbGraph {
            ids,
            index,
            starts,
            succ: vec![Vec::new(); n],
            pred: vec![Vec::new(); n],
            mailbox: Vec::new(),
            mbox_succ: vec![Vec::new(); n],
            mbox_pred: vec![Vec::new(); n],
        };

        let mut send_of: HashMap<&Tag, usize> = HashMap::new();
        let mut rec_of: HashMap<&Tag, usize> = HashMap::new();
        let mut sends_to: HashMap<&Pid, Vec<usize>> = HashMap::new();
        for (node, (_, a)) in t.events().enumerate() {
            match a {
                Action::Send { tag, target, .. } => {
                    send_of.entry(tag).or_insert(node);
                    sends_to.entry(target).or_default().push(node);
                }
                Action::Rec { tag, .. } => {
                    rec_of.entry(tag).or_insert(node);
                }
                Action::Spawn(_) => {}
            }
        }

        for (node, (id, a)) in t.events().enumerate() {
            if id.index + 1 < t.actions(&id.pid).len() {
                g.add(node, node + 1, EdgeKind::Program);
            }
            match a {
                Action::Spawn(q) => {
                    if !t.actions(q).is_empty() && q != &id.pid {
                        let first = g.starts[q];
                        g.add(node, first, EdgeKind::Spawn);
                    }
                }
                Action::Rec { tag, .. } => {
                    if let Some(&s) = send_of.get(tag) {
                        g.add(s, node, EdgeKind::Message(tag.clone()));
                    }
                }
                Action::Send { .. } => {}
            }
        }

        for (node, (id, a)) in t.events().enumerate() {
            let Action::Rec { tag, cs } = a else { continue };
            let Some(&sx) = send_of.get(tag) else { continue };
            for &sy in sends_to.get(&id.pid).map_or(&[][..], Vec::as_slice) {
                if sy == sx {
                    continue;
                }
                let Some(Action::Send { tag: ty, value, .. }) = t.get(&g.ids[sy]) else {
                    continue;
                };
                let consumed_before = rec_of
                    .get(ty)
                    .is_some_and(|&r| g.ids[r].pid == id.pid && g.ids[r].index < id.index);
                if !consumed_before && cs.matches(value) {
                    g.mailbox.push(MailboxEdge { from: sx, to: sy, cause: node });
                    g.mbox_succ[sx].push((sy, node));
                    g.mbox_pred[sy].push(sx);
                }
            }
        }
        g
    }

    fn add(&mut self, from: usize, to: usize, kind: EdgeKind) {
        self.succ[from].push((to, kind));
        self.pred[to].push(from);
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn node(&self, e: &EventId) -> Option<usize> {
        self.index.get(e).copied()
    }

    pub fn id(&self, node: usize) -> &EventId {
        &self.ids[node]
    }

    pub fn ids(&self) -> &[EventId] {
        &self.ids
    }

    fn lookup(&self, e: &EventId) -> Result<usize, CausalityError> {
        self.node(e).ok_or_else(|| CausalityError::UnknownEvent(e.clone()))
    }

    /// `a ⇝ b`.
    pub fn happens_before(&self, a: &EventId, b: &EventId) -> Result<bool, CausalityError> {
        let (a, b) = (self.lookup(a)?, self.lookup(b)?);
        Ok(self.reach(a, b))
    }

    /// Neither event happens before the other.
    pub fn independent(&self, a: &EventId, b: &EventId) -> Result<bool, CausalityError> {
        let (x, y) = (self.lookup(a)?, self.lookup(b)?);
        Ok(x != y && !self.reach(x, y) && !self.reach(y, x))
    }

    pub(crate) fn reach(&self, from: usize, to: usize) -> bool {
        self.path_nodes(from, to, None, false).is_some()
    }

    /// Shortest happened-before path from `a` to `b`, both ends included.
    pub fn path(&self, a: &EventId, b: &EventId) -> Option<Vec<EventId>> {
        let (x, y) = (self.node(a)?, self.node(b)?);
        self.path_nodes(x, y, None, false)
            .map(|p| p.into_iter().map(|n| self.ids[n].clone()).collect())
    }

    /// Breadth-first search for a non-empty path. `mask` restricts the
    /// nodes that may be visited; `mailbox` also follows mailbox edges
    /// whose cause lies inside the mask.
    pub(crate) fn path_nodes(
        &self,
        from: usize,
        to: usize,
        mask: Option<&[bool]>,
        mailbox: bool,
    ) -> Option<Vec<usize>> {
        let inside = |n: usize| mask.map_or(true, |m| m[n]);
        let mut parent: Vec<Option<usize>> = vec![None; self.len()];
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            let hb = self.succ[n].iter().map(|&(m, _)| m);
            let mb = self.mbox_succ[n]
                .iter()
                .filter(|&&(_, cause)| mailbox && inside(cause))
                .map(|&(m, _)| m);
            for m in hb.chain(mb) {
                if seen[m] || !inside(m) {
                    continue;
                }
                seen[m] = true;
                parent[m] = Some(n);
                if m == to {
                    let mut path = vec![to];
                    let mut cur = to;
                    while let Some(p) = parent[cur] {
                        path.push(p);
                        if p == from {
                            break;
                        }
                        cur = p;
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(m);
            }
        }
        None
    }

    /// All happened-before edges, sorted.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = self
            .succ
            .iter()
            .enumerate()
            .flat_map(|(n, ss)| {
                ss.iter().map(move |(m, k)| Edge {
                    from: self.ids[n].clone(),
                    to: self.ids[*m].clone(),
                    kind: k.clone(),
                })
            })
            .collect();
        out.sort();
        out
    }

    /// The full relation `⇝` as sorted pairs.
    pub fn pairs(&self) -> Vec<(EventId, EventId)> {
        let mut out = Vec::new();
        for n in 0..self.len() {
            let mut seen = vec![false; self.len()];
            let mut stack = vec![n];
            while let Some(x) = stack.pop() {
                for &(m, _) in &self.succ[x] {
                    if !seen[m] {
                        seen[m] = true;
                        stack.push(m);
                    }
                }
            }
            for (m, s) in seen.into_iter().enumerate() {
                if s {
                    out.push((self.ids[n].clone(), self.ids[m].clone()));
                }
            }
        }
        out.sort();
        out
    }

    /// Marks the seeds and everything that happens before them.
    pub(crate) fn down_closure(&self, seeds: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(x) = stack.pop() {
            if !mask[x] {
                mask[x] = true;
                stack.extend(self.pred[x].iter().copied());
            }
        }
        mask
    }

    pub(crate) fn mailbox_edges(&self) -> &[MailboxEdge] {
        &self.mailbox
    }

    /// Kahn's algorithm, always taking the smallest ready node (smallest pid,
    /// then index). Returns the order, or the nodes left over on a cycle.
    pub(crate) fn topo_order(&self, mailbox: bool) -> Result<Vec<usize>, Vec<usize>> {
        let n = self.len();
        let mut indeg: Vec<usize> = (0..n)
            .map(|x| self.pred[x].len() + if mailbox { self.mbox_pred[x].len() } else { 0 })
            .collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&x| indeg[x] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(x) = ready.pop_first() {
            order.push(x);
            let hb = self.succ[x].iter().map(|&(m, _)| m);
            let mb = self.mbox_succ[x].iter().map(|&(m, _)| m).filter(|_| mailbox);
            for m in hb.chain(mb) {
                indeg[m] -= 1;
                if indeg[m] == 0 {
                    ready.insert(m);
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            let done: HashSet<usize> = order.into_iter().collect();
            Err((0..n).filter(|x| !done.contains(x)).collect())
        }
    }

    /// Direct predecessors under happened-before plus mailbox edges.
    fn all_preds(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.pred[x].iter().chain(&self.mbox_pred[x]).copied()
    }
}

fn to_interleaving(t: &Trace, g: &HbGraph, order: &[usize]) -> Interleaving {
    let events = order
        .iter()
        .map(|&n| {
            let id = g.id(n);
            Event::new(id.pid.clone(), t.get(id).expect("node in trace").clone())
        })
        .collect();
    Interleaving::new(t.initial().clone(), events)
}

/// A member of `sched(t)`, deterministic: among the events that may come
/// next, the one with the smallest pid is taken.
pub fn linearize(t: &Trace) -> Result<Interleaving, CausalityError> {
    let g = hb_graph(t)?;
    let order = g.topo_order(true).expect("valid traces have a linearization");
    Ok(to_interleaving(t, &g, &order))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Linearizations {
    pub items: Vec<Interleaving>,
    /// False if `cap` was reached before the enumeration finished.
    pub complete: bool,
}

/// All members of `sched(t)`, up to `cap`, in lexicographic order of the
/// event positions chosen.
pub fn enumerate_linearizations(t: &Trace, cap: usize) -> Result<Linearizations, CausalityError> {
    let g = hb_graph(t)?;
    let n = g.len();
    let mut indeg: Vec<usize> = (0..n).map(|x| g.all_preds(x).count()).collect();
    let mut out = Linearizations { items: Vec::new(), complete: true };
    let mut order = Vec::with_capacity(n);
    fn go(
        t: &Trace,
        g: &HbGraph,
        indeg: &mut Vec<usize>,
        order: &mut Vec<usize>,
        cap: usize,
        out: &mut Linearizations,
    ) {
        if !out.complete {
            return;
        }
        if order.len() == g.len() {
            if out.items.len() == cap {
                out.complete = false;
                return;
            }
            out.items.push(to_interleaving(t, g, order));
            return;
        }
        let placed: HashSet<usize> = order.iter().copied().collect();
        let ready: Vec<usize> = (0..g.len()).filter(|x| indeg[*x] == 0 && !placed.contains(x)).collect();
        for x in ready {
            let next: Vec<usize> = g.succ[x]
                .iter()
                .map(|&(m, _)| m)
                .chain(g.mbox_succ[x].iter().map(|&(m, _)| m))
                .collect();
            for &m in &next {
                indeg[m] -= 1;
            }
            order.push(x);
            go(t, g, indeg, order, cap, out);
            order.pop();
            for &m in &next {
                indeg[m] += 1;
            }
        }
    }
    go(t, &g, &mut indeg, &mut order, cap, &mut out);
    Ok(out)
}

/// `|sched(t)|`, counted by dynamic programming over per-process progress.
pub fn count_linearizations(t: &Trace) -> Result<u128, CausalityError> {
    let g = hb_graph(t)?;
    let pids: Vec<&Pid> = t.pids().collect();
    let lens: Vec<usize> = pids.iter().map(|p| t.actions(p).len()).collect();
    let slot: HashMap<&Pid, usize> = pids.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut memo: HashMap<Vec<usize>, u128> = HashMap::new();

    fn go(
        g: &HbGraph,
        pids: &[&Pid],
        lens: &[usize],
        slot: &HashMap<&Pid, usize>,
        state: &mut Vec<usize>,
        memo: &mut HashMap<Vec<usize>, u128>,
    ) -> u128 {
        if state.iter().zip(lens).all(|(a, b)| a == b) {
            return 1;
        }
        if let Some(&c) = memo.get(state.as_slice()) {
            return c;
        }
        let mut total = 0;
        for k in 0..pids.len() {
            if state[k] == lens[k] {
                continue;
            }
            let node = g.starts[pids[k]] + state[k];
            let ready = g.all_preds(node).all(|pr| {
                let id = g.id(pr);
                id.index < state[slot[&id.pid]]
            });
            if ready {
                state[k] += 1;
                total += go(g, pids, lens, slot, state, memo);
                state[k] -= 1;
            }
        }
        memo.insert(state.clone(), total);
        total
    }
    let mut state = vec![0; pids.len()];
    Ok(go(&g, &pids, &lens, &slot, &mut state, &mut memo))
}

/// `S1 ≈ S2`, decided by equal initial pid, equal events and equal
/// projections.
pub fn causally_equivalent(s1: &Interleaving, s2: &Interleaving) -> bool {
    if s1.initial != s2.initial || s1.len() != s2.len() {
        return false;
    }
    let mut a = s1.events.clone();
    let mut b = s2.events.clone();
    a.sort();
    b.sort();
    a == b && project(s1) == project(s2)
}

/// Whether two consecutive events of an interleaving are causally related.
pub fn directly_dependent(a: &Event, b: &Event) -> bool {
    if a.pid == b.pid {
        return true;
    }
    let spawns = |x: &Event, y: &Event| matches!(&x.action, Action::Spawn(q) if q == &y.pid);
    let message = match (&a.action, &b.action) {
        (Action::Send { tag: x, .. }, Action::Rec { tag: y, .. })
        | (Action::Rec { tag: x, .. }, Action::Send { tag: y, .. }) => x == y,
        _ => false,
    };
    spawns(a, b) || spawns(b, a) || message
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapOutcome {
    Reached { swaps: usize },
    Unreachable,
    BudgetExhausted,
}

/// Breadth-first search from `s1` to `s2` through swaps of consecutive
/// independent events, keeping only valid interleavings. `budget` bounds
/// the number of distinct sequences visited.
pub fn swap_equiv_oracle(s1: &Interleaving, s2: &Interleaving, budget: usize) -> SwapOutcome {
    if s1.initial != s2.initial || s1.len() != s2.len() {
        return SwapOutcome::Unreachable;
    }
    if s1 == s2 {
        return SwapOutcome::Reached { swaps: 0 };
    }
    let mut seen: HashSet<Vec<Event>> = HashSet::from([s1.events.clone()]);
    let mut queue = VecDeque::from([(s1.events.clone(), 0usize)]);
    while let Some((seq, depth)) = queue.pop_front() {
        for i in 0..seq.len().saturating_sub(1) {
            if directly_dependent(&seq[i], &seq[i + 1]) {
                continue;
            }
            let mut next = seq.clone();
            next.swap(i, i + 1);
            if seen.contains(&next) {
                continue;
            }
            let cand = Interleaving::new(s1.initial.clone(), next);
            if validate_interleaving(&cand).is_err() {
                continue;
            }
            if cand.events == s2.events {
                return SwapOutcome::Reached { swaps: depth + 1 };
            }
            if seen.len() >= budget {
                return SwapOutcome::BudgetExhausted;
            }
            seen.insert(cand.events.clone());
            queue.push_back((cand.events, depth + 1));
        }
    }
    SwapOutcome::Unreachable
}
