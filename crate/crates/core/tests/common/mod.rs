#![allow(dead_code)]

use std::path::PathBuf;

use racetrace_core::model::{parse_interleaving, parse_trace};
use racetrace_core::{Interleaving, Tag, Trace};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn trace(name: &str) -> Trace {
    parse_trace(&read(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn itl(name: &str) -> Interleaving {
    parse_interleaving(&read(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn tag(s: &str) -> Tag {
    Tag::new(s)
}

pub fn tags(xs: &[&str]) -> std::collections::BTreeSet<Tag> {
    xs.iter().map(|x| Tag::new(x)).collect()
}

/// Every `.trace` fixture.
pub fn trace_fixtures() -> Vec<(String, Trace)> {
    let mut names: Vec<String> = std::fs::read_dir(fixture_path(""))
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".trace"))
        .collect();
    names.sort();
    names.into_iter().map(|n| {
        let t = trace(&n);
        (n, t)
    }).collect()
}

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use racetrace_core::model::project;
use racetrace_core::{Action, Constraint, Event, Pid, Term};

/// The four validity conditions of an interleaving, checked directly on
/// the sequence. Condition 3 reads the mailbox across senders: when a
/// receive takes a message, no older message to the same process that its
/// constraint accepts may still be unconsumed.
pub fn naive_valid(initial: &Pid, events: &[Event]) -> bool {
    let mut spawned: HashSet<&Pid> = HashSet::new();
    let mut tags = HashSet::new();
    for (j, e) in events.iter().enumerate() {
        let before = &events[..j];
        if e.pid != *initial && !before.iter().any(|b| b.pid != e.pid && b.action == Action::Spawn(e.pid.clone())) {
            return false;
        }
        match &e.action {
            Action::Spawn(q) => {
                if q == initial || !spawned.insert(q) {
                    return false;
                }
            }
            Action::Send { tag, .. } => {
                if !tags.insert(tag.clone()) {
                    return false;
                }
            }
            Action::Rec { tag, cs } => {
                let send = before.iter().position(|b| {
                    matches!(&b.action, Action::Send { tag: t, value, target }
                        if t == tag && *target == e.pid && cs.matches(value))
                });
                let Some(k) = send else { return false };
                if before.iter().any(|b| matches!(&b.action, Action::Rec { tag: t, .. } if t == tag && b.pid == e.pid)) {
                    return false;
                }
                for older in &before[..k] {
                    let Action::Send { tag: t2, value, target } = &older.action else { continue };
                    if *target != e.pid || !cs.matches(value) {
                        continue;
                    }
                    let consumed = before.iter().any(|b| b.pid == e.pid && matches!(&b.action, Action::Rec { tag: t, .. } if t == t2));
                    if !consumed {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// All orders of the events of `t` that keep each process's actions in
/// sequence and satisfy [`naive_valid`], up to `cap` of them.
pub fn brute_sched(t: &Trace, cap: usize) -> Vec<Vec<Event>> {
    fn go(
        t: &Trace,
        pos: &mut BTreeMap<Pid, usize>,
        path: &mut Vec<Event>,
        out: &mut Vec<Vec<Event>>,
        total: usize,
        cap: usize,
    ) {
        if out.len() >= cap {
            return;
        }
        if path.len() == total {
            out.push(path.clone());
            return;
        }
        let pids: Vec<Pid> = pos.keys().cloned().collect();
        for p in pids {
            let i = pos[&p];
            let Some(a) = t.actions(&p).get(i) else { continue };
            path.push(Event::new(p.clone(), a.clone()));
            if naive_valid(t.initial(), path) {
                *pos.get_mut(&p).unwrap() += 1;
                go(t, pos, path, out, total, cap);
                *pos.get_mut(&p).unwrap() -= 1;
            }
            path.pop();
        }
    }
    let mut pos: BTreeMap<Pid, usize> = t.pids().map(|p| (p.clone(), 0)).collect();
    let mut out = Vec::new();
    go(t, &mut pos, &mut Vec::new(), &mut out, t.len(), cap);
    out
}

/// Whether `t` has at least one linearization, by brute force.
pub fn brute_is_trace(t: &Trace) -> bool {
    let s = brute_sched(t, 1);
    !s.is_empty() && project(&Interleaving::new(t.initial().clone(), s[0].clone())) == *t
}

pub const VALUES: [&str; 4] = ["a", "b", "{v,0}", "{v,1}"];
pub const CONSTRAINTS: [&str; 4] =
    ["cs1: a -> .", "cs2: {v,N} when N > 0 -> .", "cs3: {v,N} -> .; b -> .", "cs4: X -> ."];

/// Builds a valid interleaving from a stream of choices. Each choice
/// `(who, what, arg)` lets a process spawn (at most `max_procs` processes
/// in total), send one of [`VALUES`] to some process, or receive with one
/// of [`CONSTRAINTS`] if a message matches; choices that cannot fire are
/// skipped.
pub fn gen_interleaving(choices: &[(u8, u8, u8)], max_procs: usize) -> Interleaving {
    let constraints: Vec<Arc<Constraint>> =
        CONSTRAINTS.iter().map(|c| Arc::new(Constraint::parse(c).unwrap())).collect();
    let values: Vec<Term> = VALUES.iter().map(|v| v.parse::<Term>().unwrap()).collect();
    let root = Pid::root();
    let mut procs = vec![root.clone()];
    let mut spawns: BTreeMap<Pid, usize> = BTreeMap::new();
    let mut sends: BTreeMap<Pid, usize> = BTreeMap::new();
    let mut mailbox: BTreeMap<Pid, Vec<(Tag, Term)>> = BTreeMap::new();
    let mut events = Vec::new();
    for &(who, what, arg) in choices {
        let p = procs[who as usize % procs.len()].clone();
        let arg = arg as usize;
        match what % 3 {
            0 => {
                if procs.len() >= max_procs {
                    continue;
                }
                let k = spawns.entry(p.clone()).or_default();
                *k += 1;
                let q = p.child(*k);
                procs.push(q.clone());
                events.push(Event::new(p, Action::Spawn(q)));
            }
            1 => {
                let target = procs[arg % procs.len()].clone();
                let value = values[(arg / 8) % values.len()].clone();
                let k = sends.entry(p.clone()).or_default();
                *k += 1;
                let tag = p.message(*k);
                mailbox.entry(target.clone()).or_default().push((tag.clone(), value.clone()));
                events.push(Event::new(p, Action::send(tag, value, target)));
            }
            _ => {
                let cs = &constraints[arg % constraints.len()];
                let mbox = mailbox.entry(p.clone()).or_default();
                let Some(i) = mbox.iter().position(|(_, v)| cs.matches(v)) else { continue };
                let (tag, _) = mbox.remove(i);
                events.push(Event::new(p, Action::rec(tag, cs.clone())));
            }
        }
    }
    Interleaving::new(root, events)
}
