//! Canonical names.
//!
//! Pids are renamed along the spawn tree (the initial pid becomes `p1`, the
//! k-th child of `c` becomes `c.k`), tags by sender and position (`c#k`),
//! and constraints get ids `cs1, cs2, ...` by first use in pid order, with
//! structurally equal constraints sharing an id. Two traces that differ
//! only in the choice of fresh names then serialize identically.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use super::{Action, Trace};
use crate::ident::{Pid, Tag};
use crate::terms::{Constraint, NameMap};

/// A finite renaming of pids and tags; names outside its domain are kept.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Renaming {
    pids: HashMap<Pid, Pid>,
    tags: HashMap<Tag, Tag>,
}

impl NameMap for Renaming {
    fn pid(&self, pid: &Pid) -> Pid {
        self.pids.get(pid).cloned().unwrap_or_else(|| pid.clone())
    }

    fn tag(&self, tag: &Tag) -> Tag {
        self.tags.get(tag).cloned().unwrap_or_else(|| tag.clone())
    }
}

impl Renaming {
    /// The renaming that maps `t` to canonical names.
    pub fn canonical(t: &Trace) -> Renaming {
        let mut r = Renaming::default();
        let root = Pid::root();
        r.pids.insert(t.initial().clone(), root);
        let mut queue = VecDeque::from([t.initial().clone()]);
        while let Some(p) = queue.pop_front() {
            let c = r.pids[&p].clone();
            let (mut spawns, mut sends) = (0, 0);
            for a in t.actions(&p) {
                match a {
                    Action::Spawn(q) if !r.pids.contains_key(q) => {
                        spawns += 1;
                        r.pids.insert(q.clone(), c.child(spawns));
                        queue.push_back(q.clone());
                    }
                    Action::Spawn(_) => spawns += 1,
                    Action::Send { tag, .. } => {
                        sends += 1;
                        r.tags.entry(tag.clone()).or_insert_with(|| c.message(sends));
                    }
                    Action::Rec { .. } => {}
                }
            }
        }
        r
    }

    pub fn inverse(&self) -> Renaming {
        Renaming {
            pids: self.pids.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
            tags: self.tags.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
        }
    }
}

/// Renumbers constraint ids canonically; see the module docs.
pub(crate) fn canonical_constraints(t: &Trace) -> Trace {
    let mut ids: Vec<Arc<Constraint>> = Vec::new();
    let mut out = t.clone();
    for acts in out.procs_mut().values_mut() {
        for a in acts.iter_mut() {
            let Action::Rec { cs, .. } = a else { continue };
            let shared = match ids.iter().find(|c| c.same_clauses(cs)) {
                Some(c) => c.clone(),
                None => {
                    let c = Arc::new(Constraint::new(format!("cs{}", ids.len() + 1), cs.clauses.clone()));
                    ids.push(c.clone());
                    c
                }
            };
            *cs = shared;
        }
    }
    out
}

impl Trace {
    /// `self` under canonical pid, tag and constraint names.
    pub fn canonical(&self) -> Trace {
        canonical_constraints(&self.map_names(&Renaming::canonical(self)))
    }

    /// Serialization of [`Trace::canonical`]; equal for traces that differ
    /// only in names.
    pub fn canonical_key(&self) -> String {
        self.canonical().to_text()
    }
}
