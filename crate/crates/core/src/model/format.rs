//! Text formats for traces and interleavings.
//!
//! ```text
//! trace { initial: p1
//!   p1: spawn(p2), spawn(p3), send(l1, {val,1}, p2)
//!   p2: rec(l1, cs1)
//!   p3: send(l2, {val,0}, p2), send(l3, {val,2}, p2) }
//! constraints { cs1: {val,M} when M > 0 -> .; error -> . }
//! ```
//!
//! An interleaving file has the header `interleaving { initial: p1` and then
//! one `pid: action` line per event. Spawned processes without actions are
//! written `pid: ε`. The serializer output is canonical: processes in pid
//! order, constraints sorted by id, and parsing it back is the identity.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use super::{Action, Event, Interleaving, Trace};
use crate::ident::{natural_cmp, Pid, Tag};
use crate::syntax::{Cursor, PResult, ParseError};
use crate::terms::{parse_constraint_body, parse_term, Constraint, Term};

enum RawAction {
    Spawn(Pid),
    Send(Tag, Term, Pid),
    Rec(Tag, String, usize),
}

fn pid(cur: &mut Cursor<'_>) -> PResult<Pid> {
    let (at, name) = cur.name_token().ok_or_else(|| cur.error("expected a pid"))?;
    Pid::parse(name).ok_or_else(|| cur.error_at(at, format!("malformed pid `{name}`")))
}

fn tag(cur: &mut Cursor<'_>) -> PResult<Tag> {
    let (at, name) = cur.name_token().ok_or_else(|| cur.error("expected a tag"))?;
    Tag::parse(name).ok_or_else(|| cur.error_at(at, format!("malformed tag `{name}`")))
}

fn action(cur: &mut Cursor<'_>) -> PResult<RawAction> {
    if cur.eat("spawn") {
        cur.expect("(")?;
        let q = pid(cur)?;
        cur.expect(")")?;
        Ok(RawAction::Spawn(q))
    } else if cur.eat("send") {
        cur.expect("(")?;
        let l = tag(cur)?;
        cur.expect(",")?;
        let v = parse_term(cur)?;
        cur.expect(",")?;
        let q = pid(cur)?;
        cur.expect(")")?;
        Ok(RawAction::Send(l, v, q))
    } else if cur.eat("rec") {
        cur.expect("(")?;
        let l = tag(cur)?;
        cur.expect(",")?;
        cur.skip_ws();
        let at = cur.pos();
        let cs = cur.lower_ident().ok_or_else(|| cur.error("expected a constraint id"))?;
        cur.expect(")")?;
        Ok(RawAction::Rec(l, cs.to_string(), at))
    } else {
        Err(cur.expected("an action"))
    }
}

fn header(cur: &mut Cursor<'_>, keyword: &str) -> PResult<Pid> {
    cur.expect(keyword)?;
    cur.expect("{")?;
    cur.expect("initial")?;
    cur.expect(":")?;
    pid(cur)
}

fn constraints(cur: &mut Cursor<'_>) -> PResult<BTreeMap<String, Arc<Constraint>>> {
    let mut out = BTreeMap::new();
    if cur.at_end() {
        return Ok(out);
    }
    cur.expect("constraints")?;
    cur.expect("{")?;
    while !cur.eat("}") {
        cur.skip_ws();
        let at = cur.pos();
        let id = cur
            .lower_ident()
            .ok_or_else(|| cur.expected("a constraint id"))?
            .to_string();
        cur.expect(":")?;
        let clauses = parse_constraint_body(cur)?;
        if out.contains_key(&id) {
            return Err(cur.error_at(at, format!("constraint `{id}` is defined twice")));
        }
        out.insert(id.clone(), Arc::new(Constraint::new(id, clauses)));
    }
    if !cur.at_end() {
        return Err(cur.unexpected(" after the constraints block"));
    }
    Ok(out)
}

fn resolve(
    cur: &Cursor<'_>,
    raw: RawAction,
    table: &BTreeMap<String, Arc<Constraint>>,
) -> PResult<Action> {
    Ok(match raw {
        RawAction::Spawn(q) => Action::Spawn(q),
        RawAction::Send(l, v, q) => Action::send(l, v, q),
        RawAction::Rec(l, id, at) => {
            let cs = table
                .get(&id)
                .ok_or_else(|| cur.error_at(at, format!("undefined constraint `{id}` in rec({l})")))?;
            Action::rec(l, cs.clone())
        }
    })
}

pub fn parse_trace(text: &str) -> Result<Trace, ParseError> {
    let mut cur = Cursor::new(text);
    let initial = header(&mut cur, "trace")?;
    let mut raw: Vec<(Pid, Vec<RawAction>)> = Vec::new();
    while !cur.eat("}") {
        cur.skip_ws();
        let at = cur.pos();
        let p = pid(&mut cur)?;
        if raw.iter().any(|(q, _)| q == &p) {
            return Err(cur.error_at(at, format!("process {p} is listed twice")));
        }
        cur.expect(":")?;
        let mut acts = Vec::new();
        if !cur.eat("ε") {
            loop {
                acts.push(action(&mut cur)?);
                if !cur.eat(",") {
                    break;
                }
            }
        }
        raw.push((p, acts));
    }
    let table = constraints(&mut cur)?;
    let mut procs = Vec::new();
    for (p, acts) in raw {
        let acts = acts
            .into_iter()
            .map(|a| resolve(&cur, a, &table))
            .collect::<PResult<Vec<_>>>()?;
        procs.push((p, acts));
    }
    Ok(Trace::from_processes(initial, procs))
}

pub fn parse_interleaving(text: &str) -> Result<Interleaving, ParseError> {
    let mut cur = Cursor::new(text);
    let initial = header(&mut cur, "interleaving")?;
    let mut raw = Vec::new();
    while !cur.eat("}") {
        let p = pid(&mut cur)?;
        cur.expect(":")?;
        raw.push((p, action(&mut cur)?));
    }
    let table = constraints(&mut cur)?;
    let events = raw
        .into_iter()
        .map(|(p, a)| Ok(Event::new(p, resolve(&cur, a, &table)?)))
        .collect::<PResult<Vec<_>>>()?;
    Ok(Interleaving::new(initial, events))
}

fn write_constraints(out: &mut String, mut cs: Vec<Arc<Constraint>>) {
    cs.sort_by(|a, b| natural_cmp(&a.id, &b.id));
    cs.dedup_by(|a, b| a.id == b.id);
    if cs.is_empty() {
        out.push_str("constraints { }\n");
        return;
    }
    for (i, c) in cs.iter().enumerate() {
        out.push_str(if i == 0 { "constraints { " } else { "\n  " });
        let _ = write!(out, "{c}");
    }
    out.push_str(" }\n");
}

pub fn serialize_trace(t: &Trace) -> String {
    let mut out = format!("trace {{ initial: {}", t.initial());
    for (p, acts) in t.processes() {
        let _ = write!(out, "\n  {p}: ");
        if acts.is_empty() {
            out.push('ε');
        }
        for (i, a) in acts.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{a}");
        }
    }
    out.push_str(" }\n");
    write_constraints(&mut out, t.constraints());
    out
}

pub fn serialize_interleaving(s: &Interleaving) -> String {
    let mut out = format!("interleaving {{ initial: {}", s.initial);
    for e in &s.events {
        let _ = write!(out, "\n  {e}");
    }
    out.push_str(" }\n");
    let cs = s
        .events
        .iter()
        .filter_map(|e| match &e.action {
            Action::Rec { cs, .. } => Some(cs.clone()),
            _ => None,
        })
        .collect();
    write_constraints(&mut out, cs);
    out
}
