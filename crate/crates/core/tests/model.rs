mod common;

use std::collections::BTreeSet;

use common::*;
use racetrace_core::causality::{
    causally_equivalent, count_linearizations, enumerate_linearizations, hb_graph, linearize, swap_equiv_oracle,
    SwapOutcome,
};
use racetrace_core::model::{
    is_subtrace, serialize_interleaving, serialize_trace, tr, validate_interleaving, validate_trace, Condition,
};
use racetrace_core::sim::parse_program;
use racetrace_core::{Event, Interleaving};

/// Linearizations of the running-example trace, counted by brute force below.
const N_A: usize = 5;

fn as_set(items: &[Interleaving]) -> BTreeSet<Vec<Event>> {
    items.iter().map(|s| s.events.clone()).collect()
}

#[test]
fn figure_one_trace_has_five_linearizations() {
    let t = trace("tau_a.trace");
    let brute = brute_sched(&t, usize::MAX);
    assert_eq!(brute.len(), N_A);
    assert_eq!(count_linearizations(&t).unwrap(), N_A as u128);
    let lin = enumerate_linearizations(&t, 100).unwrap();
    assert!(lin.complete);
    assert_eq!(as_set(&lin.items), brute.into_iter().collect());
}

#[test]
fn linearizations_agree_with_brute_force_on_fixtures() {
    const CAP: usize = 20_000;
    for (name, t) in trace_fixtures() {
        if validate_trace(&t).is_err() {
            continue;
        }
        let brute = brute_sched(&t, CAP + 1);
        let count = count_linearizations(&t).unwrap();
        if brute.len() <= CAP {
            assert_eq!(count, brute.len() as u128, "{name}");
            let lin = enumerate_linearizations(&t, CAP).unwrap();
            assert!(lin.complete, "{name}");
            assert_eq!(as_set(&lin.items), brute.into_iter().collect(), "{name}");
        } else {
            assert!(count > CAP as u128, "{name}");
        }
    }
}

#[test]
fn linearizations_are_valid_and_equivalent() {
    for (name, t) in trace_fixtures() {
        if validate_trace(&t).is_err() {
            continue;
        }
        let lin = enumerate_linearizations(&t, 200).unwrap();
        for s in &lin.items {
            validate_interleaving(s).unwrap_or_else(|v| panic!("{name}: {v}"));
            assert_eq!(tr(s).unwrap(), t, "{name}");
        }
        for s1 in lin.items.iter().take(12) {
            for s2 in lin.items.iter().take(12) {
                assert!(causally_equivalent(s1, s2), "{name}");
            }
        }
        if t.len() <= 12 {
            let first = &lin.items[0];
            for s in lin.items.iter().take(20) {
                assert!(matches!(swap_equiv_oracle(first, s, 200_000), SwapOutcome::Reached { .. }), "{name}");
            }
        }
    }
}

/// Orders of the events of `t` that satisfy the interleaving conditions,
/// including ones that change the order of actions within a process.
fn all_valid_orders(events: &[Event], initial: &racetrace_core::Pid) -> Vec<Vec<Event>> {
    fn go(rest: &mut Vec<Event>, path: &mut Vec<Event>, initial: &racetrace_core::Pid, out: &mut Vec<Vec<Event>>) {
        if rest.is_empty() {
            out.push(path.clone());
            return;
        }
        for i in 0..rest.len() {
            let e = rest.remove(i);
            path.push(e);
            if naive_valid(initial, path) {
                go(rest, path, initial, out);
            }
            let e = path.pop().unwrap();
            rest.insert(i, e);
        }
    }
    let mut out = Vec::new();
    go(&mut events.to_vec(), &mut Vec::new(), initial, &mut out);
    out
}

#[test]
fn different_traces_are_not_equivalent() {
    let p = std::sync::Arc::new(parse_program(&read("fig1.prog")).unwrap());
    let ex = racetrace_core::sim::enumerate_executions(&p, 100);
    for (t, _) in ex.traces.values() {
        let prog = t.to_text();
        let s = linearize(t).unwrap();
        let orders = all_valid_orders(&s.events, t.initial());
        let mut other_traces = 0;
        for o in orders {
            let s2 = Interleaving::new(t.initial().clone(), o);
            validate_interleaving(&s2).unwrap();
            let same = tr(&s2).unwrap() == *t;
            assert_eq!(causally_equivalent(&s, &s2), same, "{prog}");
            if !same {
                other_traces += 1;
                assert_eq!(swap_equiv_oracle(&s, &s2, 1_000_000), SwapOutcome::Unreachable, "{prog}");
            }
        }
        assert!(other_traces > 0, "{prog}");
    }
}

#[test]
fn hoisted_sends_are_equivalent_and_double_hoisting_is_invalid() {
    let (a, b, bad) = (itl("s_a.itl"), itl("s_b.itl"), itl("s_bad.itl"));
    assert!(matches!(swap_equiv_oracle(&a, &b, 10_000), SwapOutcome::Reached { .. }));
    assert!(causally_equivalent(&a, &b));
    let v = validate_interleaving(&bad).unwrap_err();
    assert_eq!(v.condition, Condition::MailboxOrder);
    assert!(!naive_valid(&bad.initial, &bad.events));
    assert!(naive_valid(&a.initial, &a.events) && naive_valid(&b.initial, &b.events));
}

#[test]
fn trace_validity_agrees_with_brute_force_on_fixtures() {
    for (name, t) in trace_fixtures() {
        assert_eq!(validate_trace(&t).is_ok(), brute_is_trace(&t), "{name}");
    }
}

#[test]
fn linearize_gives_a_member_of_sched() {
    for (name, t) in trace_fixtures() {
        if validate_trace(&t).is_ok() {
            let s = linearize(&t).unwrap();
            assert!(naive_valid(&s.initial, &s.events), "{name}");
            assert_eq!(tr(&s).unwrap(), t, "{name}");
        } else {
            assert!(linearize(&t).is_err(), "{name}");
            assert!(hb_graph(&t).is_err(), "{name}");
        }
    }
}

#[test]
fn running_subtrace() {
    let (sub, t) = (trace("run_subtrace.trace"), trace("run.trace"));
    assert!(is_subtrace(&sub, &t).unwrap());
    assert!(!is_subtrace(&t, &sub).unwrap());
    assert!(is_subtrace(&t, &t).unwrap());
}

#[test]
fn fixture_files_are_canonical() {
    let dir = fixture_path("");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .collect();
    names.sort();
    let mut checked = 0;
    for name in names.into_iter().filter(|n| n.contains('.')) {
        let text = read(&name);
        let printed = if name.ends_with(".trace") {
            serialize_trace(&trace(&name))
        } else if name.ends_with(".itl") {
            serialize_interleaving(&itl(&name))
        } else if name.ends_with(".prog") {
            let body: String = text.lines().filter(|l| !l.starts_with('%')).map(|l| format!("{l}\n")).collect();
            assert_eq!(parse_program(&text).unwrap().to_string(), body, "{name}");
            checked += 1;
            continue;
        } else {
            continue;
        };
        assert_eq!(printed, text, "{name}");
        checked += 1;
    }
    assert!(checked >= 10);
}
