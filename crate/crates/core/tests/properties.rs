mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use proptest::prelude::*;
use racetrace_core::causality::{
    causally_equivalent, count_linearizations, enumerate_linearizations, hb_graph, linearize, swap_equiv_oracle,
    SwapOutcome,
};
use racetrace_core::model::{is_subtrace, parse_trace, project, tr, validate_interleaving, validate_trace};
use racetrace_core::races::{all_races, declarative_race_oracle, orphans, variant};
use racetrace_core::{Action, Event, EventId, Interleaving, Trace};

fn choices(max_len: usize) -> impl Strategy<Value = Vec<(u8, u8, u8)>> {
    prop::collection::vec(any::<(u8, u8, u8)>(), 0..max_len)
}

/// Events of an interleaving as text, so relations can be compared across
/// interleavings independently of positions.
fn hb_by_content(t: &Trace) -> BTreeSet<(String, String)> {
    let g = hb_graph(t).unwrap();
    let name = |e: &EventId| format!("{}: {}", e.pid, t.get(e).unwrap());
    g.pairs().iter().map(|(a, b)| (name(a), name(b))).collect()
}

/// Moves actions within one process, which usually breaks validity.
fn perturb(t: &Trace, who: usize, i: usize, j: usize) -> Trace {
    let pids: Vec<_> = t.pids().cloned().collect();
    let p = &pids[who % pids.len()];
    let mut seq = t.actions(p).to_vec();
    if seq.len() >= 2 {
        let (i, j) = (i % seq.len(), j % seq.len());
        seq.swap(i, j);
    }
    let mut out = t.clone();
    out.set(p.clone(), seq);
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn generated_interleavings_are_valid(c in choices(30)) {
        let s = gen_interleaving(&c, 4);
        prop_assert!(naive_valid(&s.initial, &s.events));
        prop_assert!(validate_interleaving(&s).is_ok());
        let t = tr(&s).unwrap();
        prop_assert!(validate_trace(&t).is_ok());
        let text = t.to_text();
        prop_assert_eq!(parse_trace(&text).unwrap().to_text(), text);
    }

    #[test]
    fn interleaving_checker_agrees_with_brute_force(c in choices(14), moves in any::<(u8, u8, u8)>()) {
        let s = gen_interleaving(&c, 3);
        let mut events = s.events.clone();
        if events.len() >= 2 {
            let i = moves.0 as usize % events.len();
            let e = events.remove(i);
            events.insert(moves.1 as usize % (events.len() + 1), e);
        }
        let s2 = Interleaving::new(s.initial.clone(), events);
        prop_assert_eq!(validate_interleaving(&s2).is_ok(), naive_valid(&s2.initial, &s2.events));
    }

    #[test]
    fn trace_checker_agrees_with_brute_force(c in choices(12), m in any::<(u8, u8, u8)>()) {
        let t = tr(&gen_interleaving(&c, 3)).unwrap();
        let bad = perturb(&t, m.0 as usize, m.1 as usize, m.2 as usize);
        prop_assert_eq!(validate_trace(&bad).is_ok(), brute_is_trace(&bad));
    }

    #[test]
    fn linearize_lands_in_sched(c in choices(30)) {
        let t = tr(&gen_interleaving(&c, 4)).unwrap();
        let s = linearize(&t).unwrap();
        prop_assert!(naive_valid(&s.initial, &s.events));
        prop_assert_eq!(tr(&s).unwrap(), t);
    }

    #[test]
    fn linearization_count_matches_brute_force(c in choices(12)) {
        let t = tr(&gen_interleaving(&c, 3)).unwrap();
        let brute: BTreeSet<Vec<Event>> = brute_sched(&t, usize::MAX).into_iter().collect();
        prop_assert_eq!(count_linearizations(&t).unwrap(), brute.len() as u128);
        let lin = enumerate_linearizations(&t, usize::MAX).unwrap();
        let got: BTreeSet<Vec<Event>> = lin.items.iter().map(|s| s.events.clone()).collect();
        prop_assert_eq!(got, brute);
    }

    #[test]
    fn linearizations_are_equivalent(c in choices(14)) {
        let t = tr(&gen_interleaving(&c, 3)).unwrap();
        let lin = enumerate_linearizations(&t, 8).unwrap();
        for s1 in &lin.items {
            for s2 in &lin.items {
                prop_assert!(causally_equivalent(s1, s2));
                let reached = matches!(swap_equiv_oracle(s1, s2, 100_000), SwapOutcome::Reached { .. });
                prop_assert!(reached);
            }
        }
    }

    /// Equivalence holds exactly when the happened-before relations agree,
    /// and interleavings of different traces are never equivalent.
    #[test]
    fn swap_reachability_matches_trace_equality(c in choices(10), m in any::<(u8, u8)>()) {
        let s = gen_interleaving(&c, 3);
        let mut events = s.events.clone();
        if events.len() >= 2 {
            let i = m.0 as usize % events.len();
            let e = events.remove(i);
            events.insert(m.1 as usize % (events.len() + 1), e);
        }
        let s2 = Interleaving::new(s.initial.clone(), events);
        prop_assume!(validate_interleaving(&s2).is_ok());
        let (t1, t2) = (tr(&s).unwrap(), tr(&s2).unwrap());
        let reached = match swap_equiv_oracle(&s, &s2, 1_000_000) {
            SwapOutcome::Reached { .. } => true,
            SwapOutcome::Unreachable => false,
            SwapOutcome::BudgetExhausted => return Err(TestCaseError::reject("budget")),
        };
        prop_assert_eq!(reached, t1 == t2);
        prop_assert_eq!(reached, causally_equivalent(&s, &s2));
        prop_assert_eq!(reached, hb_by_content(&t1) == hb_by_content(&t2));
    }

    #[test]
    fn prefixes_are_subtraces(c in choices(30), cut in any::<(u16, u16)>()) {
        let s = gen_interleaving(&c, 4);
        let n = s.len() + 1;
        let (i, j) = ((cut.0 as usize) % n, (cut.1 as usize) % n);
        let (i, j) = (i.min(j), i.max(j));
        let prefix = |k: usize| project(&Interleaving::new(s.initial.clone(), s.events[..k].to_vec()));
        let (a, b, full) = (prefix(i), prefix(j), tr(&s).unwrap());
        prop_assert!(is_subtrace(&a, &a).unwrap());
        prop_assert!(is_subtrace(&a, &b).unwrap());
        prop_assert!(is_subtrace(&b, &full).unwrap());
        prop_assert!(is_subtrace(&a, &full).unwrap());
        if is_subtrace(&b, &a).unwrap() {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn race_sets_match_the_declarative_oracle(c in choices(16)) {
        let t = tr(&gen_interleaving(&c, 3)).unwrap();
        prop_assume!(t.len() <= 14);
        for rep in all_races(&t).unwrap() {
            let p = &rep.receive.pid;
            let sent_to_p: Vec<_> = t
                .events()
                .filter_map(|(_, a)| match a {
                    Action::Send { tag, target, .. } if target == p && *tag != rep.subject => Some(tag.clone()),
                    _ => None,
                })
                .collect();
            for l2 in sent_to_p {
                prop_assert_eq!(
                    rep.racers.contains(&l2),
                    declarative_race_oracle(&t, &rep.subject, &l2),
                    "{} vs {} in\n{}", rep.subject, l2, t.to_text()
                );
            }
        }
    }

    #[test]
    fn variants_are_valid_partial_traces(c in choices(24)) {
        let t = tr(&gen_interleaving(&c, 4)).unwrap();
        for rep in all_races(&t).unwrap() {
            for l2 in &rep.racers {
                let v = variant(&t, &rep.subject, l2).unwrap();
                prop_assert!(validate_trace(&v.trace).is_ok());
                let at = &v.replaced_at;
                prop_assert_eq!(v.trace.get(at).and_then(Action::tag), Some(l2));
                prop_assert_eq!(v.trace.actions(&at.pid).len(), at.index + 1);
                for p in v.trace.pids() {
                    let (a, b) = (v.trace.actions(p), t.actions(p));
                    let keep = if p == &at.pid { at.index } else { a.len() };
                    prop_assert!(a.len() <= b.len() || p == &at.pid);
                    prop_assert_eq!(&a[..keep], &b[..keep]);
                }
            }
        }
    }

    #[test]
    fn orphans_are_the_unreceived_sends(c in choices(30)) {
        let t = tr(&gen_interleaving(&c, 4)).unwrap();
        let mut sent = BTreeMap::new();
        for (_, a) in t.events() {
            match a {
                Action::Send { tag, .. } => { sent.entry(tag.clone()).or_insert(false); }
                Action::Rec { tag, .. } => { sent.insert(tag.clone(), true); }
                Action::Spawn(_) => {}
            }
        }
        let expected: BTreeSet<_> = sent.into_iter().filter(|(_, r)| !r).map(|(t, _)| t).collect();
        prop_assert_eq!(orphans(&t), expected);
    }

    #[test]
    fn canonical_key_ignores_names(c in choices(30)) {
        let t = tr(&gen_interleaving(&c, 4)).unwrap();
        let key = t.canonical_key();
        let renamed = parse_trace(&key).unwrap();
        prop_assert_eq!(renamed.canonical_key(), key.clone());
        prop_assert_eq!(t.canonical().canonical_key(), key);
    }
}

/// The generator must reach the interesting cases, or the properties above
/// would hold vacuously.
#[test]
fn generator_covers_races_and_invalid_perturbations() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let (mut racy, mut invalid, mut swaps_differ) = (0, 0, 0);
    for _ in 0..300 {
        let c: Vec<(u8, u8, u8)> = (0..14).map(|_| rng.gen()).collect();
        let s = gen_interleaving(&c, 3);
        let t = tr(&s).unwrap();
        if all_races(&t).unwrap().iter().any(|r| !r.racers.is_empty()) {
            racy += 1;
        }
        if validate_trace(&perturb(&t, rng.gen(), rng.gen(), rng.gen())).is_err() {
            invalid += 1;
        }
        let lin = enumerate_linearizations(&t, 2).unwrap();
        if lin.items.len() == 2 {
            swaps_differ += 1;
        }
    }
    assert!(racy >= 30 && invalid >= 30 && swaps_differ >= 30, "{racy} {invalid} {swaps_differ}");
}
