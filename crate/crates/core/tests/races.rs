mod common;

use common::*;
use racetrace_core::causality::EventId;
use racetrace_core::model::validate_trace;
use racetrace_core::races::{all_races, declarative_race_oracle, orphans, race_set, variant, Verdict};
use racetrace_core::Pid;

fn e(p: &str, i: usize) -> EventId {
    EventId::new(Pid::new(p), i)
}

#[test]
fn running_trace_race_set_with_justifications() {
    let t = trace("run.trace");
    let rep = race_set(&t, &tag("l2")).unwrap();
    assert_eq!(rep.receive, e("p3", 2));
    assert_eq!(rep.racers, tags(&["l6", "l8"]));
    let v = |l: &str| rep.candidate(&tag(l)).unwrap().verdict.clone();
    assert_eq!(v("l1"), Verdict::AlreadyConsumed { at: e("p3", 0) });
    assert_eq!(v("l4"), Verdict::NoMatch);
    assert_eq!(v("l6"), Verdict::Races);
    assert_eq!(
        v("l7"),
        Verdict::HappensAfterReceive { witness: vec![e("p3", 2), e("p3", 4), e("p1", 4), e("p1", 5)] }
    );
    assert_eq!(v("l8"), Verdict::Races);
    assert_eq!(rep.candidates.len(), 5);
}

#[test]
fn first_receive_of_running_trace() {
    let rep = race_set(&trace("run.trace"), &tag("l1")).unwrap();
    assert_eq!(rep.racers, tags(&["l2"]));
    assert_eq!(rep.candidate(&tag("l4")).unwrap().verdict, Verdict::Blocked { by: tag("l1") });
}

#[test]
fn figure_one_race() {
    let rep = race_set(&trace("tau_a.trace"), &tag("l1")).unwrap();
    assert_eq!(rep.racers, tags(&["l3"]));
    assert_eq!(rep.candidate(&tag("l2")).unwrap().verdict, Verdict::NoMatch);
}

#[test]
fn matching_fourth_message_races() {
    let t = trace("run_l4.trace");
    assert_eq!(race_set(&t, &tag("l2")).unwrap().racers, tags(&["l4", "l6"]));
    assert!(declarative_race_oracle(&t, &tag("l2"), &tag("l4")));
}

#[test]
fn oracle_rejects_happened_after_and_self() {
    let t = trace("run.trace");
    assert!(!declarative_race_oracle(&t, &tag("l2"), &tag("l7")));
    assert!(!declarative_race_oracle(&t, &tag("l2"), &tag("l2")));
}

#[test]
fn running_variant_matches_golden() {
    let v = variant(&trace("run.trace"), &tag("l2"), &tag("l6")).unwrap();
    assert_eq!(v.trace.to_text(), read("run_variant_l2_l6.trace"));
    assert_eq!(v.replaced_at, e("p3", 2));
}

#[test]
fn figure_one_variant_only_changes_the_receive() {
    let v = variant(&trace("tau_a.trace"), &tag("l1"), &tag("l3")).unwrap();
    assert_eq!(v.trace.to_text(), read("tau_a_variant.trace"));
}

#[test]
fn all_races_reports_every_receive() {
    let reps = all_races(&trace("run.trace")).unwrap();
    let at: Vec<EventId> = reps.iter().map(|r| r.receive.clone()).collect();
    assert_eq!(at, vec![e("p1", 4), e("p3", 0), e("p3", 2), e("p3", 3), e("p3", 5), e("p4", 0)]);
    assert!(all_races(&trace("run_subtrace.trace")).unwrap().len() == 2);
}

#[test]
fn orphan_messages() {
    assert_eq!(orphans(&trace("run.trace")), tags(&["l7", "l8"]));
    assert_eq!(orphans(&trace("tau_a.trace")), tags(&["l2", "l3"]));
}

#[test]
fn fixtures_are_valid_except_the_bad_match() {
    for (name, t) in trace_fixtures() {
        assert_eq!(validate_trace(&t).is_ok(), name != "tau_a_bad_match.trace", "{name}");
    }
}

#[test]
fn race_sets_agree_with_the_declarative_oracle_on_fixtures() {
    for (name, t) in trace_fixtures() {
        if validate_trace(&t).is_err() || t.len() > 20 {
            continue;
        }
        for rep in all_races(&t).unwrap() {
            let senders: Vec<_> = t.events().filter_map(|(_, a)| match a {
                racetrace_core::Action::Send { tag, target, .. } if *target == rep.receive.pid => Some(tag.clone()),
                _ => None,
            }).collect();
            for c in senders {
                assert_eq!(
                    declarative_race_oracle(&t, &rep.subject, &c),
                    rep.racers.contains(&c),
                    "{name}: {} vs {c}",
                    rep.subject
                );
            }
        }
    }
}
