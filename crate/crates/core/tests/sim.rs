mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::*;
use racetrace_core::model::{is_subtrace, validate_trace, Interleaving};
use racetrace_core::model::{project, Event};
use racetrace_core::sim::{enumerate_executions, parse_program, replay_prefix, run_random, run_to_end};
use racetrace_core::sim::{Outcome, Program, SysState};
use racetrace_core::{races, Pid};

const PROGRAMS: [&str; 3] = ["fig1.prog", "server.prog", "collector.prog"];

fn program(name: &str) -> Arc<Program> {
    Arc::new(parse_program(&read(name)).unwrap_or_else(|e| panic!("{name}: {e}")))
}

/// Every complete trace reachable by trying every schedule, without any
/// state merging. Independent of the memoised search under test.
fn all_schedules(state: SysState, path: &mut Vec<Event>, out: &mut BTreeSet<String>) {
    let enabled = state.enabled();
    if enabled.is_empty() {
        let s = Interleaving::new(Pid::root(), path.clone());
        out.insert(project(&s).canonical_key());
        return;
    }
    for (pid, _) in enabled {
        let mut next = state.clone();
        let a = next.step(&pid).unwrap();
        validate_trace(&next.trace()).unwrap();
        path.push(Event::new(pid, a));
        all_schedules(next, path, out);
        path.pop();
    }
}

fn executions_text(p: &Arc<Program>) -> String {
    let ex = enumerate_executions(p, 1_000);
    assert_eq!(ex.limited, 0);
    ex.traces.iter().map(|(k, (_, o))| format!("% {o}\n{k}")).collect()
}

#[test]
fn enumeration_matches_every_schedule() {
    for name in PROGRAMS {
        let p = program(name);
        let mut brute = BTreeSet::new();
        all_schedules(SysState::new(p.clone()), &mut Vec::new(), &mut brute);
        let ex = enumerate_executions(&p, 1_000);
        let keys: BTreeSet<String> = ex.traces.keys().cloned().collect();
        assert_eq!(keys, brute, "{name}");
    }
}

#[test]
fn enumeration_matches_golden_files() {
    for (name, count) in [("fig1", 2), ("server", 5), ("collector", 4)] {
        let p = program(&format!("{name}.prog"));
        let text = executions_text(&p);
        let golden = fixture_path(&format!("golden/{name}.executions"));
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::write(&golden, &text).unwrap();
        }
        assert_eq!(text, std::fs::read_to_string(&golden).unwrap(), "{name}");
        assert_eq!(text.matches("trace {").count(), count, "{name}");
    }
}

#[test]
fn random_runs_are_among_the_executions() {
    for name in PROGRAMS {
        let p = program(name);
        let ex = enumerate_executions(&p, 1_000);
        for seed in 0..50 {
            let run = run_random(&p, seed, 1_000);
            let (_, outcome) = ex.traces.get(&run.trace.canonical_key()).expect("a known execution");
            assert_eq!(&run.outcome, outcome);
        }
    }
}

#[test]
fn figure_one_runs_fall_in_the_two_classes() {
    let p = program("fig1.prog");
    let seen: BTreeSet<String> = (0..64).map(|s| run_random(&p, s, 100).trace.canonical_key()).collect();
    assert_eq!(seen.len(), 2);
}

#[test]
fn replay_then_run_extends_the_prefix() {
    for name in PROGRAMS {
        let p = program(name);
        for (t, _) in enumerate_executions(&p, 1_000).traces.values() {
            for rep in races::all_races(t).unwrap() {
                for racer in &rep.racers {
                    let v = races::variant(t, &rep.subject, racer).unwrap();
                    let state = replay_prefix(&p, &v.trace).unwrap();
                    assert_eq!(state.trace(), v.trace.canonical());
                    let end = run_to_end(state, 1_000);
                    assert_ne!(end.outcome, Outcome::StepLimit);
                    assert!(is_subtrace(&v.trace, &end.trace).unwrap(), "{name}");
                }
            }
        }
    }
}

#[test]
fn replaying_a_complete_trace_reaches_its_end() {
    for name in PROGRAMS {
        let p = program(name);
        for (t, outcome) in enumerate_executions(&p, 1_000).traces.values() {
            let state = replay_prefix(&p, t).unwrap();
            assert!(state.enabled().is_empty());
            assert_eq!(state.quiescent_outcome().as_ref(), Some(outcome));
        }
    }
}

#[test]
fn file_names_are_aligned_on_replay() {
    let p = program("fig1.prog");
    let state = replay_prefix(&p, &trace("tau_a_variant.trace")).unwrap();
    let t = state.trace();
    assert_eq!(t.actions(&Pid::new("p1.1"))[0].to_string(), "rec(p1.2#2, cs1)");
}

#[test]
fn program_files_print_back_identically() {
    let p = program("fig1.prog");
    assert_eq!(p.to_string(), read("fig1.prog"));
}
