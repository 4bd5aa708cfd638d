mod common;

use std::sync::Arc;

use common::*;
use racetrace_core::explore::{
    compare_with_oracle, distinctness_check, explore, explore_with, ExploreConfig, HarvestWindow, Origin,
    ReplayResult,
};
use racetrace_core::model::{is_subtrace, parse_trace, validate_trace};
use racetrace_core::races::variant;
use racetrace_core::sim::{enumerate_executions, parse_program, Program};

const PROGRAMS: [&str; 3] = ["fig1.prog", "server.prog", "collector.prog"];

fn program(name: &str) -> Arc<Program> {
    Arc::new(parse_program(&read(name)).unwrap())
}

#[test]
fn both_windows_find_every_execution_from_any_seed() {
    for name in PROGRAMS {
        let p = program(name);
        let oracle = enumerate_executions(&p, 1_000);
        for window in [HarvestWindow::AfterReplaced, HarvestWindow::All] {
            for seed in 0..16 {
                let cfg = ExploreConfig { seed, window, ..ExploreConfig::default() };
                let report = explore_with(&p, &cfg);
                assert!(compare_with_oracle(&report, &oracle).is_empty(), "{name} {window:?} {seed}");
                assert_eq!(distinctness_check(&report), Ok(()));
            }
        }
    }
}

#[test]
fn explored_traces_descend_from_their_variants() {
    for name in PROGRAMS {
        let report = explore(&program(name), 1_000, 100);
        for t in &report.traces {
            validate_trace(&t.trace).unwrap();
            if let Origin::Variant { parent, old_tag, new_tag, .. } = &t.origin {
                let v = variant(&report.traces[*parent].trace, old_tag, new_tag).unwrap();
                assert!(is_subtrace(&v.trace, &t.trace).unwrap(), "{name}");
            }
        }
        assert!(report.replays.iter().all(|r| !matches!(r.result, ReplayResult::Diverged(_))));
    }
}

#[test]
fn output_directory_holds_parseable_traces_and_the_report() {
    let report = explore(&program("server.prog"), 1_000, 100);
    let dir = tempfile::tempdir().unwrap();
    report.write_to(dir.path()).unwrap();
    for (i, t) in report.traces.iter().enumerate() {
        let text = std::fs::read_to_string(dir.path().join(format!("trace-{:04}.txt", i + 1))).unwrap();
        assert_eq!(parse_trace(&text).unwrap(), t.trace);
    }
    let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert_eq!(text, report.to_text());
    assert!(text.starts_with("traces: 5 (fixpoint reached)\n"));
}
