//! Race-variant driven state-space exploration.
//!
//! Exploration starts from one seeded random run. For every receive of a
//! recorded trace and every message racing with it, the race variant is
//! replayed on the program and continued with the smallest-enabled-pid
//! policy; each new complete trace is analysed in turn. Traces and pending
//! variants are deduplicated by their canonical serialization, so the loop
//! reaches a fixpoint on finite-state programs.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::causality::EventId;
use crate::ident::Tag;
use crate::model::{Action, Trace};
use crate::races::{all_races, orphans, variant, Variant};
use crate::sim::{replay_prefix, run_random, run_to_end, Executions, Outcome, Program, Run};

/// Which receives of a trace obtained from a variant are analysed for races.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum HarvestWindow {
    /// The replaced receive and everything after it in its process, plus
    /// receives of other processes outside the replayed prefix. Races in the
    /// shared prefix were already harvested from the parent.
    #[default]
    AfterReplaced,
    /// Every receive.
    All,
}

#[derive(Debug, Clone)]
pub struct ExploreConfig {
    /// Seed of the initial random run.
    pub seed: u64,
    /// Global steps allowed per run.
    pub max_steps: usize,
    /// Exploration stops once this many traces are recorded.
    pub max_traces: usize,
    pub window: HarvestWindow,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig { seed: 0, max_steps: 1_000, max_traces: 10_000, window: HarvestWindow::AfterReplaced }
    }
}

/// How a trace was first reached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Initial { seed: u64 },
    Variant { parent: usize, receive: EventId, old_tag: Tag, new_tag: Tag },
}

#[derive(Debug, Clone)]
pub struct ExploredTrace {
    pub key: String,
    pub trace: Trace,
    pub outcome: Outcome,
    pub orphans: BTreeSet<Tag>,
    /// Receives of the trace that have at least one racer.
    pub racing_receives: usize,
    /// (receive, racer) pairs of the trace.
    pub race_pairs: usize,
    pub origin: Origin,
}

/// What replaying one variant led to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayResult {
    /// A trace not seen before, at this index of the report.
    New(usize),
    /// A trace already in the report.
    Duplicate(usize),
    StepLimit,
    Diverged(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayRecord {
    pub parent: usize,
    pub receive: EventId,
    pub old_tag: Tag,
    pub new_tag: Tag,
    pub result: ReplayResult,
}

#[derive(Debug, Clone)]
pub struct ExplorationReport {
    /// Complete traces in discovery order.
    pub traces: Vec<ExploredTrace>,
    pub replays: Vec<ReplayRecord>,
    /// Variants dropped because an identical one was already queued.
    pub duplicate_variants: usize,
    /// The initial run hit the step limit; nothing else was explored.
    pub initial_step_limit: bool,
    /// Exploration stopped at `max_traces` before reaching a fixpoint.
    pub truncated: bool,
    /// Failures while computing races or variants.
    pub errors: Vec<String>,
}

impl ExplorationReport {
    pub fn keys(&self) -> BTreeSet<&str> {
        self.traces.iter().map(|t| t.key.as_str()).collect()
    }

    fn count(&self, f: impl Fn(&ReplayResult) -> bool) -> usize {
        self.replays.iter().filter(|r| f(&r.result)).count()
    }

    /// Deterministic text summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let bound = if self.initial_step_limit {
            "initial run hit the step limit"
        } else if self.truncated {
            "stopped at the trace limit"
        } else {
            "fixpoint reached"
        };
        let _ = writeln!(out, "traces: {} ({bound})", self.traces.len());
        let _ = writeln!(
            out,
            "variants: {} replayed, {} duplicate variants skipped",
            self.replays.len(),
            self.duplicate_variants
        );
        let _ = writeln!(
            out,
            "replays: {} new, {} duplicate, {} step limit, {} diverged",
            self.count(|r| matches!(r, ReplayResult::New(_))),
            self.count(|r| matches!(r, ReplayResult::Duplicate(_))),
            self.count(|r| matches!(r, ReplayResult::StepLimit)),
            self.count(|r| matches!(r, ReplayResult::Diverged(_))),
        );
        let _ = writeln!(
            out,
            "races: {} pairs over all traces",
            self.traces.iter().map(|t| t.race_pairs).sum::<usize>()
        );
        for (i, t) in self.traces.iter().enumerate() {
            let orphans: Vec<String> = t.orphans.iter().map(ToString::to_string).collect();
            let origin = match &t.origin {
                Origin::Initial { seed } => format!("random run with seed {seed}"),
                Origin::Variant { parent, receive, old_tag, new_tag } => format!(
                    "{} with {receive} receiving {new_tag} instead of {old_tag}",
                    trace_name(*parent)
                ),
            };
            let _ = writeln!(
                out,
                "{}: {}; {} racing receives, {} race pairs; orphans {{{}}}; from {origin}",
                trace_name(i),
                t.outcome,
                t.racing_receives,
                t.race_pairs,
                orphans.join(", ")
            );
        }
        for r in &self.replays {
            if let ReplayResult::Diverged(msg) = &r.result {
                let _ = writeln!(out, "diverged: {} at {}: {msg}", trace_name(r.parent), r.receive);
            }
        }
        for e in &self.errors {
            let _ = writeln!(out, "error: {e}");
        }
        out
    }

    /// Writes `trace-0001.txt`, ... and `report.txt` into `dir`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for (i, t) in self.traces.iter().enumerate() {
            fs::write(dir.join(format!("{}.txt", trace_name(i))), &t.key)?;
        }
        fs::write(dir.join("report.txt"), self.to_text())
    }
}

/// File-style name of the `i`-th trace of a report: `trace-0001` for 0.
pub fn trace_name(i: usize) -> String {
    format!("trace-{:04}", i + 1)
}

struct Pending {
    parent: usize,
    variant: Variant,
}

/// Explores `program` with the default seed and harvest window.
pub fn explore(program: &Arc<Program>, max_steps: usize, max_traces: usize) -> ExplorationReport {
    explore_with(program, &ExploreConfig { max_steps, max_traces, ..ExploreConfig::default() })
}

pub fn explore_with(program: &Arc<Program>, cfg: &ExploreConfig) -> ExplorationReport {
    let mut report = ExplorationReport {
        traces: Vec::new(),
        replays: Vec::new(),
        duplicate_variants: 0,
        initial_step_limit: false,
        truncated: false,
        errors: Vec::new(),
    };
    let first = run_random(program, cfg.seed, cfg.max_steps);
    if first.outcome == Outcome::StepLimit {
        report.initial_step_limit = true;
        return report;
    }
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut queued: HashSet<String> = HashSet::new();
    let mut layer = Vec::new();
    record(&mut report, &mut index, &mut queued, &mut layer, first, Origin::Initial { seed: cfg.seed }, None, cfg);

    while !layer.is_empty() && !report.truncated {
        let runs: Vec<_> = layer
            .par_iter()
            .map(|p: &Pending| replay_prefix(program, &p.variant.trace).map(|s| run_to_end(s, cfg.max_steps)))
            .collect();
        let mut next = Vec::new();
        for (p, run) in layer.into_iter().zip(runs) {
            if report.truncated {
                break;
            }
            let v = &p.variant;
            let result = match run {
                Err(e) => ReplayResult::Diverged(e.to_string()),
                Ok(run) if run.outcome == Outcome::StepLimit => ReplayResult::StepLimit,
                Ok(run) => {
                    let key = run.trace.canonical_key();
                    match index.get(&key) {
                        Some(&k) => ReplayResult::Duplicate(k),
                        None => {
                            let origin = Origin::Variant {
                                parent: p.parent,
                                receive: v.replaced_at.clone(),
                                old_tag: v.old_tag.clone(),
                                new_tag: v.new_tag.clone(),
                            };
                            let k = report.traces.len();
                            record(&mut report, &mut index, &mut queued, &mut next, run, origin, Some(v), cfg);
                            ReplayResult::New(k)
                        }
                    }
                }
            };
            report.replays.push(ReplayRecord {
                parent: p.parent,
                receive: v.replaced_at.clone(),
                old_tag: v.old_tag.clone(),
                new_tag: v.new_tag.clone(),
                result,
            });
        }
        layer = next;
    }
    report
}

/// Adds a new complete trace to the report and queues its variants.
#[allow(clippy::too_many_arguments)]
fn record(
    report: &mut ExplorationReport,
    index: &mut HashMap<String, usize>,
    queued: &mut HashSet<String>,
    pending: &mut Vec<Pending>,
    run: Run,
    origin: Origin,
    from: Option<&Variant>,
    cfg: &ExploreConfig,
) {
    let me = report.traces.len();
    let trace = run.trace;
    let key = trace.canonical_key();
    let mut entry = ExploredTrace {
        key: key.clone(),
        orphans: orphans(&trace),
        racing_receives: 0,
        race_pairs: 0,
        outcome: run.outcome,
        origin,
        trace: trace.clone(),
    };
    match all_races(&trace) {
        Err(e) => report.errors.push(format!("{}: {e}", trace_name(me))),
        Ok(reports) => {
            for rep in reports {
                if rep.racers.is_empty() {
                    continue;
                }
                entry.racing_receives += 1;
                entry.race_pairs += rep.racers.len();
                if !in_window(&rep.receive, from, cfg.window) {
                    continue;
                }
                for racer in &rep.racers {
                    match variant(&trace, &rep.subject, racer) {
                        Err(e) => report.errors.push(format!("{}: {e}", trace_name(me))),
                        Ok(v) => {
                            if queued.insert(v.trace.canonical_key()) {
                                pending.push(Pending { parent: me, variant: v });
                            } else {
                                report.duplicate_variants += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    index.insert(key, me);
    report.traces.push(entry);
    if report.traces.len() >= cfg.max_traces {
        report.truncated = true;
    }
}

fn in_window(receive: &EventId, from: Option<&Variant>, window: HarvestWindow) -> bool {
    let Some(v) = from else { return true };
    match window {
        HarvestWindow::All => true,
        HarvestWindow::AfterReplaced => {
            if receive.pid == v.replaced_at.pid {
                receive.index >= v.replaced_at.index
            } else {
                receive.index >= v.trace.actions(&receive.pid).len()
            }
        }
    }
}

/// A violation of the guarantees of variant-driven exploration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Counterexample {
    /// Two entries of the report are the same trace.
    Duplicate { first: usize, second: usize, key: String },
    /// Replaying a variant gave back the trace it was computed from.
    EqualsParent { parent: usize, trace: usize },
    /// A variant-descended trace agrees with its parent at the replaced
    /// receive.
    SameAtReplaced { parent: usize, trace: usize, at: EventId },
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Counterexample::Duplicate { first, second, .. } => {
                write!(f, "{} and {} are the same trace", trace_name(*first), trace_name(*second))
            }
            Counterexample::EqualsParent { parent, trace } => write!(
                f,
                "{} was reached from a variant of {} but equals it",
                trace_name(*trace),
                trace_name(*parent)
            ),
            Counterexample::SameAtReplaced { parent, trace, at } => write!(
                f,
                "{} agrees with its parent {} at the replaced receive {at}",
                trace_name(*trace),
                trace_name(*parent)
            ),
        }
    }
}

fn received_tag(t: &Trace, at: &EventId) -> Option<Tag> {
    match t.get(at) {
        Some(Action::Rec { tag, .. }) => Some(tag.clone()),
        _ => None,
    }
}

/// Checks that the traces of `report` are pairwise distinct and that every
/// trace obtained by replaying a variant, including replays that led to a
/// trace seen before, differs from the variant's parent at the replaced
/// receive.
pub fn distinctness_check(report: &ExplorationReport) -> Result<(), Counterexample> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, t) in report.traces.iter().enumerate() {
        let key = t.trace.canonical_key();
        if let Some(&first) = seen.get(&key) {
            return Err(Counterexample::Duplicate { first, second: i, key });
        }
        seen.insert(key, i);
    }
    for r in &report.replays {
        let (ReplayResult::New(k) | ReplayResult::Duplicate(k)) = r.result else { continue };
        let (parent, child) = (&report.traces[r.parent].trace, &report.traces[k].trace);
        if parent == child {
            return Err(Counterexample::EqualsParent { parent: r.parent, trace: k });
        }
        let before = received_tag(parent, &r.receive);
        if before.is_some() && before == received_tag(child, &r.receive) {
            return Err(Counterexample::SameAtReplaced { parent: r.parent, trace: k, at: r.receive.clone() });
        }
    }
    Ok(())
}

/// Difference between an exploration and exhaustive enumeration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleDiff {
    /// Traces the enumeration found but exploration did not.
    pub missing: Vec<String>,
    /// Traces exploration found but the enumeration did not.
    pub extra: Vec<String>,
}

impl OracleDiff {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }
}

pub fn compare_with_oracle(report: &ExplorationReport, oracle: &Executions) -> OracleDiff {
    let found = report.keys();
    OracleDiff {
        missing: oracle.traces.keys().filter(|k| !found.contains(k.as_str())).cloned().collect(),
        extra: found.iter().filter(|k| !oracle.traces.contains_key(**k)).map(|k| k.to_string()).collect(),
    }
}
