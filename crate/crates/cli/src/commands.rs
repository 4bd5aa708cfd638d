//! Command handlers. Each returns the exit status, or an error message for
//! usage and input problems (exit status 2).

use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use racetrace_core::causality::{
    causally_equivalent, hb_graph, swap_equiv_oracle, EdgeKind, SwapOutcome,
};
use racetrace_core::explore::{compare_with_oracle, explore_with, trace_name, ExploreConfig};
use racetrace_core::model::{
    parse_interleaving, parse_trace, serialize_trace, validate_interleaving, validate_trace,
};
use racetrace_core::races::{all_races, orphans, race_set, variant, RaceError, RaceReport};
use racetrace_core::sim::{
    enumerate_executions, parse_program, replay_prefix, run_random, run_to_end, Program, SysState,
};
use racetrace_core::{Interleaving, Tag, Trace};
use serde_json::{json, Value};

use crate::{Command, Format};

type Res = Result<u8, String>;

struct Out {
    format: Format,
}

impl Out {
    /// Prints a result line: `text` in text mode, `record` in JSON mode.
    fn line(&self, text: impl Display, record: Value) {
        match self.format {
            Format::Text => println!("{text}"),
            Format::Json => println!("{record}"),
        }
    }

    /// Prints a trace, followed in text mode by `%` comment lines so the
    /// output still parses as a trace.
    fn trace(&self, t: &Trace, notes: &[String], mut record: Value) {
        match self.format {
            Format::Text => {
                print!("{}", serialize_trace(t));
                for n in notes {
                    println!("% {n}");
                }
            }
            Format::Json => {
                record["trace"] = json!(serialize_trace(t));
                println!("{record}");
            }
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn located(path: &Path, e: impl Display) -> String {
    format!("{}:{e}", path.display())
}

fn load_trace(path: &Path) -> Result<Trace, String> {
    if path.extension().is_some_and(|x| x == "itl") {
        return Err(format!("{}: expected a trace (.trace), not an interleaving", path.display()));
    }
    parse_trace(&read(path)?).map_err(|e| located(path, e))
}

fn load_interleaving(path: &Path) -> Result<Interleaving, String> {
    if path.extension().is_some_and(|x| x == "trace") {
        return Err(format!("{}: expected an interleaving (.itl), not a trace", path.display()));
    }
    parse_interleaving(&read(path)?).map_err(|e| located(path, e))
}

fn load_program(path: &Path) -> Result<Arc<Program>, String> {
    parse_program(&read(path)?).map(Arc::new).map_err(|e| located(path, e))
}

fn tag_arg(s: &str) -> Result<Tag, String> {
    Tag::parse(s).ok_or_else(|| format!("malformed tag `{s}`"))
}

fn set_text<T: Display>(items: impl IntoIterator<Item = T>) -> String {
    let items: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

fn strings<T: Display>(items: impl IntoIterator<Item = T>) -> Vec<String> {
    items.into_iter().map(|x| x.to_string()).collect()
}

fn write_file(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn crash_notes(state: &SysState) -> Vec<String> {
    state.crashed().into_iter().map(|(p, m)| format!("crashed {p}: {m}")).collect()
}

pub fn run(cmd: Command, format: Format) -> Res {
    let out = Out { format };
    match cmd {
        Command::Validate { file } => validate(&out, &file),
        Command::Hb { file, pairs } => hb(&out, &file, pairs),
        Command::Equiv { a, b, oracle, budget } => equiv(&out, &a, &b, oracle, budget),
        Command::Races { file, message, explain } => races(&out, &file, message.as_deref(), explain),
        Command::Variant { file, receive, with, output } => {
            make_variant(&out, &file, &receive, &with, output.as_deref())
        }
        Command::Orphans { file } => {
            let o = orphans(&load_trace(&file)?);
            out.line(set_text(&o), json!({ "orphans": strings(&o) }));
            Ok(0)
        }
        Command::Simulate { program, seed, max_steps, emit_trace } => {
            let p = load_program(&program)?;
            let run = run_random(&p, seed, max_steps);
            if let Some(path) = emit_trace {
                write_file(&path, &serialize_trace(&run.trace))?;
            }
            let mut notes = vec![format!("outcome: {}", run.outcome)];
            notes.extend(crash_notes(&run.state));
            let record = json!({ "outcome": run.outcome.to_string(), "seed": seed, "crashed": strings(&notes[1..]) });
            out.trace(&run.trace, &notes, record);
            Ok(0)
        }
        Command::Replay { program, prefix, cont, max_steps } => {
            let p = load_program(&program)?;
            let prefix = load_trace(&prefix)?;
            let state = match replay_prefix(&p, &prefix) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("racetrace: {e}");
                    return Ok(1);
                }
            };
            let steps = state.steps();
            let mut notes = vec![format!("replayed {steps} events")];
            let mut record = json!({ "replayed": steps });
            let (trace, state) = if cont {
                let run = run_to_end(state, max_steps);
                notes.push(format!("outcome: {}", run.outcome));
                record["outcome"] = json!(run.outcome.to_string());
                (run.trace, run.state)
            } else {
                (state.trace(), state)
            };
            notes.extend(crash_notes(&state));
            out.trace(&trace, &notes, record);
            Ok(0)
        }
        Command::Explore { program, seed, max_steps, max_traces, out: dir, check_oracle } => {
            let p = load_program(&program)?;
            let cfg = ExploreConfig { seed, max_steps, max_traces, ..ExploreConfig::default() };
            let report = explore_with(&p, &cfg);
            if let Some(dir) = dir {
                report.write_to(&dir).map_err(|e| format!("cannot write {}: {e}", dir.display()))?;
            }
            match out.format {
                Format::Text => print!("{}", report.to_text()),
                Format::Json => {
                    for (i, t) in report.traces.iter().enumerate() {
                        let record = json!({
                            "name": trace_name(i),
                            "outcome": t.outcome.to_string(),
                            "race_pairs": t.race_pairs,
                            "orphans": strings(&t.orphans),
                            "trace": t.key,
                        });
                        println!("{record}");
                    }
                    println!(
                        "{}",
                        json!({
                            "traces": report.traces.len(),
                            "replays": report.replays.len(),
                            "duplicate_variants": report.duplicate_variants,
                            "truncated": report.truncated,
                        })
                    );
                }
            }
            if !check_oracle {
                return Ok(0);
            }
            let oracle = enumerate_executions(&p, max_steps);
            let diff = compare_with_oracle(&report, &oracle);
            let equal = diff.is_empty() && oracle.limited == 0;
            let text = if equal {
                format!("oracle: equal ({} traces)", oracle.traces.len())
            } else {
                format!(
                    "oracle: {} missing, {} extra, {} enumeration branches at the step limit",
                    diff.missing.len(),
                    diff.extra.len(),
                    oracle.limited
                )
            };
            out.line(
                text,
                json!({ "oracle_equal": equal, "missing": diff.missing, "extra": diff.extra, "limited": oracle.limited }),
            );
            Ok(if equal { 0 } else { 1 })
        }
    }
}

fn validate(out: &Out, file: &Path) -> Res {
    let result = if file.extension().is_some_and(|x| x == "itl") {
        let s = load_interleaving(file)?;
        validate_interleaving(&s).map_err(|v| {
            let record = json!({ "valid": false, "condition": v.condition.number().to_string(), "index": v.index, "message": v.message });
            (v.to_string(), record)
        })
    } else {
        let t = load_trace(file)?;
        validate_trace(&t).map_err(|v| {
            let at = v.at.as_ref().map(ToString::to_string);
            let record = json!({ "valid": false, "condition": v.condition.letter().to_string(), "at": at, "message": v.message });
            (v.to_string(), record)
        })
    };
    match result {
        Ok(()) => {
            out.line("valid", json!({ "valid": true }));
            Ok(0)
        }
        Err((text, record)) => {
            out.line(format!("invalid: {text}"), record);
            Ok(1)
        }
    }
}

fn hb(out: &Out, file: &Path, pairs: bool) -> Res {
    let t = load_trace(file)?;
    let g = match hb_graph(&t) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("racetrace: {e}");
            return Ok(1);
        }
    };
    if pairs {
        for (a, b) in g.pairs() {
            out.line(format!("{a} -> {b}"), json!({ "before": a.to_string(), "after": b.to_string() }));
        }
    } else {
        for e in g.edges() {
            let (kind, tag) = match &e.kind {
                EdgeKind::Program => ("program", None),
                EdgeKind::Spawn => ("spawn", None),
                EdgeKind::Message(l) => ("message", Some(l.to_string())),
            };
            let record = json!({ "from": e.from.to_string(), "to": e.to.to_string(), "kind": kind, "tag": tag });
            out.line(&e, record);
        }
    }
    Ok(0)
}

fn equiv(out: &Out, a: &Path, b: &Path, oracle: bool, budget: usize) -> Res {
    let (s1, s2) = (load_interleaving(a)?, load_interleaving(b)?);
    for (path, s) in [(a, &s1), (b, &s2)] {
        if let Err(v) = validate_interleaving(s) {
            eprintln!("racetrace: {}: {v}", path.display());
            return Ok(1);
        }
    }
    let eq = causally_equivalent(&s1, &s2);
    out.line(if eq { "equivalent" } else { "not equivalent" }, json!({ "equivalent": eq }));
    if oracle {
        let (text, record) = match swap_equiv_oracle(&s1, &s2, budget) {
            SwapOutcome::Reached { swaps } => {
                (format!("swap search: reached after {swaps} swaps"), json!({ "swap_search": "reached", "swaps": swaps }))
            }
            SwapOutcome::Unreachable => ("swap search: unreachable".to_string(), json!({ "swap_search": "unreachable" })),
            SwapOutcome::BudgetExhausted => {
                ("swap search: budget exhausted".to_string(), json!({ "swap_search": "budget exhausted" }))
            }
        };
        out.line(text, record);
    }
    Ok(if eq { 0 } else { 1 })
}

fn race_record(rep: &RaceReport, explain: bool) -> Value {
    let mut record = json!({
        "receive": rep.receive.to_string(),
        "message": rep.subject.to_string(),
        "racers": strings(&rep.racers),
    });
    if explain {
        record["candidates"] = rep
            .candidates
            .iter()
            .map(|c| json!({ "message": c.tag.to_string(), "races": c.verdict.races(), "verdict": c.verdict.to_string() }))
            .collect();
    }
    record
}

fn print_explanation(out: &Out, rep: &RaceReport, explain: bool) {
    if explain && out.format == Format::Text {
        for c in &rep.candidates {
            println!("  {} = {}: {}", c.tag, c.value, c.verdict);
        }
    }
}

fn races(out: &Out, file: &Path, message: Option<&str>, explain: bool) -> Res {
    let t = load_trace(file)?;
    let reports = match message {
        Some(m) => race_set(&t, &tag_arg(m)?).map(|r| vec![r]),
        None => all_races(&t),
    };
    let reports = match reports {
        Ok(r) => r,
        Err(RaceError::InvalidTrace(v)) => {
            eprintln!("racetrace: {}: invalid trace: {v}", file.display());
            return Ok(1);
        }
        Err(e) => return Err(e.to_string()),
    };
    for rep in &reports {
        let text = if message.is_some() {
            set_text(&rep.racers)
        } else {
            format!("{} at {}: {}", rep.subject, rep.receive, set_text(&rep.racers))
        };
        out.line(text, race_record(rep, explain));
        print_explanation(out, rep, explain);
    }
    Ok(0)
}

fn make_variant(out: &Out, file: &Path, receive: &str, with: &str, output: Option<&Path>) -> Res {
    let t = load_trace(file)?;
    let v = match variant(&t, &tag_arg(receive)?, &tag_arg(with)?) {
        Ok(v) => v,
        Err(e @ (RaceError::NotARacer { .. } | RaceError::InvalidTrace(_))) => {
            eprintln!("racetrace: {e}");
            return Ok(1);
        }
        Err(e) => return Err(e.to_string()),
    };
    let note = format!("{} receives {} instead of {}", v.replaced_at, v.new_tag, v.old_tag);
    match output {
        Some(path) => {
            write_file(path, &serialize_trace(&v.trace))?;
            out.line(note, json!({ "written": path.display().to_string(), "replaced_at": v.replaced_at.to_string() }));
        }
        None => out.trace(&v.trace, &[note], json!({ "replaced_at": v.replaced_at.to_string() })),
    }
    Ok(0)
}
