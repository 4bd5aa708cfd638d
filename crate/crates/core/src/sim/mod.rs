//! A small actor language whose executions produce traces.
//!
//! Programs are parsed with [`parse_program`] and run on a [`SysState`].
//! The drivers here run a program under a seeded random scheduler, replay a
//! partial trace and continue from it, or enumerate every reachable
//! complete trace.

mod machine;
mod program;

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use machine::{Outcome, Status, StepError, SysState, LOCAL_FUEL};
pub use program::{parse_program, Def, Expr, Program, RecvClause, Stmt};

use crate::causality::{linearize, CausalityError};
use crate::model::{validate_trace, Action, Event, Renaming, Trace, TraceViolation};

/// Result of a driven run.
#[derive(Debug, Clone)]
pub struct Run {
    pub trace: Trace,
    pub outcome: Outcome,
    pub state: SysState,
}

/// Runs `program` from its initial state, choosing uniformly among the
/// enabled processes with a PRNG seeded by `seed`.
pub fn run_random(program: &Arc<Program>, seed: u64, max_steps: usize) -> Run {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SysState::new(program.clone());
    let outcome = loop {
        let enabled = state.enabled();
        if enabled.is_empty() {
            break state.quiescent_outcome().expect("nothing is enabled");
        }
        if state.steps() >= max_steps {
            break Outcome::StepLimit;
        }
        let (pid, _) = &enabled[rng.gen_range(0..enabled.len())];
        state.step(pid).expect("enabled process steps");
    };
    Run { trace: state.trace(), outcome, state }
}

/// Continues `state` to quiescence, always stepping the smallest enabled
/// pid. `max_steps` bounds the total number of global steps.
pub fn run_to_end(mut state: SysState, max_steps: usize) -> Run {
    let outcome = loop {
        let enabled = state.enabled();
        let Some((pid, _)) = enabled.first() else {
            break state.quiescent_outcome().expect("nothing is enabled");
        };
        if state.steps() >= max_steps {
            break Outcome::StepLimit;
        }
        state.step(pid).expect("enabled process steps");
    };
    Run { trace: state.trace(), outcome, state }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("the prefix is not a valid trace: {0}")]
    InvalidPrefix(TraceViolation),
    #[error("replay diverges at step {index}: the prefix has {expected} but the program {}", found_text(.found))]
    Divergence { index: usize, expected: Event, found: Option<Action> },
}

fn found_text(found: &Option<Action>) -> String {
    match found {
        Some(a) => format!("performs {a}"),
        None => "cannot take that step".to_string(),
    }
}

/// Drives `program` along a linearization of `prefix` and returns the state
/// reached. Names in the prefix are aligned with the simulator's by
/// canonical renaming, so file traces using `p2` or `l1` replay as well.
pub fn replay_prefix(program: &Arc<Program>, prefix: &Trace) -> Result<SysState, ReplayError> {
    validate_trace(prefix).map_err(ReplayError::InvalidPrefix)?;
    let canonical = prefix.map_names(&Renaming::canonical(prefix));
    let order = match linearize(&canonical) {
        Ok(s) => s,
        Err(CausalityError::InvalidTrace(v)) => return Err(ReplayError::InvalidPrefix(v)),
        Err(CausalityError::UnknownEvent(_)) => unreachable!("linearize names no events"),
    };
    let mut state = SysState::new(program.clone());
    for (index, expected) in order.events.into_iter().enumerate() {
        let found = state.predicted(&expected.pid);
        match &found {
            Some(a) if a.same_as(&expected.action) => {
                state.step(&expected.pid).expect("predicted action is enabled");
            }
            _ => return Err(ReplayError::Divergence { index, expected, found }),
        }
    }
    Ok(state)
}

/// Every complete trace of a program, keyed by canonical serialization.
#[derive(Debug, Clone, Default)]
pub struct Executions {
    pub traces: BTreeMap<String, (Trace, Outcome)>,
    /// Branches cut off by the step limit.
    pub limited: usize,
}

/// Depth-first search over all scheduling choices. States are identified by
/// their recorded trace and mailboxes, so each distinct partial trace is
/// expanded once.
pub fn enumerate_executions(program: &Arc<Program>, max_steps: usize) -> Executions {
    let mut out = Executions::default();
    let mut seen = HashSet::new();
    let mut stack = vec![SysState::new(program.clone())];
    while let Some(state) = stack.pop() {
        if !seen.insert(state.state_key()) {
            continue;
        }
        let enabled = state.enabled();
        if enabled.is_empty() {
            let trace = state.trace();
            let outcome = state.quiescent_outcome().expect("nothing is enabled");
            out.traces.insert(trace.canonical_key(), (trace, outcome));
            continue;
        }
        if state.steps() >= max_steps {
            out.limited += 1;
            continue;
        }
        for (pid, _) in enabled.iter().rev() {
            let mut next = state.clone();
            next.step(pid).expect("enabled process steps");
            stack.push(next);
        }
    }
    out
}
