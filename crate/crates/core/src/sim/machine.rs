//! The simulator state machine.
//!
//! Each process runs its local statements eagerly until its next global
//! action (spawn, send or receive) is pending. Stepping a process performs
//! that action, records it, and runs locals again. Messages are enqueued in
//! the target mailbox at the moment they are sent; a receive takes the
//! oldest message that matches its constraint.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::program::{Expr, Program, RecvClause, Stmt};
use crate::ident::{Pid, Tag};
use crate::model::{Action, Trace};
use crate::terms::{Clause, Constraint, Substitution, Term, TermExpr};

/// Local steps a process may take between two global actions.
pub const LOCAL_FUEL: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("process {0} does not exist")]
    UnknownProcess(Pid),
    #[error("process {0} is not enabled")]
    NotEnabled(Pid),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Work {
    Exec(Stmt),
    Bind(String),
    Restore(Substitution),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Frame {
    env: Substitution,
    /// Stack: the next item is at the end.
    work: Vec<Work>,
}

/// A global action whose operands have been evaluated.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Pending {
    Spawn { fun: String, args: Vec<Term> },
    Send { value: Term, target: Pid },
    Receive { cs: Arc<Constraint>, clauses: Vec<RecvClause> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    /// A spawn, send or receive is next.
    Active,
    Finished(Term),
    Crashed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Proc {
    frames: Vec<Frame>,
    last: Term,
    pending: Option<(Pending, Option<String>)>,
    status: Status,
    spawned: usize,
    sent: usize,
}

/// A running system: processes, mailboxes and the trace recorded so far.
#[derive(Debug, Clone)]
pub struct SysState {
    program: Arc<Program>,
    procs: BTreeMap<Pid, Proc>,
    mailboxes: BTreeMap<Pid, Vec<(Tag, Term)>>,
    recorded: Trace,
    constraints: Vec<Arc<Constraint>>,
    steps: usize,
}

impl SysState {
    /// The initial state: `p1` about to run `main`.
    pub fn new(program: Arc<Program>) -> SysState {
        let root = Pid::root();
        let main = program.main.clone();
        let mut sys = SysState {
            program,
            procs: BTreeMap::new(),
            mailboxes: BTreeMap::new(),
            recorded: Trace::new(root.clone()),
            constraints: Vec::new(),
            steps: 0,
        };
        sys.start(root, &main, Vec::new());
        sys
    }

    pub fn program(&self) -> &Arc<Program> {
        &self.program
    }

    fn start(&mut self, pid: Pid, fun: &str, args: Vec<Term>) {
        let frame = self.call_frame(fun, args);
        let proc = Proc {
            frames: vec![frame],
            last: Term::atom("ok"),
            pending: None,
            status: Status::Active,
            spawned: 0,
            sent: 0,
        };
        self.procs.insert(pid.clone(), proc);
        self.run_local(&pid);
    }

    fn call_frame(&self, fun: &str, args: Vec<Term>) -> Frame {
        let def = self.program.def(fun).expect("calls are checked statically");
        let env = def.params.iter().cloned().zip(args).collect();
        let work = def.body.iter().rev().cloned().map(Work::Exec).collect();
        Frame { env, work }
    }

    /// Number of global actions performed so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn pids(&self) -> impl Iterator<Item = &Pid> {
        self.procs.keys()
    }

    pub fn status(&self, pid: &Pid) -> Option<&Status> {
        self.procs.get(pid).map(|p| &p.status)
    }

    pub fn mailbox(&self, pid: &Pid) -> &[(Tag, Term)] {
        self.mailboxes.get(pid).map_or(&[], Vec::as_slice)
    }

    /// The trace recorded so far, with canonical constraint ids.
    pub fn trace(&self) -> Trace {
        crate::model::canonical_constraints(&self.recorded)
    }

    /// Key identifying the global state: trace and mailbox contents.
    pub fn state_key(&self) -> String {
        let mut key = self.trace().to_text();
        for (p, m) in &self.mailboxes {
            key.push_str(&format!("{p}:"));
            for (t, _) in m {
                key.push_str(&format!(" {t}"));
            }
            key.push('\n');
        }
        key
    }

    /// The action `pid` would perform if stepped now, if it is enabled.
    pub fn predicted(&self, pid: &Pid) -> Option<Action> {
        let proc = self.procs.get(pid)?;
        let (pending, _) = proc.pending.as_ref()?;
        Some(match pending {
            Pending::Spawn { .. } => Action::Spawn(pid.child(proc.spawned + 1)),
            Pending::Send { value, target } => {
                Action::send(pid.message(proc.sent + 1), value.clone(), target.clone())
            }
            Pending::Receive { cs, .. } => {
                let (tag, _) = self.mailbox(pid).iter().find(|(_, v)| cs.matches(v))?;
                Action::rec(tag.clone(), cs.clone())
            }
        })
    }

    /// All enabled processes with their next actions, in pid order.
    pub fn enabled(&self) -> Vec<(Pid, Action)> {
        self.procs
            .keys()
            .filter_map(|p| self.predicted(p).map(|a| (p.clone(), a)))
            .collect()
    }

    /// Processes waiting in a receive that no message matches.
    pub fn blocked(&self) -> Vec<Pid> {
        self.procs
            .iter()
            .filter(|(p, pr)| {
                matches!(pr.pending, Some((Pending::Receive { .. }, _))) && self.predicted(p).is_none()
            })
            .map(|(p, _)| p.clone())
            .collect()
    }

    pub fn crashed(&self) -> Vec<(Pid, String)> {
        self.procs
            .iter()
            .filter_map(|(p, pr)| match &pr.status {
                Status::Crashed(m) => Some((p.clone(), m.clone())),
                _ => None,
            })
            .collect()
    }

    /// Performs the pending action of `pid`.
    pub fn step(&mut self, pid: &Pid) -> Result<Action, StepError> {
        let action = self.predicted(pid).ok_or_else(|| {
            if self.procs.contains_key(pid) {
                StepError::NotEnabled(pid.clone())
            } else {
                StepError::UnknownProcess(pid.clone())
            }
        })?;
        let proc = self.procs.get_mut(pid).expect("checked above");
        let (pending, bind) = proc.pending.take().expect("enabled implies pending");
        let frame = proc.frames.last_mut().expect("active process has a frame");
        if let Some(var) = bind {
            frame.work.push(Work::Bind(var));
        }
        match (pending, &action) {
            (Pending::Spawn { fun, args }, Action::Spawn(child)) => {
                proc.spawned += 1;
                proc.last = Term::Pid(child.clone());
                self.record(pid, action.clone());
                self.start(child.clone(), &fun, args);
            }
            (Pending::Send { value, target }, Action::Send { tag, .. }) => {
                proc.sent += 1;
                proc.last = value.clone();
                self.mailboxes.entry(target).or_default().push((tag.clone(), value));
                self.record(pid, action.clone());
            }
            (Pending::Receive { clauses, .. }, Action::Rec { tag, cs }) => {
                let mbox = self.mailboxes.get_mut(pid).expect("message present");
                let pos = mbox.iter().position(|(t, _)| t == tag).expect("message present");
                let (_, value) = mbox.remove(pos);
                let (k, sub) = cs.matching_clause(&value).expect("predicted message matches");
                // The clause body runs with the pattern variables bound; the
                // caller's environment comes back before the result is bound.
                frame.work.push(Work::Restore(frame.env.clone()));
                frame.env.extend(sub);
                frame.work.extend(clauses[k].body.iter().rev().cloned().map(Work::Exec));
                self.record(pid, action.clone());
            }
            _ => unreachable!("prediction follows the pending action"),
        }
        self.steps += 1;
        self.run_local(pid);
        Ok(action)
    }

    fn record(&mut self, pid: &Pid, action: Action) {
        let mut seq = self.recorded.actions(pid).to_vec();
        seq.push(action);
        self.recorded.set(pid.clone(), seq);
    }

    fn intern(&mut self, clauses: Vec<Clause>) -> Arc<Constraint> {
        if let Some(c) = self.constraints.iter().find(|c| c.clauses == clauses) {
            return c.clone();
        }
        let c = Arc::new(Constraint::new(format!("cs{}", self.constraints.len() + 1), clauses));
        self.constraints.push(c.clone());
        c
    }

    /// Runs local statements of `pid` until a global action is pending, the
    /// process finishes, crashes, or runs out of fuel.
    fn run_local(&mut self, pid: &Pid) {
        let program = self.program.clone();
        let mut fuel = LOCAL_FUEL;
        loop {
            let proc = self.procs.get_mut(pid).expect("process exists");
            if proc.pending.is_some() || proc.status != Status::Active {
                return;
            }
            if fuel == 0 {
                proc.status = Status::Crashed("local step limit exceeded".into());
                return;
            }
            fuel -= 1;
            let Some(frame) = proc.frames.last_mut() else {
                proc.status = Status::Finished(proc.last.clone());
                return;
            };
            let Some(item) = frame.work.pop() else {
                proc.frames.pop();
                continue;
            };
            let (bind, expr) = match item {
                Work::Restore(env) => {
                    frame.env = env;
                    continue;
                }
                Work::Bind(var) => {
                    frame.env.insert(var, proc.last.clone());
                    continue;
                }
                Work::Exec(Stmt::Bind(v, e)) => (Some(v), e),
                Work::Exec(Stmt::Expr(e)) => (None, e),
            };
            let env = frame.env.clone();
            let eval = |t: &TermExpr| t.eval(&env, Some(pid));
            let result: Result<(), String> = match expr {
                Expr::Value(t) => match eval(&t) {
                    Some(v) => {
                        if let Some(var) = bind {
                            frame.env.insert(var, v.clone());
                        }
                        proc.last = v;
                        Ok(())
                    }
                    None => Err(format!("cannot evaluate {t}")),
                },
                Expr::Call { fun, args } => match args.iter().map(eval).collect::<Option<Vec<_>>>() {
                    None => Err(format!("cannot evaluate the arguments of {fun}")),
                    Some(vals) => {
                        let def = program.def(&fun).expect("calls are checked statically");
                        let callee = Frame {
                            env: def.params.iter().cloned().zip(vals).collect(),
                            work: def.body.iter().rev().cloned().map(Work::Exec).collect(),
                        };
                        if let Some(v) = bind {
                            frame.work.push(Work::Bind(v));
                            proc.frames.push(callee);
                        } else if frame.work.iter().all(|w| matches!(w, Work::Restore(_))) {
                            // Tail call: nothing of the caller is left to run.
                            *frame = callee;
                        } else {
                            proc.frames.push(callee);
                        }
                        Ok(())
                    }
                },
                Expr::Spawn { fun, args } => match args.iter().map(eval).collect::<Option<Vec<_>>>() {
                    Some(args) => {
                        proc.pending = Some((Pending::Spawn { fun, args }, bind));
                        Ok(())
                    }
                    None => Err(format!("cannot evaluate the arguments of {fun}")),
                },
                Expr::Send { msg, to } => match (eval(&msg), eval(&to)) {
                    (Some(value), Some(Term::Pid(target))) => {
                        proc.pending = Some((Pending::Send { value, target }, bind));
                        Ok(())
                    }
                    (Some(_), Some(other)) => Err(format!("send target {other} is not a pid")),
                    _ => Err(format!("cannot evaluate send {msg} to {to}")),
                },
                Expr::Receive(clauses) => {
                    let cs_clauses = clauses
                        .iter()
                        .map(|c| {
                            Clause::new(c.pattern.instantiate(&env), c.guard.instantiate(&env, Some(pid)))
                        })
                        .collect();
                    let cs = self.intern(cs_clauses);
                    let proc = self.procs.get_mut(pid).expect("process exists");
                    proc.pending = Some((Pending::Receive { cs, clauses }, bind));
                    Ok(())
                }
            };
            if let Err(m) = result {
                let proc = self.procs.get_mut(pid).expect("process exists");
                proc.status = Status::Crashed(m);
                return;
            }
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    /// No process is waiting in a receive.
    Completed,
    /// Some processes wait for messages that never arrive.
    Deadlock(Vec<Pid>),
    StepLimit,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Completed => write!(f, "completed"),
            Outcome::Deadlock(ps) => {
                let ps: Vec<String> = ps.iter().map(ToString::to_string).collect();
                write!(f, "deadlock ({})", ps.join(", "))
            }
            Outcome::StepLimit => write!(f, "step limit"),
        }
    }
}

impl SysState {
    /// The outcome if no process is enabled.
    pub fn quiescent_outcome(&self) -> Option<Outcome> {
        if !self.enabled().is_empty() {
            return None;
        }
        let blocked = self.blocked();
        Some(if blocked.is_empty() { Outcome::Completed } else { Outcome::Deadlock(blocked) })
    }
}
