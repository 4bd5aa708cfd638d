//! Shared inputs for the benchmarks.

use std::sync::Arc;

use racetrace_core::model::parse_trace;
use racetrace_core::sim::{parse_program, run_random, Program};
use racetrace_core::Trace;

pub const RUN_TRACE: &str = include_str!("../../core/fixtures/run.trace");
pub const FIG1_PROGRAM: &str = include_str!("../../core/fixtures/fig1.prog");
pub const SERVER_PROGRAM: &str = include_str!("../../core/fixtures/server.prog");

pub fn trace(text: &str) -> Trace {
    parse_trace(text).expect("bundled trace parses")
}

pub fn program(text: &str) -> Arc<Program> {
    Arc::new(parse_program(text).expect("bundled program parses"))
}

/// A server answering `clients` clients, each sending `requests` requests in turn.
pub fn fan_in_program(clients: usize, requests: usize) -> Arc<Program> {
    let spawns: Vec<String> = (1..=clients).map(|k| format!("C{k} = spawn client(S)")).collect();
    let calls: Vec<String> = (1..=requests)
        .map(|n| format!("send {{req,self,{n}}} to S; receive {{ {{ack,{n}}} -> ok }}"))
        .collect();
    let text = format!(
        "program {{ main boot
  def boot() {{ S = spawn server(); {} }}
  def client(S) {{ {} }}
  def server() {{ receive {{ {{req,C,N}} -> send {{ack,N}} to C, server() }} }} }}",
        spawns.join("; "),
        calls.join("; ")
    );
    program(&text)
}

/// A random complete run of [`fan_in_program`].
pub fn fan_in_trace(clients: usize, requests: usize, seed: u64) -> Trace {
    run_random(&fan_in_program(clients, requests), seed, 100_000).trace
}
