//! `racetrace`: command-line access to the trace analyses and the simulator.
//!
//! Results go to stdout and diagnostics to stderr. Exit status is 0 on
//! success or a positive answer, 1 on a negative analysis result (invalid
//! trace, not equivalent, replay divergence, refused variant) and 2 on
//! usage, input or parse errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "racetrace", version, about = "Traces, happened-before and message races for actor programs")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    /// One JSON object per result line.
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a trace (`.trace`) or an interleaving (`.itl`) for validity.
    Validate { file: PathBuf },
    /// Print the happened-before edges of a trace.
    Hb {
        file: PathBuf,
        /// Print every ordered pair instead of the generating edges.
        #[arg(long)]
        pairs: bool,
    },
    /// Decide causal equivalence of two interleavings.
    Equiv {
        a: PathBuf,
        b: PathBuf,
        /// Also search for a chain of swaps of independent events.
        #[arg(long)]
        oracle: bool,
        /// Sequences the swap search may visit.
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
    },
    /// Compute race sets.
    Races {
        file: PathBuf,
        /// Only the receive of this message.
        #[arg(long)]
        message: Option<String>,
        /// Show why each other message does or does not race.
        #[arg(long)]
        explain: bool,
    },
    /// Build the race variant that receives `--with` instead of `--receive`.
    Variant {
        file: PathBuf,
        #[arg(long)]
        receive: String,
        #[arg(long = "with")]
        with: String,
        /// Write the variant here instead of stdout.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// List messages that are sent but never received.
    Orphans { file: PathBuf },
    /// Run a program under a seeded random scheduler.
    Simulate {
        program: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Also write the trace to this file.
        #[arg(long)]
        emit_trace: Option<PathBuf>,
    },
    /// Replay a program along a partial trace.
    Replay {
        program: PathBuf,
        #[arg(long)]
        prefix: PathBuf,
        /// Continue to completion with the smallest-enabled-pid policy.
        #[arg(long = "continue")]
        cont: bool,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
    },
    /// Explore the executions of a program through race variants.
    Explore {
        program: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        #[arg(long, default_value_t = 10_000)]
        max_traces: usize,
        /// Write `trace-0001.txt`, ... and `report.txt` here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare with exhaustive enumeration (small programs only).
        #[arg(long)]
        check_oracle: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command, cli.format) {
        Ok(status) => ExitCode::from(status),
        Err(e) => {
            eprintln!("racetrace: {e}");
            ExitCode::from(2)
        }
    }
}
