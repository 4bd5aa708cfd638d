//! Execution traces for message-passing programs with dynamic spawning and
//! selective receives.
//!
//! The crate is organised bottom-up:
//!
//! * [`terms`]: values, patterns, guards and the decidable `match` on receive
//!   constraints.
//! * [`model`]: events, interleavings and traces, their validity conditions,
//!   projection (`tr`), subtraces and the text formats.
//! * [`causality`]: the happened-before graph, linearizations and causal
//!   equivalence (with a swap-search oracle).
//! * [`races`]: race sets, the declarative race oracle, race variants and
//!   orphan messages.
//! * [`sim`]: a small actor language whose executions produce traces, with
//!   random runs, prefix replay and exhaustive enumeration.
//! * [`explore`]: race-variant driven state-space exploration.

pub mod causality;
pub mod explore;
pub mod ident;
pub mod model;
pub mod races;
pub mod sim;
pub mod syntax;
pub mod terms;

pub use causality::{EventId, HbGraph};
pub use ident::{Pid, Tag};
pub use model::{Action, Event, Interleaving, Trace};
pub use syntax::ParseError;
pub use terms::{Clause, Constraint, Guard, Pattern, Term};
