//! Scenario ingestion and report generation behind the `mixmarket` binary.
//!
//! Exit codes: 0 feasible, 1 invalid input, 2 infeasible (report still
//! written), 3 oracle verification outside tolerance.

pub mod commands;
pub mod emit;
pub mod scenario;

pub use commands::{run, Command, Format, Outcome, RunError, Status};
pub use scenario::{InputError, Scenario};
