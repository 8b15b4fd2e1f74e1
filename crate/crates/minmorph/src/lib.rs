//! File formats, CSV reports and the `minmorph` command-line driver on top
//! of [`minmorph_core`].
//!
//! Exit codes: 0 success, 1 validation failure (bad input, bad arguments or
//! a failing `verify` check), 2 solver did not converge, 3 I/O or parse
//! failure.

pub mod cli;
pub mod error;
pub mod io;
pub mod report;
pub mod run;

pub use error::CliError;
pub use run::{execute, run, Command, Outcome, RunConfig, ShapeSpec};
