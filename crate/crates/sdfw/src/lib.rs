//! File formats, reports and command implementations for the `sdfw` binary.
//!
//! Everything that touches the filesystem lives here; the simulation, the
//! firewall and the control plane are in `sdfw-core`.

pub mod commands;
pub mod io;
pub mod report;

pub use commands::{
    cmd_check_policies, cmd_compile, cmd_run, CliError, Format, RunConfig, RunOutput,
};
