//! Command implementations behind the `lpdelay` binary.
//!
//! Each `cmd_*` function returns either its result or a [`CliError`] whose
//! [`exit_code`](CliError::exit_code) is the process status.

pub mod analyze;
pub mod config;
pub mod error;
pub mod simulate;
pub mod suite;
pub mod sweep;
pub mod verify;

pub use error::CliError;
