//! Library side of the `lpembed` binary: ingestion, generators, reports and
//! the subcommand drivers.

pub mod commands;
pub mod error;
pub mod gen;
pub mod io;
pub mod report;

pub use commands::{run, Cli, Command};
pub use error::{CliError, CliResult};
pub use gen::{generate, GenKind};
pub use report::{RunReport, SCHEMA_VERSION};
