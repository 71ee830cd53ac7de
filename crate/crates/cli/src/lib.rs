//! Command-line front end: model-file ingestion, study orchestration and
//! report output. All numerics live in `qsde-core`.

pub mod commands;
pub mod error;
pub mod model_file;
pub mod output;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
