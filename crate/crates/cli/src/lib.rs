//! Batch front end for the retrospin simulator: configuration loading,
//! command dispatch, and deterministic CSV/JSON/SVG emission.

pub mod commands;
pub mod config;
pub mod csvout;
pub mod error;
pub mod manifest;
pub mod plot;

pub use commands::{run, CommandKind, Invocation};
pub use config::{load_config, resolve_config, LoadedConfig, ResolvedConfig, Scheme};
pub use error::CliError;
pub use manifest::RunManifest;
