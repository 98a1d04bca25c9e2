//! Experiment runner behind the `fraqmap` binary.

pub mod config;
pub mod data;
pub mod experiments;

use std::fmt;

pub use config::{Config, Experiment};
pub use experiments::{run, Outcome};

/// Failure of a run, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or unreadable input.
    Config(String),
    /// A numerical routine failed.
    Solver(String),
    /// Writing an output file failed.
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) | Self::Output(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Solver(m) => write!(f, "solver failure: {m}"),
            Self::Output(m) => write!(f, "output error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fraqmap::Error> for CliError {
    fn from(e: fraqmap::Error) -> Self {
        match e {
            fraqmap::Error::Parse { .. } | fraqmap::Error::InvalidParameter { .. } | fraqmap::Error::QuadratureOrder { .. } => {
                Self::Config(e.to_string())
            }
            fraqmap::Error::Io(io) => Self::Output(io.to_string()),
            other => Self::Solver(other.to_string()),
        }
    }
}

/// Splits `--key=value` overrides from the arguments clap should see.
/// `--config=...` and `--out=...` are left in place.
pub fn split_overrides<I: IntoIterator<Item = String>>(args: I) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for arg in args {
        if let Some((key, value)) = arg.strip_prefix("--").and_then(|a| a.split_once('=')) {
            if key != "config" && key != "out" && !key.is_empty() {
                overrides.push((key.to_string(), value.to_string()));
                continue;
            }
        }
        rest.push(arg);
    }
    (rest, overrides)
}
