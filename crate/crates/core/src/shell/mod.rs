//! Configuration, command execution and file output for the CLI.

pub mod config;
pub mod output;
pub mod run;
pub mod svg;
pub mod verify;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{load_config, load_config_str, Normalization, PhysicalParams, RunConfig};
pub use run::{run_gain_profile, run_psd, run_trace, RunSummary};
pub use svg::emit_svg;
pub use verify::{render_table, verify, verify_with, CheckOutcome, VerifyOptions};

#[derive(Debug, Error)]
pub enum ShellError {
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("config parse error: {0}")]
    ConfigSyntax(#[from] serde_json::Error),

    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Compute(#[from] crate::Error),
}

impl ShellError {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ShellError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ShellError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for bad input, 3 for failures while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            ShellError::Config { .. } | ShellError::ConfigSyntax(_) | ShellError::Parse { .. } | ShellError::Io { .. } => 2,
            ShellError::Compute(crate::Error::InvalidArgument { .. }) => 2,
            ShellError::Compute(_) => 3,
        }
    }
}

pub type ShellResult<T> = std::result::Result<T, ShellError>;
