use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] inertia_core::Error),
    #[error("run `{label}`{}: {source}", seed.map(|s| format!(" (seed {s})")).unwrap_or_default())]
    Run {
        label: String,
        seed: Option<u64>,
        #[source]
        source: inertia_core::Error,
    },
    #[error("unknown preset `{0}` (expected fig12, fig34 or fig45)")]
    UnknownPreset(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// True for blow-ups (divergence or non-finite state), which map to exit code 3.
    pub fn is_divergence(&self) -> bool {
        use inertia_core::Error as E;
        let core = match self {
            CliError::Core(e) | CliError::Run { source: e, .. } => e,
            _ => return false,
        };
        matches!(core, E::Divergence { .. } | E::NonFiniteIterate { .. } | E::NonFiniteState { .. })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
