use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the map, simulator, planners and mission runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("position {0:?} is outside the map bounds")]
    OutOfBounds([f64; 3]),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("planning space unavailable: empty scan and no fallback box")]
    PlanningSpace,

    #[error("robot pose is not within reach of any graph node")]
    Anchor,

    #[error("simulation fault: {0}")]
    Simulation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
