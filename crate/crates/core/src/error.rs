use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulator, planner, controllers, trainer and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("simulation fault: {0}")]
    SimulationFault(String),

    #[error("controller fault: {0}")]
    ControllerFault(String),

    #[error("network fault at layer {layer}: {reason}")]
    NetworkFault { layer: usize, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged at epoch {epoch} (loss {loss}); try a smaller learning_rate")]
    Diverged { epoch: usize, loss: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("format fault in {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("data fault: {0}")]
    Data(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
