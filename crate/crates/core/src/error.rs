use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid neuron parameters: {0}")]
    InvalidNeuronParams(String),

    #[error("invalid layer dimensions {dims:?}: {reason}")]
    InvalidDims { dims: Vec<usize>, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("tape does not belong to this network state ({0})")]
    StaleTape(String),

    #[error("checkpoint parse error: {0}")]
    CheckpointParse(String),

    #[error("unsupported checkpoint format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: i64, supported: i64 },

    #[error("incompatible network: {0}")]
    IncompatibleNetwork(String),

    #[error("invalid PPO configuration: {0}")]
    InvalidPpoConfig(String),

    #[error("empty rollout buffer")]
    EmptyBuffer,

    #[error("non-finite value during update: {0}")]
    NonFinite(String),

    #[error("invalid quantization spec: {0}")]
    InvalidQuant(String),

    #[error("invalid spiking settings: {0}")]
    InvalidSpiking(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("spawn zone for {team} holds {capacity} cells but {requested} agents were requested")]
    SpawnOverfull {
        team: &'static str,
        capacity: usize,
        requested: usize,
    },

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("episode already terminated")]
    EpisodeTerminated,

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    InvalidConfig(Vec<String>),

    #[error("{0}")]
    Report(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
