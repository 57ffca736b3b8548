//! Experiment orchestration behind the command line tool.
//!
//! Every artifact records the hash of the environment definition that
//! produced it, so results from different environments are never mixed.

pub mod config;
pub mod convert;
pub mod eval;
pub mod report;
pub mod train;

pub use config::{env_hash, LoadedConfig, RunConfig};
pub use convert::{cmd_agree, cmd_convert, load_spiking, AgreeOptions};
pub use eval::{cmd_eval, evaluate, Controller, EvalMode, EvalReport};
pub use report::{cmd_report, CurveFile, ReportOutput};
pub use train::{cmd_train, Manifest};

/// Identifies the code that wrote an artifact.
pub const BUILD_ID: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
