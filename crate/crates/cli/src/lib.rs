//! Library half of the `kwise` experiment runner: config parsing, the
//! experiment dispatch table, the deterministic verify suite and CSV output.

pub mod config;
pub mod experiments;
pub mod table;
pub mod verify;

pub use config::{ExperimentConfig, ExperimentKind, Overrides};
pub use experiments::run;
pub use table::{Assertion, ResultTable};
pub use verify::{verify_suite, Mutation};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] kwise_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}
