//! Experiment runner for the `sparsedom` toolkit.
//!
//! Each experiment measures one inequality over a corpus of inputs, weights and
//! resolutions and records the empirical constant `lhs/rhs`. Runs are
//! reproducible from the experiment description and its seed.

pub mod config;
pub mod corpus;
pub mod experiments;
pub mod io;
pub mod report;

pub use config::{ConfigError, Experiment, ExperimentKind, OperatorKind, WeightRecipe};
pub use experiments::run;
pub use report::{FamilyRecord, Metric, Report, SweepRow};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] sparsedom::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("{0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Runs `e` on a dedicated pool of `threads` workers.
pub fn run_parallel(e: &Experiment, threads: usize) -> Result<Report> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?;
    pool.install(|| run(e))
}
