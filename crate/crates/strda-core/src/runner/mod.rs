//! Experiment orchestration: configuration, metrics, evaluation, the full
//! pipeline, hyper-parameter sweeps and reporting.

pub mod ablate;
pub mod config;
pub mod correlate;
pub mod eval;
pub mod experiment;
pub mod metrics;
pub mod report;

pub use ablate::{ablate, SweepParam, SweepPoint};
pub use config::{EstimatorKind, ExperimentConfig};
pub use correlate::{correlate_scores, spearman};
pub use eval::{auc, evaluate, pseudo_accuracy};
pub use experiment::{run_experiment, run_seed, ExperimentOutcome, SeedContext, SeedOutcome};
pub use metrics::{read_metrics, MetricsRecord, MetricsWriter};
pub use report::report;
