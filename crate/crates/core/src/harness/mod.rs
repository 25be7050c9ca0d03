//! Experiment runner: configuration, pipelines and metrics.

pub mod config;
pub mod experiments;
pub mod metrics;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{run, BerPoint, BerReport, RunOutput};
pub use metrics::{compute_ber, compute_evm, BerCount};
