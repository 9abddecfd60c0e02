//! Experiment orchestration behind the `fedgraph` binary: splitting,
//! federated training with optional personalization, and graph statistics.

pub mod config;
pub mod metrics;
pub mod run;

pub use config::{ExperimentConfig, Method};

/// A configuration or argument outside its documented range. Reported with
/// exit code 1; every other failure exits with 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ValidationError(pub String);

/// Exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ValidationError>().is_some() {
        1
    } else {
        2
    }
}

/// Mean and population standard deviation; zero deviation for one value.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

pub(crate) fn csv_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}
