use std::path::PathBuf;

use super::{create_file, ensure_dir, CliError};
use crate::factors::{bucket_analysis, BucketReport, MetricsTable};

pub const BUCKETS_FILE: &str = "buckets.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct BucketsConfig {
    pub chunk_metrics: PathBuf,
    pub factor: String,
    pub edges: Vec<f64>,
    pub method: Option<String>,
    pub out: PathBuf,
}

/// Groups chunk SNRs by `factor` level and writes `buckets.csv`.
pub fn cmd_buckets(cfg: &BucketsConfig) -> Result<BucketReport, CliError> {
    let mut table = MetricsTable::read(&cfg.chunk_metrics)?;
    if let Some(m) = &cfg.method {
        table = table.filter_eq("method", m)?;
    }
    let obs = table.bucket_observations(&cfg.factor)?;
    if obs.is_empty() {
        return Err(CliError::NoUsableData(format!(
            "no rows with both {} and pulse_snr",
            cfg.factor
        )));
    }
    let report = bucket_analysis(&obs, &cfg.edges)?;
    ensure_dir(&cfg.out)?;
    report.write_csv(create_file(&cfg.out.join(BUCKETS_FILE))?)?;
    Ok(report)
}
