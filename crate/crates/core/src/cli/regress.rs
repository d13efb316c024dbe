use std::io::Write;
use std::path::PathBuf;

use super::{create_file, ensure_dir, io_err, CliError};
use crate::factors::{fit_ols, MetricsTable, RegressionReport};

pub const REGRESSION_JSON: &str = "regression.json";
pub const REGRESSION_TXT: &str = "regression.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrTarget {
    Pulse,
    Resp,
}

impl SnrTarget {
    pub fn column(self) -> &'static str {
        match self {
            SnrTarget::Pulse => "pulse_snr",
            SnrTarget::Resp => "resp_snr",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressConfig {
    pub chunk_metrics: PathBuf,
    pub target: SnrTarget,
    /// Column names; `skin_type` expands to its dummy columns.
    pub factors: Vec<String>,
    /// Restricts the fit to rows of one estimator, e.g. `POS`.
    pub method: Option<String>,
    pub out: PathBuf,
}

/// Fits the target SNR on the requested factors; writes the report as JSON
/// and as a text table.
pub fn cmd_regress(cfg: &RegressConfig) -> Result<RegressionReport, CliError> {
    let mut table = MetricsTable::read(&cfg.chunk_metrics)?;
    if let Some(m) = &cfg.method {
        table = table.filter_eq("method", m)?;
    }
    if table.is_empty() {
        return Err(CliError::NoUsableData(format!(
            "{} has no rows to regress",
            cfg.chunk_metrics.display()
        )));
    }
    let target = cfg.target.column();
    let (design, y) = table.regression_inputs(target, &cfg.factors)?;
    let report = fit_ols(&design, &y)?.with_dep_variable(target);

    ensure_dir(&cfg.out)?;
    for (name, body) in [
        (REGRESSION_JSON, report.to_json()),
        (REGRESSION_TXT, report.summary()),
    ] {
        let path = cfg.out.join(name);
        let mut f = create_file(&path)?;
        f.write_all(body.as_bytes())
            .and_then(|_| {
                if body.ends_with('\n') {
                    Ok(())
                } else {
                    f.write_all(b"\n")
                }
            })
            .and_then(|_| f.flush())
            .map_err(io_err(&path))?;
    }
    Ok(report)
}
