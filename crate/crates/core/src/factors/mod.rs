//! Factor analysis: OLS regression of SNR on chunk factors, and SNR
//! summaries grouped by factor level.

mod buckets;
mod design;
pub mod dist;
mod ols;
mod table;

use std::path::PathBuf;

use thiserror::Error;

pub use buckets::{bucket_analysis, Bucket, BucketReport, SnrPair, SnrSource, BUCKETS_HEADER};
pub use design::{DesignMatrix, INTERCEPT, SKIN_TYPE_DUMMIES};
pub use dist::{f_sf, student_t_quantile, student_t_sf, student_t_two_sided};
pub use ols::{fit_ols, Coefficient, RegressionReport, MAX_CONDITION};
pub use table::MetricsTable;

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("singular design (condition number {condition:.3e}); dependent columns: {}", columns.join(", "))]
    SingularDesign { columns: Vec<String>, condition: f64 },
    #[error("too few observations: n = {n} with {p} columns")]
    TooFewObservations { n: usize, p: usize },
    #[error("column {0} is constant")]
    ConstantColumn(String),
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("invalid bucket edges: {0}")]
    InvalidEdges(String),
    #[error("value {value} falls outside the bucket edges")]
    OutOfRange { value: f64 },
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("column {column}: cannot parse {value:?} as a number")]
    BadCell { column: String, value: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
