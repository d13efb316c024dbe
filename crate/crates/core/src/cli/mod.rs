//! Library side of the `rppg-bench` subcommands. Each command takes a plain
//! config struct, writes its files under the output directory and returns
//! what it wrote, so tests can drive it without a process boundary.

mod buckets;
mod regress;
mod run;
mod synth;
mod timing;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::chunkio::ChunkError;
use crate::factors::FactorError;
use crate::synth::SynthError;

pub use buckets::{cmd_buckets, BucketsConfig, BUCKETS_FILE};
pub use regress::{cmd_regress, RegressConfig, SnrTarget, REGRESSION_JSON, REGRESSION_TXT};
pub use run::{cmd_run, RunConfig, RunSummary, SkippedItem, CHUNK_METRICS_FILE, CHUNK_METRICS_HEADER, RESULTS_FILE};
pub use synth::{cmd_synth, SynthConfig, MANIFEST_FILE};
pub use timing::{cmd_timing, TimingConfig, TimingReport, TIMING_FILE, WARMUP_ITERATIONS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO_DATA: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("no usable data: {0}")]
    NoUsableData(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NoUsableData(_) => EXIT_NO_DATA,
            CliError::Factor(FactorError::TooFewObservations { .. }) => EXIT_NO_DATA,
            _ => EXIT_USAGE,
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn create_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(io_err(path))
}

pub(crate) fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    if workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))
}
