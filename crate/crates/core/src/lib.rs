//! Benchmarking toolkit for handcrafted remote-photoplethysmography (rPPG)
//! estimators.
//!
//! The pipeline runs from on-disk video chunks to dataset-level reports:
//!
//! - [`chunkio`]: chunk data model and the raw on-disk format
//! - [`trace`]: face-box RGB traces plus movement / illuminance factors
//! - [`estimators`]: G, CHROM and POS pulse extraction, landmark respiration
//! - [`rates`]: FFT heart / respiratory rate extraction and band filtering
//! - [`metrics`]: absolute error, SNR and Pearson r per chunk, and their means
//! - [`factors`]: OLS factor regression and bucketed SNR summaries
//! - [`synth`]: synthetic chunks with known vitals
//! - [`cli`]: the `rppg-bench` subcommands

pub mod chunkio;
pub mod cli;
pub mod estimators;
pub mod factors;
pub mod metrics;
pub mod rates;
pub mod synth;
pub mod trace;

mod stats;

pub use chunkio::{
    load_chunk, save_chunk, ChunkError, ChunkMetadata, ChunkParts, FaceBox, Point, VideoChunk,
    VitalsLabel, Waveform,
};
pub use estimators::{EstimationResult, EstimatorId};
pub use metrics::{ChunkMetrics, DatasetReport};
pub use rates::FrequencyBand;
pub use synth::SynthSpec;
pub use trace::RgbTrace;
