use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{create_file, ensure_dir, io_err, thread_pool, CliError};
use crate::chunkio::{load_chunk, VideoChunk};
use crate::estimators::{self, EstimatorId};
use crate::metrics::{
    aggregate, evaluate_chunk_with, opt, write_results_csv, ChunkMetrics, DatasetReport,
    EvalConfig,
};
use crate::rates::FrequencyBand;

pub const RESULTS_FILE: &str = "results.csv";
pub const CHUNK_METRICS_FILE: &str = "chunk_metrics.csv";

pub const CHUNK_METRICS_HEADER: [&str; 25] = [
    "chunk",
    "method",
    "hr_est",
    "hr_ae",
    "pulse_snr",
    "pulse_r",
    "rr_est",
    "rr_ae",
    "resp_snr",
    "resp_r",
    "hr",
    "rr",
    "age",
    "gender_male",
    "skin_type",
    "skin_type_2",
    "skin_type_3",
    "skin_type_4",
    "skin_type_5",
    "skin_type_6",
    "movement",
    "illuminance_var",
    "camera_stationary",
    "fps",
    "duration_s",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub methods: Vec<EstimatorId>,
    pub out: PathBuf,
    pub hr_band: FrequencyBand,
    pub rr_band: FrequencyBand,
    pub workers: usize,
}

impl RunConfig {
    pub fn new(dataset: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            methods: EstimatorId::ALL.to_vec(),
            out: out.into(),
            hr_band: FrequencyBand::HR,
            rr_band: FrequencyBand::RR,
            workers: 1,
        }
    }
}

/// A chunk (and method, if the chunk itself loaded) that produced no metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedItem {
    pub chunk: String,
    pub method: Option<EstimatorId>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub reports: Vec<DatasetReport>,
    pub chunks_total: usize,
    pub chunks_evaluated: usize,
    pub skipped: Vec<SkippedItem>,
}

struct Row {
    chunk: String,
    method: EstimatorId,
    metrics: ChunkMetrics,
}

/// Metric records, result rows and skips for one chunk directory.
type DirOutcome = (Vec<Vec<String>>, Vec<Row>, Vec<SkippedItem>);

fn chunk_dirs(root: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !root.is_dir() {
        return Err(CliError::Usage(format!(
            "dataset root {} is not a directory",
            root.display()
        )));
    }
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(io_err(root))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

fn evaluate_dir(
    dir: &Path,
    cfg: &RunConfig,
    eval: &EvalConfig,
) -> (Option<VideoChunk>, Vec<Result<Row, SkippedItem>>) {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let chunk = match load_chunk(dir) {
        Ok(c) => c,
        Err(e) => {
            return (
                None,
                vec![Err(SkippedItem {
                    chunk: name,
                    method: None,
                    reason: e.to_string(),
                })],
            )
        }
    };
    let rows = cfg
        .methods
        .iter()
        .map(|&id| {
            let outcome = estimators::run(id, &chunk)
                .map_err(|e| e.to_string())
                .and_then(|res| evaluate_chunk_with(&chunk, &res, eval).map_err(|e| e.to_string()));
            match outcome {
                Ok(metrics) => Ok(Row {
                    chunk: name.clone(),
                    method: id,
                    metrics,
                }),
                Err(reason) => Err(SkippedItem {
                    chunk: name.clone(),
                    method: Some(id),
                    reason,
                }),
            }
        })
        .collect();
    (Some(chunk), rows)
}

fn metrics_record(row: &Row, chunk: &VideoChunk) -> Vec<String> {
    let m = &row.metrics;
    let meta = chunk.metadata();
    let labels = chunk.labels();
    let flag = |b: bool| u8::from(b).to_string();
    let mut rec = vec![
        row.chunk.clone(),
        row.method.name().to_string(),
        m.hr_est.to_string(),
        m.hr_ae.to_string(),
        m.pulse_snr.to_string(),
        m.pulse_r.to_string(),
        opt(m.rr_est),
        opt(m.rr_ae),
        opt(m.resp_snr),
        opt(m.resp_r),
        labels.hr_bpm.to_string(),
        labels.rr_bpm.to_string(),
        meta.age.to_string(),
        flag(meta.gender_male),
        meta.skin_type.to_string(),
    ];
    // skin_type_2 .. skin_type_6; type 1 is the base case.
    rec.extend((2..=6).map(|k| flag(meta.skin_type == k)));
    rec.extend([
        meta.movement.to_string(),
        meta.illuminance_var.to_string(),
        flag(meta.camera_stationary),
        chunk.fps().to_string(),
        chunk.duration().to_string(),
    ]);
    rec
}

/// Evaluates every chunk directory under the dataset root with every
/// selected method; writes `chunk_metrics.csv` and `results.csv`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    if cfg.methods.is_empty() {
        return Err(CliError::Usage("method set is empty".into()));
    }
    let dirs = chunk_dirs(&cfg.dataset)?;
    let eval = EvalConfig {
        hr_band: cfg.hr_band,
        rr_band: cfg.rr_band,
        ..EvalConfig::default()
    };
    let pool = thread_pool(cfg.workers)?;
    // Collecting from an indexed parallel iterator keeps directory order.
    let per_dir: Vec<DirOutcome> =
        pool.install(|| {
            dirs.par_iter()
                .map(|d| {
                    let (chunk, outcomes) = evaluate_dir(d, cfg, &eval);
                    let mut rows = Vec::new();
                    let mut skipped = Vec::new();
                    for o in outcomes {
                        match o {
                            Ok(r) => rows.push(r),
                            Err(s) => skipped.push(s),
                        }
                    }
                    let records = match &chunk {
                        Some(c) => rows.iter().map(|r| metrics_record(r, c)).collect(),
                        None => Vec::new(),
                    };
                    (records, rows, skipped)
                })
                .collect()
        });

    let chunks_total = dirs.len();
    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (rec, r, s) in per_dir {
        records.extend(rec);
        rows.extend(r);
        skipped.extend(s);
    }
    for s in &skipped {
        match s.method {
            Some(m) => log::warn!("skipping {} / {m}: {}", s.chunk, s.reason),
            None => log::warn!("skipping {}: {}", s.chunk, s.reason),
        }
    }
    if rows.is_empty() {
        return Err(CliError::NoUsableData(format!(
            "no chunk under {} could be evaluated ({} directories, {} skipped)",
            cfg.dataset.display(),
            chunks_total,
            skipped.len()
        )));
    }
    let mut evaluated: Vec<&str> = rows.iter().map(|r| r.chunk.as_str()).collect();
    evaluated.dedup();
    let chunks_evaluated = evaluated.len();

    ensure_dir(&cfg.out)?;
    let path = cfg.out.join(CHUNK_METRICS_FILE);
    let mut w = csv::Writer::from_writer(create_file(&path)?);
    w.write_record(CHUNK_METRICS_HEADER)?;
    for rec in &records {
        w.write_record(rec)?;
    }
    w.flush().map_err(io_err(&path))?;

    let reports: Vec<DatasetReport> = cfg
        .methods
        .iter()
        .filter_map(|&id| {
            let ms: Vec<ChunkMetrics> = rows
                .iter()
                .filter(|r| r.method == id)
                .map(|r| r.metrics.clone())
                .collect();
            aggregate(&ms, id.name(), None).ok()
        })
        .collect();
    let path = cfg.out.join(RESULTS_FILE);
    let mut f = create_file(&path)?;
    write_results_csv(&reports, &mut f).map_err(io_err(&path))?;
    f.flush().map_err(io_err(&path))?;

    Ok(RunSummary {
        reports,
        chunks_total,
        chunks_evaluated,
        skipped,
    })
}
