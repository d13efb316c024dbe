use std::hint::black_box;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use super::{create_file, ensure_dir, io_err, CliError};
use crate::estimators::{EstimatorId, SlidingEstimator, DEFAULT_WINDOW_S};
use crate::synth::{generate, SynthSpec};
use crate::trace::box_mean;

pub const TIMING_FILE: &str = "timing.csv";
pub const WARMUP_ITERATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct TimingConfig {
    pub method: EstimatorId,
    pub width: usize,
    pub height: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Where to write `timing.csv`; nothing is written when `None`.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub method: String,
    pub width: usize,
    pub height: usize,
    pub iterations: usize,
    pub mean_ms: f64,
    pub sd_ms: f64,
}

/// Per-frame latency of the marginal work for one new frame: face-box mean
/// plus one sliding-window estimator update.
pub fn cmd_timing(cfg: &TimingConfig) -> Result<TimingReport, CliError> {
    if cfg.iterations == 0 {
        return Err(CliError::Usage("iterations must be at least 1".into()));
    }
    let spec = SynthSpec {
        width: cfg.width,
        height: cfg.height,
        duration_s: 5.0,
        pixel_noise_sd: 2.0,
        seed: cfg.seed,
        ..SynthSpec::default()
    };
    let chunk = generate(&spec)?;
    let face = spec.face_box();
    let mut est = SlidingEstimator::new(cfg.method, chunk.fps(), DEFAULT_WINDOW_S)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let frames = chunk.frame_count();
    let step = |est: &mut SlidingEstimator, t: usize| {
        let m = box_mean(chunk.frame(t % frames), chunk.width(), &face);
        black_box(est.push(m[0], m[1], m[2]));
    };
    // Fill the window first so every timed push does a full update.
    for t in 0..est.window_len() + WARMUP_ITERATIONS {
        step(&mut est, t);
    }
    let offset = est.window_len() + WARMUP_ITERATIONS;
    let samples: Vec<f64> = (0..cfg.iterations)
        .map(|i| {
            let start = Instant::now();
            step(&mut est, offset + i);
            start.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    let report = TimingReport {
        method: cfg.method.name().to_string(),
        width: cfg.width,
        height: cfg.height,
        iterations: cfg.iterations,
        mean_ms: crate::stats::mean(&samples),
        sd_ms: crate::stats::pop_sd(&samples),
    };
    if let Some(out) = &cfg.out {
        ensure_dir(out)?;
        let path = out.join(TIMING_FILE);
        let mut f = create_file(&path)?;
        writeln!(f, "method,width,height,iterations,mean_ms,sd_ms")
            .and_then(|_| {
                writeln!(
                    f,
                    "{},{},{},{},{},{}",
                    report.method,
                    report.width,
                    report.height,
                    report.iterations,
                    report.mean_ms,
                    report.sd_ms
                )
            })
            .and_then(|_| f.flush())
            .map_err(io_err(&path))?;
    }
    Ok(report)
}
