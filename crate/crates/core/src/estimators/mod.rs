//! Handcrafted pulse estimators (G, CHROM, POS) and a landmark-based
//! respiration estimator.
//!
//! All estimators return a standardized (zero-mean, unit-variance) waveform
//! with the same length and sampling rate as their input.

mod stream;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::chunkio::{ChunkError, VideoChunk, Waveform};
use crate::rates::hann;
use crate::stats;
use crate::trace::{self, RgbTrace, TraceError};

pub use stream::SlidingEstimator;

/// Default CHROM / POS window length in seconds.
pub const DEFAULT_WINDOW_S: f64 = 1.6;

/// Windows whose projection spread is at or below this (in units of the
/// temporally normalized channels, which sit around 1.0) contribute zeros.
const DEGENERATE_SIGMA: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("trace of {len} samples is shorter than the {window}-sample window")]
    TraceTooShort { len: usize, window: usize },
    #[error("window of {0} s is too short at this sampling rate")]
    InvalidWindow(f64),
    #[error("chunk has no landmarks")]
    NoLandmarks,
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Chunk(#[from] ChunkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorId {
    G,
    Chrom,
    Pos,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 3] = [EstimatorId::G, EstimatorId::Chrom, EstimatorId::Pos];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorId::G => "G",
            EstimatorId::Chrom => "CHROM",
            EstimatorId::Pos => "POS",
        }
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "G" => Ok(EstimatorId::G),
            "CHROM" => Ok(EstimatorId::Chrom),
            "POS" => Ok(EstimatorId::Pos),
            other => Err(format!("unknown estimator `{other}` (expected G, CHROM or POS)")),
        }
    }
}

/// Output of running one estimator on one chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub pulse_wave: Waveform,
    pub resp_wave: Option<Waveform>,
}

fn window_len(window_s: f64, fs: f64) -> Result<usize, EstimatorError> {
    let l = (window_s * fs).round();
    if !(l.is_finite() && l >= 2.0) {
        return Err(EstimatorError::InvalidWindow(window_s));
    }
    Ok(l as usize)
}

/// Each channel divided by its mean over the window; `None` when a mean is not positive.
fn temporal_normalize(r: &[f64], g: &[f64], b: &[f64]) -> Option<[Vec<f64>; 3]> {
    let norm = |c: &[f64]| {
        let m = stats::mean(c);
        (m > 0.0).then(|| c.iter().map(|v| v / m).collect::<Vec<_>>())
    };
    Some([norm(r)?, norm(g)?, norm(b)?])
}

/// One CHROM window: mean-removed, Hann-weighted chrominance signal.
pub(crate) fn chrom_window(r: &[f64], g: &[f64], b: &[f64], taper: &[f64]) -> Option<Vec<f64>> {
    let [rn, gn, bn] = temporal_normalize(r, g, b)?;
    let x: Vec<f64> = rn.iter().zip(&gn).map(|(r, g)| 3.0 * r - 2.0 * g).collect();
    let y: Vec<f64> = (0..rn.len())
        .map(|i| 1.5 * rn[i] + gn[i] - 1.5 * bn[i])
        .collect();
    let sy = stats::pop_sd(&y);
    if sy <= DEGENERATE_SIGMA {
        return None;
    }
    let alpha = stats::pop_sd(&x) / sy;
    let s: Vec<f64> = x.iter().zip(&y).map(|(x, y)| x - alpha * y).collect();
    let m = stats::mean(&s);
    Some(s.iter().zip(taper).map(|(v, w)| (v - m) * w).collect())
}

/// One POS window: mean-removed projection onto the plane orthogonal to skin tone.
pub(crate) fn pos_window(r: &[f64], g: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let [rn, gn, bn] = temporal_normalize(r, g, b)?;
    let s1: Vec<f64> = gn.iter().zip(&bn).map(|(g, b)| g - b).collect();
    let s2: Vec<f64> = (0..rn.len())
        .map(|i| gn[i] + bn[i] - 2.0 * rn[i])
        .collect();
    let sd2 = stats::pop_sd(&s2);
    if sd2 <= DEGENERATE_SIGMA {
        return None;
    }
    let alpha = stats::pop_sd(&s1) / sd2;
    let h: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| a + alpha * b).collect();
    let m = stats::mean(&h);
    Some(h.iter().map(|v| v - m).collect())
}

/// Raw CHROM overlap-add (Hann windows, 50% overlap), before standardization.
pub(crate) fn chrom_overlap_add(trace: &RgbTrace, len: usize) -> Vec<f64> {
    let n = trace.len();
    let hop = (len / 2).max(1);
    let taper = hann(len);
    let mut out = vec![0.0; n];
    let mut start = 0;
    while start + len <= n {
        let span = start..start + len;
        match chrom_window(
            &trace.r()[span.clone()],
            &trace.g()[span.clone()],
            &trace.b()[span],
            &taper,
        ) {
            Some(s) => out[start..start + len]
                .iter_mut()
                .zip(s)
                .for_each(|(o, v)| *o += v),
            None => log::debug!("CHROM window at {start} is degenerate"),
        }
        start += hop;
    }
    out
}

/// Raw POS overlap-add (stride 1), before standardization.
pub(crate) fn pos_overlap_add(trace: &RgbTrace, len: usize) -> Vec<f64> {
    let n = trace.len();
    let mut out = vec![0.0; n];
    for start in 0..=n - len {
        let span = start..start + len;
        if let Some(h) = pos_window(
            &trace.r()[span.clone()],
            &trace.g()[span.clone()],
            &trace.b()[span],
        ) {
            out[start..start + len]
                .iter_mut()
                .zip(h)
                .for_each(|(o, v)| *o += v);
        }
    }
    out
}

/// Negated, standardized green channel.
pub fn estimate_g(trace: &RgbTrace) -> Waveform {
    let neg: Vec<f64> = trace.g().iter().map(|v| -v).collect();
    let scale = stats::max_abs(&neg);
    Waveform::new(stats::standardize(&neg, scale), trace.fs()).expect("trace has >= 2 samples")
}

pub fn estimate_chrom(trace: &RgbTrace, window_s: f64) -> Result<Waveform, EstimatorError> {
    let len = window_len(window_s, trace.fs())?;
    if trace.len() < len {
        return Err(EstimatorError::TraceTooShort {
            len: trace.len(),
            window: len,
        });
    }
    let raw = chrom_overlap_add(trace, len);
    Ok(Waveform::new(stats::standardize(&raw, 1.0), trace.fs())?)
}

pub fn estimate_pos(trace: &RgbTrace, window_s: f64) -> Result<Waveform, EstimatorError> {
    let len = window_len(window_s, trace.fs())?;
    if trace.len() < len {
        return Err(EstimatorError::TraceTooShort {
            len: trace.len(),
            window: len,
        });
    }
    let raw = pos_overlap_add(trace, len);
    Ok(Waveform::new(stats::standardize(&raw, 1.0), trace.fs())?)
}

/// Runs `id` with its default parameters.
pub fn estimate(id: EstimatorId, trace: &RgbTrace) -> Result<Waveform, EstimatorError> {
    match id {
        EstimatorId::G => Ok(estimate_g(trace)),
        EstimatorId::Chrom => estimate_chrom(trace, DEFAULT_WINDOW_S),
        EstimatorId::Pos => estimate_pos(trace, DEFAULT_WINDOW_S),
    }
}

/// Standardized mean vertical landmark position, detrended by a centered
/// moving average two seconds wide.
pub fn estimate_resp_from_landmarks(chunk: &VideoChunk) -> Result<Waveform, EstimatorError> {
    let lm = chunk.landmarks().ok_or(EstimatorError::NoLandmarks)?;
    let y: Vec<f64> = lm
        .iter()
        .map(|pts| pts.iter().map(|p| p.y).sum::<f64>() / pts.len() as f64)
        .collect();
    let width = ((2.0 * chunk.fps()).round() as usize).max(1);
    let detrended: Vec<f64> = moving_average(&y, width)
        .iter()
        .zip(&y)
        .map(|(m, v)| v - m)
        .collect();
    let scale = stats::max_abs(&y).max(1.0);
    Ok(Waveform::new(
        stats::standardize(&detrended, scale),
        chunk.fps(),
    )?)
}

/// Centered moving average; the window is truncated at the edges.
fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    let before = (width - 1) / 2;
    let after = width / 2;
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + x[i];
    }
    (0..n)
        .map(|t| {
            let lo = t.saturating_sub(before);
            let hi = (t + after + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Extracts the trace of `chunk` and runs `id`; respiration is filled in
/// when the chunk carries landmarks.
pub fn run(id: EstimatorId, chunk: &VideoChunk) -> Result<EstimationResult, EstimatorError> {
    let tr = trace::extract_trace(chunk)?;
    let pulse_wave = estimate(id, &tr)?;
    let resp_wave = match chunk.landmarks() {
        Some(_) => Some(estimate_resp_from_landmarks(chunk)?),
        None => None,
    };
    Ok(EstimationResult {
        pulse_wave,
        resp_wave,
    })
}
