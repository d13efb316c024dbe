//! Per-chunk evaluation metrics (absolute rate error, SNR, Pearson r) and
//! their dataset-level means.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::chunkio::{VideoChunk, Waveform};
use crate::estimators::EstimationResult;
use crate::rates::{bandpass, rate_from_waveform, FrequencyBand, RateError, Spectrum};

/// Magnitude bound applied to SNR values so dataset means stay finite.
pub const SNR_CAP_DB: f64 = 60.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("true rate {bpm} bpm lies outside the band")]
    RateOutOfBand { bpm: f64 },
    #[error("estimated waveform has no in-band energy")]
    FlatSignal,
    #[error("waveforms differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation undefined for a constant input")]
    ConstantInput,
    #[error("estimate does not share the chunk time base: {0}")]
    TimeBaseMismatch(String),
    #[error("cannot aggregate an empty list of chunk metrics")]
    EmptyList,
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// SNR window settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSettings {
    /// Number of harmonics (fundamental included) counted as signal.
    pub harmonics: usize,
    /// Half width of each signal window in Hz.
    pub half_width_hz: f64,
}

impl SnrSettings {
    pub const PULSE: SnrSettings = SnrSettings {
        harmonics: 2,
        half_width_hz: 0.1,
    };
    pub const RESP: SnrSettings = SnrSettings {
        harmonics: 1,
        half_width_hz: 0.1,
    };
}

/// Bands and SNR settings used by [`evaluate_chunk_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub hr_band: FrequencyBand,
    pub rr_band: FrequencyBand,
    pub pulse_snr: SnrSettings,
    pub resp_snr: SnrSettings,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            hr_band: FrequencyBand::HR,
            rr_band: FrequencyBand::RR,
            pulse_snr: SnrSettings::PULSE,
            resp_snr: SnrSettings::RESP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChunkMetrics {
    pub hr_est: f64,
    pub hr_ae: f64,
    pub pulse_snr: f64,
    pub pulse_r: f64,
    pub rr_est: Option<f64>,
    pub rr_ae: Option<f64>,
    pub resp_snr: Option<f64>,
    pub resp_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetReport {
    pub method: String,
    pub n_chunks: usize,
    pub hr_mae: f64,
    pub pulse_snr: f64,
    pub pulse_r: f64,
    pub rr_mae: Option<f64>,
    pub resp_snr: Option<f64>,
    pub resp_r: Option<f64>,
    pub inference_ms: Option<f64>,
}

pub fn absolute_error(est_bpm: f64, true_bpm: f64) -> f64 {
    (est_bpm - true_bpm).abs()
}

/// Ratio in dB between spectral power near the true rate (and its
/// harmonics) and the remaining in-band power of `est`.
pub fn snr_db(
    est: &Waveform,
    true_rate_bpm: f64,
    band: &FrequencyBand,
    harmonics: usize,
    half_width_hz: f64,
) -> Result<f64, MetricsError> {
    if !band.contains_bpm(true_rate_bpm) {
        return Err(MetricsError::RateOutOfBand {
            bpm: true_rate_bpm,
        });
    }
    let f0 = true_rate_bpm / 60.0;
    let spec = Spectrum::of(est);
    let bins = spec.band_bins(band);
    if bins.is_empty() || spec.is_flat_in(bins.clone()) {
        return Err(MetricsError::FlatSignal);
    }
    let (mut signal, mut noise) = (0.0, 0.0);
    for k in bins {
        let f = spec.freq(k);
        let power = spec.mags[k] * spec.mags[k];
        let near = (1..=harmonics).any(|h| (f - h as f64 * f0).abs() <= half_width_hz);
        if near {
            signal += power;
        } else {
            noise += power;
        }
    }
    if noise == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    if signal == 0.0 {
        return Ok(-SNR_CAP_DB);
    }
    Ok((10.0 * (signal / noise).log10()).clamp(-SNR_CAP_DB, SNR_CAP_DB))
}

/// Pearson product-moment correlation at zero lag.
pub fn pearson_r(est: &Waveform, truth: &Waveform) -> Result<f64, MetricsError> {
    pearson(est.samples(), truth.samples())
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(MetricsError::ConstantInput);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Compares an estimation against the chunk's gold-standard labels using
/// the default bands.
pub fn evaluate_chunk(
    chunk: &VideoChunk,
    result: &EstimationResult,
) -> Result<ChunkMetrics, MetricsError> {
    evaluate_chunk_with(chunk, result, &EvalConfig::default())
}

pub fn evaluate_chunk_with(
    chunk: &VideoChunk,
    result: &EstimationResult,
    cfg: &EvalConfig,
) -> Result<ChunkMetrics, MetricsError> {
    let labels = chunk.labels();
    check_time_base(chunk, &result.pulse_wave, "pulse")?;
    let (hr_est, pulse_snr, pulse_r) = evaluate_wave(
        &result.pulse_wave,
        &labels.pulse_wave,
        labels.hr_bpm,
        &cfg.hr_band,
        cfg.pulse_snr,
    )?;
    let resp = match &result.resp_wave {
        Some(w) => {
            check_time_base(chunk, w, "resp")?;
            Some(evaluate_wave(
                w,
                &labels.resp_wave,
                labels.rr_bpm,
                &cfg.rr_band,
                cfg.resp_snr,
            )?)
        }
        None => None,
    };
    Ok(ChunkMetrics {
        hr_est,
        hr_ae: absolute_error(hr_est, labels.hr_bpm),
        pulse_snr,
        pulse_r,
        rr_est: resp.map(|r| r.0),
        rr_ae: resp.map(|r| absolute_error(r.0, labels.rr_bpm)),
        resp_snr: resp.map(|r| r.1),
        resp_r: resp.map(|r| r.2),
    })
}

fn check_time_base(chunk: &VideoChunk, w: &Waveform, what: &str) -> Result<(), MetricsError> {
    if w.len() != chunk.frame_count() || w.fs() != chunk.fps() {
        return Err(MetricsError::TimeBaseMismatch(format!(
            "{what} estimate has {} samples at {} Hz, chunk has {} frames at {} Hz",
            w.len(),
            w.fs(),
            chunk.frame_count(),
            chunk.fps()
        )));
    }
    Ok(())
}

/// (estimated rate, SNR, r) for one vital.
fn evaluate_wave(
    est: &Waveform,
    truth: &Waveform,
    true_bpm: f64,
    band: &FrequencyBand,
    snr: SnrSettings,
) -> Result<(f64, f64, f64), MetricsError> {
    let rate = rate_from_waveform(est, band).map_err(|e| match e {
        RateError::FlatSignal => MetricsError::FlatSignal,
        other => other.into(),
    })?;
    let s = snr_db(est, true_bpm, band, snr.harmonics, snr.half_width_hz)?;
    let r = pearson_r(&bandpass(est, band)?, &bandpass(truth, band)?)?;
    Ok((rate, s, r))
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Dataset means; optional metrics average only over the chunks that have them.
pub fn aggregate(
    metrics: &[ChunkMetrics],
    method: &str,
    inference_ms: Option<f64>,
) -> Result<DatasetReport, MetricsError> {
    if metrics.is_empty() {
        return Err(MetricsError::EmptyList);
    }
    let all = |f: fn(&ChunkMetrics) -> f64| mean_of(metrics.iter().map(f)).expect("non-empty");
    let some = |f: fn(&ChunkMetrics) -> Option<f64>| mean_of(metrics.iter().filter_map(f));
    Ok(DatasetReport {
        method: method.to_string(),
        n_chunks: metrics.len(),
        hr_mae: all(|m| m.hr_ae),
        pulse_snr: all(|m| m.pulse_snr),
        pulse_r: all(|m| m.pulse_r),
        rr_mae: some(|m| m.rr_ae),
        resp_snr: some(|m| m.resp_snr),
        resp_r: some(|m| m.resp_r),
        inference_ms,
    })
}

pub const RESULTS_HEADER: &str = "method,hr_mae,pulse_snr,pulse_r,rr_mae,resp_snr,resp_r,inference_ms";

pub(crate) fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes reports as CSV; absent values become empty fields.
pub fn write_results_csv<W: Write>(reports: &[DatasetReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method,
            r.hr_mae,
            r.pulse_snr,
            r.pulse_r,
            opt(r.rr_mae),
            opt(r.resp_snr),
            opt(r.resp_r),
            opt(r.inference_ms)
        )?;
    }
    Ok(())
}
