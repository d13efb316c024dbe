use std::io::Write;

use serde::Serialize;

use super::FactorError;
use crate::metrics::{opt, ChunkMetrics};

pub const BUCKETS_HEADER: [&str; 6] = [
    "bin",
    "pulse_snr_mean",
    "pulse_snr_sd",
    "resp_snr_mean",
    "resp_snr_sd",
    "n",
];

/// Anything carrying a pulse SNR and an optional respiration SNR.
pub trait SnrSource {
    fn pulse_snr(&self) -> f64;
    fn resp_snr(&self) -> Option<f64>;
}

impl SnrSource for ChunkMetrics {
    fn pulse_snr(&self) -> f64 {
        self.pulse_snr
    }

    fn resp_snr(&self) -> Option<f64> {
        self.resp_snr
    }
}

/// Bare SNR pair, e.g. read back from a metrics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPair {
    pub pulse: f64,
    pub resp: Option<f64>,
}

impl SnrSource for SnrPair {
    fn pulse_snr(&self) -> f64 {
        self.pulse
    }

    fn resp_snr(&self) -> Option<f64> {
        self.resp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bucket {
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    pub pulse_snr_mean: Option<f64>,
    pub pulse_snr_sd: Option<f64>,
    pub resp_snr_mean: Option<f64>,
    pub resp_snr_sd: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketReport {
    pub buckets: Vec<Bucket>,
}

impl BucketReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(BUCKETS_HEADER)?;
        for b in &self.buckets {
            w.write_record([
                b.label.clone(),
                opt(b.pulse_snr_mean),
                opt(b.pulse_snr_sd),
                opt(b.resp_snr_mean),
                opt(b.resp_snr_sd),
                b.n.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean_sd(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    (Some(crate::stats::mean(v)), Some(crate::stats::pop_sd(v)))
}

/// Groups observations into `[lo, hi)` bins (the last bin closed) and
/// summarises pulse and respiration SNR per bin.
pub fn bucket_analysis<S: SnrSource>(
    observations: &[(f64, S)],
    edges: &[f64],
) -> Result<BucketReport, FactorError> {
    if edges.len() < 2 {
        return Err(FactorError::InvalidEdges("at least two edges are needed".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FactorError::InvalidEdges(format!(
            "edges must be finite and strictly increasing: {edges:?}"
        )));
    }
    let bins = edges.len() - 1;
    let mut pulse = vec![Vec::new(); bins];
    let mut resp = vec![Vec::new(); bins];
    let last = edges[bins];
    for (value, obs) in observations {
        let value = *value;
        if !(value >= edges[0] && value <= last) {
            return Err(FactorError::OutOfRange { value });
        }
        // Index of the last edge <= value, capped so the top edge lands in the last bin.
        let bin = (edges.partition_point(|&e| e <= value) - 1).min(bins - 1);
        pulse[bin].push(obs.pulse_snr());
        if let Some(r) = obs.resp_snr() {
            resp[bin].push(r);
        }
    }
    let buckets = (0..bins)
        .map(|i| {
            let (lo, hi) = (edges[i], edges[i + 1]);
            let close = if i + 1 == bins { ']' } else { ')' };
            let (pm, ps) = mean_sd(&pulse[i]);
            let (rm, rs) = mean_sd(&resp[i]);
            Bucket {
                label: format!("[{lo}, {hi}{close}"),
                lo,
                hi,
                pulse_snr_mean: pm,
                pulse_snr_sd: ps,
                resp_snr_mean: rm,
                resp_snr_sd: rs,
                n: pulse[i].len(),
            }
        })
        .collect();
    Ok(BucketReport { buckets })
}
