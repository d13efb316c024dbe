//! Heart and respiratory rate extraction via FFT.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::chunkio::{ChunkError, Waveform};

/// Finest spectral grid used for peak search, in Hz (0.5 bpm).
pub const MAX_BIN_SPACING_HZ: f64 = 0.5 / 60.0;

#[derive(Debug, Error)]
pub enum RateError {
    #[error("band [{lo}, {hi}] Hz is invalid")]
    InvalidBand { lo: f64, hi: f64 },
    #[error("band upper edge {hi} Hz is not below Nyquist ({nyquist} Hz)")]
    BandAboveNyquist { hi: f64, nyquist: f64 },
    #[error("no spectral bins fall inside [{lo}, {hi}] Hz")]
    EmptyBand { lo: f64, hi: f64 },
    #[error("signal has no energy inside the band")]
    FlatSignal,
    #[error(transparent)]
    Waveform(#[from] ChunkError),
}

/// Closed frequency interval `[lo, hi]` in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    lo: f64,
    hi: f64,
}

impl FrequencyBand {
    /// Heart-rate passband, 40-240 bpm.
    pub const HR: FrequencyBand = FrequencyBand { lo: 0.667, hi: 4.0 };
    /// Respiratory-rate passband, 4-45 bpm.
    pub const RR: FrequencyBand = FrequencyBand { lo: 0.067, hi: 0.75 };

    pub fn new(lo: f64, hi: f64) -> Result<Self, RateError> {
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
            return Err(RateError::InvalidBand { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.lo && f <= self.hi
    }

    pub fn contains_bpm(&self, bpm: f64) -> bool {
        self.contains(bpm / 60.0)
    }
}

/// Periodic Hann window of length `n`.
pub(crate) fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// One-sided magnitude spectrum of the mean-removed, Hann-windowed signal,
/// zero-padded to a power of two with bin spacing at most [`MAX_BIN_SPACING_HZ`].
#[derive(Debug, Clone)]
pub(crate) struct Spectrum {
    /// Magnitudes for bins `0..=n_fft/2`.
    pub mags: Vec<f64>,
    /// Bin spacing in Hz.
    pub df: f64,
    /// Sum of absolute input values, the reference for flatness checks.
    pub scale: f64,
}

impl Spectrum {
    pub fn of(w: &Waveform) -> Self {
        let x = w.samples();
        let n = x.len();
        let min_len = (w.fs() / MAX_BIN_SPACING_HZ).ceil() as usize;
        let n_fft = n.max(min_len).next_power_of_two();
        let mean = x.iter().sum::<f64>() / n as f64;
        let win = hann(n);
        let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); n_fft];
        for i in 0..n {
            buf[i].re = (x[i] - mean) * win[i];
        }
        FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
        Self {
            mags: buf[..=n_fft / 2].iter().map(|c| c.norm()).collect(),
            df: w.fs() / n_fft as f64,
            scale: x.iter().map(|v| v.abs()).sum(),
        }
    }

    pub fn freq(&self, k: usize) -> f64 {
        k as f64 * self.df
    }

    /// Indices of bins whose frequency lies inside `band`.
    pub fn band_bins(&self, band: &FrequencyBand) -> std::ops::Range<usize> {
        let lo = (band.lo / self.df).ceil() as usize;
        let hi = ((band.hi / self.df).floor() as usize).min(self.mags.len() - 1);
        // Guard the ceil/floor against rounding at exact bin frequencies.
        let lo = (lo.saturating_sub(1)..=lo + 1)
            .find(|&k| band.contains(self.freq(k)))
            .unwrap_or(lo);
        let hi = (hi.saturating_sub(1)..=hi + 1)
            .rev()
            .find(|&k| k < self.mags.len() && band.contains(self.freq(k)))
            .unwrap_or(hi);
        lo..hi + 1
    }

    /// True when the in-band spectrum carries no energy relative to the input.
    pub fn is_flat_in(&self, bins: std::ops::Range<usize>) -> bool {
        let peak = self.mags[bins].iter().fold(0.0_f64, |a, &b| a.max(b));
        self.scale == 0.0 || peak <= 1e-12 * self.scale
    }
}

/// Frequency-domain mask filter: zeroes every FFT bin outside `band`
/// (including DC) and transforms back. Length and rate are preserved.
pub fn bandpass(w: &Waveform, band: &FrequencyBand) -> Result<Waveform, RateError> {
    let nyquist = w.fs() / 2.0;
    if band.hi >= nyquist {
        return Err(RateError::BandAboveNyquist {
            hi: band.hi,
            nyquist,
        });
    }
    let n = w.len();
    let mut buf: Vec<Complex<f64>> = w.samples().iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * w.fs() / n as f64;
        if !band.contains(f) {
            *c = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let out = buf.iter().map(|c| c.re / n as f64).collect();
    Ok(Waveform::new(out, w.fs())?)
}

/// Dominant in-band rate of `w` in per-minute units (bpm).
///
/// Peak search runs on the windowed, zero-padded magnitude spectrum; the
/// argmax bin (lowest frequency on ties) is refined by a parabola through it
/// and its two neighbours.
pub fn rate_from_waveform(w: &Waveform, band: &FrequencyBand) -> Result<f64, RateError> {
    if w.duration() < 5.0 {
        log::warn!(
            "rate extraction on a {:.2} s waveform; resolution will be poor",
            w.duration()
        );
    }
    let spec = Spectrum::of(w);
    let bins = spec.band_bins(band);
    if bins.is_empty() {
        return Err(RateError::EmptyBand {
            lo: band.lo,
            hi: band.hi,
        });
    }
    if spec.is_flat_in(bins.clone()) {
        return Err(RateError::FlatSignal);
    }
    let mut k = bins.start;
    for i in bins {
        if spec.mags[i] > spec.mags[k] {
            k = i;
        }
    }
    let mut offset = 0.0;
    if k >= 1 && k + 1 < spec.mags.len() {
        let (a, b, c) = (spec.mags[k - 1], spec.mags[k], spec.mags[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    Ok(60.0 * (k as f64 + offset) * spec.df)
}
