//! Synthetic video chunks with known pulse and respiration.
//!
//! Each pixel is a shaded skin colour modulated by the pulse and a slow
//! illumination drift, plus Gaussian noise, then rounded to 8 bits:
//!
//! ```text
//! pixel_c(x, y, t) = clamp8(round(base_c · shade(x, y) · (1 + a·s_c·p(t)) · (1 + d(t)) + n))
//! ```
//!
//! `s_c` are the relative channel strengths (green strongest). The noise
//! draw `n` is shared by the three channels of a pixel. The static shading
//! ramp spreads pixel values across quantization levels so that the box
//! mean keeps sub-level resolution, as real skin texture does.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use thiserror::Error;

use crate::chunkio::{
    ChunkError, ChunkMetadata, ChunkParts, FaceBox, Point, VideoChunk, VitalsLabel, Waveform,
    DURATION_RANGE_S,
};
use crate::rates::FrequencyBand;
use crate::trace::{self, TraceError};

/// Pulse modulation strength per channel, relative to green.
pub const CHANNEL_STRENGTH: [f64; 3] = [0.33 / 0.77, 1.0, 0.53 / 0.77];
pub const DRIFT_HZ: f64 = 0.05;
/// Horizontal and vertical depth of the static shading ramp.
pub const SHADE_DEPTH: (f64, f64) = (0.2, 0.1);
pub const MAX_PULSE_AMPLITUDE: f64 = 0.1;
/// Landmark positions relative to the face box: eyes, nose, mouth corners.
pub const LANDMARK_LAYOUT: [(f64, f64); 5] = [
    (0.3, 0.35),
    (0.7, 0.35),
    (0.5, 0.55),
    (0.35, 0.75),
    (0.65, 0.75),
];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    SpecInvalid(String),
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSpec {
    pub duration_s: f64,
    pub fps: f64,
    pub width: usize,
    pub height: usize,
    pub base_rgb: [f64; 3],
    pub hr_bpm: f64,
    pub rr_bpm: f64,
    /// Fractional pulse modulation of the green channel.
    pub pulse_amplitude: f64,
    pub resp_motion_px: f64,
    /// Fractional amplitude of the 0.05 Hz illumination drift.
    pub illum_drift_amplitude: f64,
    /// Gaussian pixel noise SD in 8-bit units.
    pub pixel_noise_sd: f64,
    pub seed: u64,
    pub age: u32,
    pub gender_male: bool,
    pub skin_type: u8,
    pub camera_stationary: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            duration_s: 10.0,
            fps: 30.0,
            width: 64,
            height: 64,
            base_rgb: [196.0, 140.0, 118.0],
            hr_bpm: 72.0,
            rr_bpm: 15.0,
            pulse_amplitude: 0.01,
            resp_motion_px: 1.0,
            illum_drift_amplitude: 0.0,
            pixel_noise_sd: 0.0,
            seed: 0,
            age: 30,
            gender_male: false,
            skin_type: 3,
            camera_stationary: true,
        }
    }
}

fn invalid(msg: String) -> SynthError {
    SynthError::SpecInvalid(msg)
}

impl SynthSpec {
    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.fps).round() as usize
    }

    /// Face box: the central half of the frame in each dimension.
    pub fn face_box(&self) -> FaceBox {
        FaceBox {
            x: (self.width / 4) as u32,
            y: (self.height / 4) as u32,
            width: (self.width / 2) as u32,
            height: (self.height / 2) as u32,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let (dmin, dmax) = DURATION_RANGE_S;
        if !(self.duration_s >= dmin && self.duration_s <= dmax) {
            return Err(invalid(format!(
                "duration_s {} outside [{dmin}, {dmax}]",
                self.duration_s
            )));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(invalid(format!("fps must be positive, got {}", self.fps)));
        }
        if self.width < 4 || self.height < 4 {
            return Err(invalid(format!(
                "frame must be at least 4x4, got {}x{}",
                self.width, self.height
            )));
        }
        if self.base_rgb.iter().any(|c| !(0.0..=255.0).contains(c)) {
            return Err(invalid(format!("base colour {:?} outside 0-255", self.base_rgb)));
        }
        if !FrequencyBand::HR.contains_bpm(self.hr_bpm) {
            return Err(invalid(format!("hr_bpm {} outside the HR band", self.hr_bpm)));
        }
        if !FrequencyBand::RR.contains_bpm(self.rr_bpm) {
            return Err(invalid(format!("rr_bpm {} outside the RR band", self.rr_bpm)));
        }
        if !(0.0..=MAX_PULSE_AMPLITUDE).contains(&self.pulse_amplitude) {
            return Err(invalid(format!(
                "pulse_amplitude {} outside [0, {MAX_PULSE_AMPLITUDE}]",
                self.pulse_amplitude
            )));
        }
        for (name, v) in [
            ("resp_motion_px", self.resp_motion_px),
            ("pixel_noise_sd", self.pixel_noise_sd),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.illum_drift_amplitude) {
            return Err(invalid(format!(
                "illum_drift_amplitude {} outside [0, 1)",
                self.illum_drift_amplitude
            )));
        }
        if !(1..=6).contains(&self.skin_type) {
            return Err(invalid(format!("skin_type {} outside 1-6", self.skin_type)));
        }
        if self.frame_count() < 2 {
            return Err(invalid("fewer than two frames".into()));
        }
        Ok(())
    }
}

fn sine(freq_hz: f64, n: usize, fps: f64) -> Vec<f64> {
    (0..n)
        .map(|i| (2.0 * PI * freq_hz * i as f64 / fps).sin())
        .collect()
}

/// Renders the chunk described by `spec`. Identical specs give identical chunks.
pub fn generate(spec: &SynthSpec) -> Result<VideoChunk, SynthError> {
    spec.validate()?;
    let (w, h, n) = (spec.width, spec.height, spec.frame_count());
    let pulse = sine(spec.hr_bpm / 60.0, n, spec.fps);
    let resp = sine(spec.rr_bpm / 60.0, n, spec.fps);
    let drift = sine(DRIFT_HZ, n, spec.fps);

    let shaded: Vec<[f64; 3]> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| {
            let s = (1.0 - SHADE_DEPTH.0 * x as f64 / w as f64)
                * (1.0 - SHADE_DEPTH.1 * y as f64 / h as f64);
            spec.base_rgb.map(|c| c * s)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.pixel_noise_sd).expect("sd validated");
    let mut frames = Vec::with_capacity(w * h * 3 * n);
    for t in 0..n {
        let illum = 1.0 + spec.illum_drift_amplitude * drift[t];
        let gain = CHANNEL_STRENGTH.map(|s| (1.0 + spec.pulse_amplitude * s * pulse[t]) * illum);
        for px in &shaded {
            let e = if spec.pixel_noise_sd > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            for c in 0..3 {
                frames.push((px[c] * gain[c] + e).round().clamp(0.0, 255.0) as u8);
            }
        }
    }

    let face = spec.face_box();
    let landmarks = resp
        .iter()
        .map(|r| {
            let dy = spec.resp_motion_px * r;
            LANDMARK_LAYOUT
                .iter()
                .map(|(u, v)| {
                    Point::new(
                        face.x as f64 + u * face.width as f64,
                        face.y as f64 + v * face.height as f64 + dy,
                    )
                })
                .collect()
        })
        .collect();

    let chunk = VideoChunk::from_parts(ChunkParts {
        width: w,
        height: h,
        fps: spec.fps,
        frame_count: n,
        frames,
        face_boxes: vec![face; n],
        landmarks: Some(landmarks),
        labels: VitalsLabel {
            pulse_wave: Waveform::new(pulse, spec.fps)?,
            resp_wave: Waveform::new(resp, spec.fps)?,
            hr_bpm: spec.hr_bpm,
            rr_bpm: spec.rr_bpm,
        },
        metadata: ChunkMetadata::default(),
    })?;
    let movement = trace::movement_score(&chunk)?;
    let illuminance_var = trace::illuminance_variation(&trace::luma_series(&chunk)?);
    Ok(chunk.with_metadata(ChunkMetadata {
        age: spec.age,
        gender_male: spec.gender_male,
        skin_type: spec.skin_type,
        movement,
        illuminance_var,
        camera_stationary: spec.camera_stationary,
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{estimate, estimate_pos, EstimatorId, DEFAULT_WINDOW_S};
    use crate::rates::{rate_from_waveform, Spectrum};
    use crate::trace::extract_trace;

    fn spec(f: impl FnOnce(&mut SynthSpec)) -> SynthSpec {
        let mut s = SynthSpec::default();
        f(&mut s);
        s
    }

    #[test]
    fn static_spec_gives_identical_frames() {
        let c = generate(&spec(|s| {
            s.pulse_amplitude = 0.0;
            s.resp_motion_px = 0.0;
            s.duration_s = 5.0;
        }))
        .unwrap();
        let first = c.frame(0).to_vec();
        assert!((1..c.frame_count()).all(|t| c.frame(t) == first.as_slice()));
        let tr = extract_trace(&c).unwrap();
        for ch in [tr.r(), tr.g(), tr.b()] {
            assert!(ch.iter().all(|&v| v == ch[0]));
        }
        assert_eq!(c.metadata().movement, 0.0);
        assert!(c.metadata().illuminance_var < 1e-12);
    }

    #[test]
    fn pos_recovers_72_bpm() {
        let c = generate(&SynthSpec::default()).unwrap();
        let est = estimate_pos(&extract_trace(&c).unwrap(), DEFAULT_WINDOW_S).unwrap();
        let hr = rate_from_waveform(&est, &FrequencyBand::HR).unwrap();
        assert!((hr - 72.0).abs() <= 0.5, "{hr}");
    }

    #[test]
    fn determinism_per_seed() {
        let s = spec(|s| {
            s.pixel_noise_sd = 3.0;
            s.duration_s = 5.0;
            s.seed = 17;
        });
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        assert_eq!(a, b);
        let c = generate(&SynthSpec { seed: 18, ..s }).unwrap();
        assert_ne!(a.frames(), c.frames());
    }

    #[test]
    fn labels_carry_the_true_rates() {
        for (hr, rr) in [(45.0, 6.0), (72.0, 15.0), (118.0, 30.0), (200.0, 42.0)] {
            let c = generate(&spec(|s| {
                s.hr_bpm = hr;
                s.rr_bpm = rr;
                s.duration_s = 20.0;
                s.width = 8;
                s.height = 8;
            }))
            .unwrap();
            let l = c.labels();
            let h = rate_from_waveform(&l.pulse_wave, &FrequencyBand::HR).unwrap();
            let r = rate_from_waveform(&l.resp_wave, &FrequencyBand::RR).unwrap();
            assert!((h - hr).abs() <= 0.5, "{h} vs {hr}");
            assert!((r - rr).abs() <= 0.5, "{r} vs {rr}");
        }
    }

    #[test]
    fn every_estimator_peaks_at_the_pulse() {
        for f in [0.8, 1.0, 1.5, 2.0] {
            let c = generate(&spec(|s| s.hr_bpm = f * 60.0)).unwrap();
            let tr = extract_trace(&c).unwrap();
            for id in EstimatorId::ALL {
                let w = estimate(id, &tr).unwrap();
                let sp = Spectrum::of(&w);
                let bins = sp.band_bins(&FrequencyBand::HR);
                let peak = bins
                    .clone()
                    .max_by(|&a, &b| sp.mags[a].total_cmp(&sp.mags[b]).then(b.cmp(&a)))
                    .unwrap();
                assert!((sp.freq(peak) - f).abs() <= sp.df, "{id} at {f} Hz: {}", sp.freq(peak));
            }
        }
    }

    #[test]
    fn landmarks_follow_respiration() {
        let s = spec(|s| s.resp_motion_px = 2.0);
        let c = generate(&s).unwrap();
        let lm = c.landmarks().unwrap();
        assert_eq!(lm[0].len(), LANDMARK_LAYOUT.len());
        let face = s.face_box();
        let y0 = face.y as f64 + 0.35 * face.height as f64;
        let ys: Vec<f64> = lm.iter().map(|p| p[0].y - y0).collect();
        let peak = ys.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!((peak - 2.0).abs() < 0.05);
        assert!(c.metadata().movement > 0.0);
    }

    #[test]
    fn drift_raises_illuminance_variation() {
        let still = generate(&spec(|s| s.duration_s = 20.0)).unwrap();
        let drifting = generate(&spec(|s| {
            s.duration_s = 20.0;
            s.illum_drift_amplitude = 0.2;
        }))
        .unwrap();
        assert!(drifting.metadata().illuminance_var > still.metadata().illuminance_var + 0.05);
    }

    #[test]
    fn invalid_specs_rejected() {
        let bad = [
            spec(|s| s.hr_bpm = 300.0),
            spec(|s| s.rr_bpm = 60.0),
            spec(|s| s.pulse_amplitude = 0.2),
            spec(|s| s.pixel_noise_sd = -1.0),
            spec(|s| s.duration_s = 3.0),
            spec(|s| s.base_rgb = [300.0, 0.0, 0.0]),
            spec(|s| s.skin_type = 7),
            spec(|s| s.width = 2),
        ];
        for s in bad {
            assert!(matches!(generate(&s), Err(SynthError::SpecInvalid(_))), "{s:?}");
        }
    }
}
