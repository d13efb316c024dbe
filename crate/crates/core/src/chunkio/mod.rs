//! Chunk data model and on-disk format.
//!
//! A chunk is a short (5-20 s) segment of face video together with its
//! gold-standard vitals and factor metadata. [`VideoChunk`] can only be
//! obtained through [`VideoChunk::from_parts`] (or [`load_chunk`]), both of
//! which check every invariant, so any chunk in hand is valid.

mod disk;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use disk::{load_chunk, save_chunk, BOXES_FILE, FRAMES_FILE, LABELS_FILE, LANDMARKS_FILE, META_FILE};

/// Bounds on the label heart rate, in beats per minute.
pub const HR_BOUNDS_BPM: (f64, f64) = (35.0, 240.0);
/// Bounds on the label respiratory rate, in breaths per minute.
pub const RR_BOUNDS_BPM: (f64, f64) = (4.0, 45.0);
/// Nominal chunk duration range in seconds. Chunks outside it load with a warning.
pub const DURATION_RANGE_S: (f64, f64) = (5.0, 20.0);

#[derive(Debug, Error)]
pub enum ChunkError {
    #[error("missing file {0}")]
    MissingFile(std::path::PathBuf),
    #[error("corrupt frame data: expected {expected} bytes, found {actual}")]
    CorruptHeader { expected: u64, actual: u64 },
    #[error("invariant `{invariant}` violated: {detail}")]
    InvariantViolation {
        invariant: &'static str,
        detail: String,
    },
    #[error("malformed {file}: {detail}")]
    Parse { file: &'static str, detail: String },
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ChunkError {
    pub(crate) fn invariant(invariant: &'static str, detail: impl Into<String>) -> Self {
        ChunkError::InvariantViolation {
            invariant,
            detail: detail.into(),
        }
    }

    /// Name of the violated invariant, if this is an invariant error.
    pub fn invariant_name(&self) -> Option<&'static str> {
        match self {
            ChunkError::InvariantViolation { invariant, .. } => Some(invariant),
            _ => None,
        }
    }
}

/// A uniformly sampled scalar signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    fs: f64,
}

impl Waveform {
    /// Requires at least two finite samples and a positive, finite rate.
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self, ChunkError> {
        if samples.len() < 2 {
            return Err(ChunkError::invariant(
                "waveform_min_samples",
                format!("waveform needs at least 2 samples, got {}", samples.len()),
            ));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(ChunkError::invariant(
                "waveform_rate",
                format!("sampling rate must be positive, got {fs}"),
            ));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(ChunkError::invariant(
                "waveform_finite",
                format!("sample {i} is not finite"),
            ));
        }
        Ok(Self { samples, fs })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Axis-aligned face rectangle in integer pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceBox {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl FaceBox {
    pub fn full_frame(width: usize, height: usize) -> Self {
        Self {
            x: 0,
            y: 0,
            width: width as u32,
            height: height as u32,
        }
    }

    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }

    pub fn fits_within(&self, width: usize, height: usize) -> bool {
        self.x as u64 + self.width as u64 <= width as u64
            && self.y as u64 + self.height as u64 <= height as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Gold-standard vitals for one chunk. Label waveforms share the video time base.
#[derive(Debug, Clone, PartialEq)]
pub struct VitalsLabel {
    pub pulse_wave: Waveform,
    pub resp_wave: Waveform,
    pub hr_bpm: f64,
    pub rr_bpm: f64,
}

/// Demographic and behavioural factors attached to a chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkMetadata {
    pub age: u32,
    pub gender_male: bool,
    /// Fitzpatrick skin type, 1 (lightest) to 6 (darkest).
    pub skin_type: u8,
    pub movement: f64,
    pub illuminance_var: f64,
    pub camera_stationary: bool,
}

impl ChunkMetadata {
    /// Copy with `movement` and `illuminance_var` clamped to `[0, 1]`.
    pub fn clamped(mut self) -> Self {
        self.movement = self.movement.clamp(0.0, 1.0);
        self.illuminance_var = self.illuminance_var.clamp(0.0, 1.0);
        self
    }

    fn validate(&self) -> Result<(), ChunkError> {
        if !(1..=6).contains(&self.skin_type) {
            return Err(ChunkError::invariant(
                "skin_type_range",
                format!("skin_type must be 1-6, got {}", self.skin_type),
            ));
        }
        for (name, v) in [
            ("movement", self.movement),
            ("illuminance_var", self.illuminance_var),
        ] {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(ChunkError::invariant(
                    "factor_unit_interval",
                    format!("{name} must lie in [0, 1], got {v}"),
                ));
            }
        }
        Ok(())
    }
}

impl Default for ChunkMetadata {
    fn default() -> Self {
        Self {
            age: 0,
            gender_male: false,
            skin_type: 1,
            movement: 0.0,
            illuminance_var: 0.0,
            camera_stationary: true,
        }
    }
}

/// Unvalidated chunk contents, used to build or take apart a [`VideoChunk`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkParts {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub frame_count: usize,
    /// Frame-major, row-major, interleaved RGB bytes.
    pub frames: Vec<u8>,
    pub face_boxes: Vec<FaceBox>,
    pub landmarks: Option<Vec<Vec<Point>>>,
    pub labels: VitalsLabel,
    pub metadata: ChunkMetadata,
}

/// A validated video chunk. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoChunk {
    parts: ChunkParts,
}

impl VideoChunk {
    pub fn from_parts(parts: ChunkParts) -> Result<Self, ChunkError> {
        validate(&parts)?;
        Ok(Self { parts })
    }

    pub fn into_parts(self) -> ChunkParts {
        self.parts
    }

    pub fn parts(&self) -> &ChunkParts {
        &self.parts
    }

    pub fn width(&self) -> usize {
        self.parts.width
    }

    pub fn height(&self) -> usize {
        self.parts.height
    }

    pub fn fps(&self) -> f64 {
        self.parts.fps
    }

    pub fn frame_count(&self) -> usize {
        self.parts.frame_count
    }

    pub fn duration(&self) -> f64 {
        self.parts.frame_count as f64 / self.parts.fps
    }

    /// Interleaved RGB bytes of frame `t`.
    pub fn frame(&self, t: usize) -> &[u8] {
        let size = self.frame_bytes();
        &self.parts.frames[t * size..(t + 1) * size]
    }

    pub fn frames(&self) -> &[u8] {
        &self.parts.frames
    }

    pub fn frame_bytes(&self) -> usize {
        self.parts.width * self.parts.height * 3
    }

    pub fn face_boxes(&self) -> &[FaceBox] {
        &self.parts.face_boxes
    }

    pub fn landmarks(&self) -> Option<&[Vec<Point>]> {
        self.parts.landmarks.as_deref()
    }

    pub fn labels(&self) -> &VitalsLabel {
        &self.parts.labels
    }

    pub fn metadata(&self) -> &ChunkMetadata {
        &self.parts.metadata
    }

    /// Same chunk with replaced metadata (validated).
    pub fn with_metadata(mut self, metadata: ChunkMetadata) -> Result<Self, ChunkError> {
        metadata.validate()?;
        self.parts.metadata = metadata;
        Ok(self)
    }
}

fn validate(p: &ChunkParts) -> Result<(), ChunkError> {
    if p.frame_count < 2 {
        return Err(ChunkError::invariant(
            "min_frames",
            format!("a chunk needs at least 2 frames, got {}", p.frame_count),
        ));
    }
    if p.width == 0 || p.height == 0 {
        return Err(ChunkError::invariant(
            "frame_dimensions",
            format!("frame size {}x{} is empty", p.width, p.height),
        ));
    }
    let expected = p.frame_count * p.width * p.height * 3;
    if p.frames.len() != expected {
        return Err(ChunkError::invariant(
            "frame_dimensions",
            format!(
                "{} frames of {}x{} need {expected} bytes, got {}",
                p.frame_count,
                p.width,
                p.height,
                p.frames.len()
            ),
        ));
    }
    if !(p.fps.is_finite() && p.fps > 0.0) {
        return Err(ChunkError::invariant(
            "fps_positive",
            format!("fps must be positive, got {}", p.fps),
        ));
    }
    let duration = p.frame_count as f64 / p.fps;
    if duration < DURATION_RANGE_S.0 || duration > DURATION_RANGE_S.1 {
        log::warn!(
            "chunk duration {duration:.2} s outside the nominal {}-{} s range",
            DURATION_RANGE_S.0,
            DURATION_RANGE_S.1
        );
    }

    if p.face_boxes.len() != p.frame_count {
        return Err(ChunkError::invariant(
            "face_box_per_frame",
            format!(
                "{} face boxes for {} frames",
                p.face_boxes.len(),
                p.frame_count
            ),
        ));
    }
    for (t, b) in p.face_boxes.iter().enumerate() {
        if b.area() == 0 {
            return Err(ChunkError::invariant(
                "face_box_area",
                format!("face box of frame {t} has zero area"),
            ));
        }
        if !b.fits_within(p.width, p.height) {
            return Err(ChunkError::invariant(
                "face_box_bounds",
                format!("face box of frame {t} ({b:?}) exceeds {}x{}", p.width, p.height),
            ));
        }
    }

    if let Some(lm) = &p.landmarks {
        if lm.len() != p.frame_count {
            return Err(ChunkError::invariant(
                "landmarks_per_frame",
                format!("{} landmark frames for {} frames", lm.len(), p.frame_count),
            ));
        }
        let k = lm[0].len();
        if k == 0 {
            return Err(ChunkError::invariant(
                "landmark_count",
                "landmark frames must contain at least one point",
            ));
        }
        for (t, pts) in lm.iter().enumerate() {
            if pts.len() != k {
                return Err(ChunkError::invariant(
                    "landmark_count",
                    format!("frame {t} has {} landmarks, expected {k}", pts.len()),
                ));
            }
            if pts.iter().any(|q| !(q.x.is_finite() && q.y.is_finite())) {
                return Err(ChunkError::invariant(
                    "landmark_finite",
                    format!("frame {t} has a non-finite landmark"),
                ));
            }
        }
    }

    let l = &p.labels;
    for (name, w) in [("pulse", &l.pulse_wave), ("resp", &l.resp_wave)] {
        if w.len() != p.frame_count || w.fs() != p.fps {
            return Err(ChunkError::invariant(
                "label_coverage",
                format!(
                    "{name} label has {} samples at {} Hz, chunk has {} frames at {} Hz",
                    w.len(),
                    w.fs(),
                    p.frame_count,
                    p.fps
                ),
            ));
        }
    }
    if !(l.hr_bpm >= HR_BOUNDS_BPM.0 && l.hr_bpm <= HR_BOUNDS_BPM.1) {
        return Err(ChunkError::invariant(
            "hr_bounds",
            format!("hr_bpm {} outside {:?}", l.hr_bpm, HR_BOUNDS_BPM),
        ));
    }
    if !(l.rr_bpm >= RR_BOUNDS_BPM.0 && l.rr_bpm <= RR_BOUNDS_BPM.1) {
        return Err(ChunkError::invariant(
            "rr_bounds",
            format!("rr_bpm {} outside {:?}", l.rr_bpm, RR_BOUNDS_BPM),
        ));
    }
    p.metadata.validate()
}
