//! Face-box colour traces and the behavioural factors derived from frames.

use thiserror::Error;

use crate::chunkio::{ChunkError, FaceBox, VideoChunk, Waveform};
use crate::stats;

/// BT.601 luma weights for (R, G, B).
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Frame rate the movement score is expressed at.
const MOVEMENT_REFERENCE_FPS: f64 = 30.0;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("face box of frame {frame} contains no pixels")]
    EmptyRoi { frame: usize },
    #[error("chunk has no landmarks")]
    NoLandmarks,
    #[error("invalid trace: {0}")]
    Invalid(String),
    #[error(transparent)]
    Chunk(#[from] ChunkError),
}

/// Per-frame mean colour inside the face box, on the 0-255 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbTrace {
    r: Vec<f64>,
    g: Vec<f64>,
    b: Vec<f64>,
    fs: f64,
}

impl RgbTrace {
    pub fn new(r: Vec<f64>, g: Vec<f64>, b: Vec<f64>, fs: f64) -> Result<Self, TraceError> {
        if r.len() != g.len() || r.len() != b.len() {
            return Err(TraceError::Invalid(format!(
                "channel lengths differ: {} / {} / {}",
                r.len(),
                g.len(),
                b.len()
            )));
        }
        if r.len() < 2 {
            return Err(TraceError::Invalid(format!(
                "trace needs at least 2 samples, got {}",
                r.len()
            )));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(TraceError::Invalid(format!("bad sampling rate {fs}")));
        }
        let in_range = |v: &f64| (0.0..=255.0).contains(v);
        if !(r.iter().all(in_range) && g.iter().all(in_range) && b.iter().all(in_range)) {
            return Err(TraceError::Invalid("channel value outside [0, 255]".into()));
        }
        Ok(Self { r, g, b, fs })
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Multiplies every channel by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self, TraceError> {
        let s = |c: &[f64]| c.iter().map(|v| v * gain).collect();
        Self::new(s(&self.r), s(&self.g), s(&self.b), self.fs)
    }
}

/// Mean (R, G, B) over the pixels of `face_box` in one interleaved frame.
///
/// Generic over the pixel type so real-valued frames go through the same
/// path as 8-bit ones.
pub fn box_mean<P: Copy + Into<f64>>(frame: &[P], width: usize, face_box: &FaceBox) -> [f64; 3] {
    let mut sum = [0.0_f64; 3];
    let x0 = face_box.x as usize;
    let x1 = x0 + face_box.width as usize;
    for row in face_box.y as usize..(face_box.y + face_box.height) as usize {
        let line = &frame[(row * width + x0) * 3..(row * width + x1) * 3];
        for px in line.chunks_exact(3) {
            sum[0] += px[0].into();
            sum[1] += px[1].into();
            sum[2] += px[2].into();
        }
    }
    let n = face_box.area() as f64;
    [sum[0] / n, sum[1] / n, sum[2] / n]
}

fn box_means(chunk: &VideoChunk) -> Result<Vec<[f64; 3]>, TraceError> {
    (0..chunk.frame_count())
        .map(|t| {
            let b = &chunk.face_boxes()[t];
            if b.area() == 0 {
                return Err(TraceError::EmptyRoi { frame: t });
            }
            Ok(box_mean(chunk.frame(t), chunk.width(), b))
        })
        .collect()
}

/// Spatially averaged colour trace of the face box, one sample per frame.
pub fn extract_trace(chunk: &VideoChunk) -> Result<RgbTrace, TraceError> {
    let means = box_means(chunk)?;
    let channel = |c: usize| means.iter().map(|m| m[c]).collect::<Vec<_>>();
    RgbTrace::new(channel(0), channel(1), channel(2), chunk.fps())
}

/// Per-frame mean BT.601 luma of the face box.
pub fn luma_series(chunk: &VideoChunk) -> Result<Waveform, TraceError> {
    let luma = box_means(chunk)?
        .iter()
        .map(|m| LUMA_WEIGHTS[0] * m[0] + LUMA_WEIGHTS[1] * m[1] + LUMA_WEIGHTS[2] * m[2])
        .collect();
    Ok(Waveform::new(luma, chunk.fps())?)
}

/// Population SD of the luma series over half the 8-bit range, clamped to `[0, 1]`.
pub fn illuminance_variation(luma: &Waveform) -> f64 {
    (stats::pop_sd(luma.samples()) / 127.5).clamp(0.0, 1.0)
}

/// Landmark movement score in `[0, 1]`.
///
/// For each pair of consecutive frames, the mean landmark displacement is
/// divided by the face-box diagonal of the later frame. The mean of these
/// ratios is rescaled to a 30 fps frame step and clamped.
pub fn movement_score(chunk: &VideoChunk) -> Result<f64, TraceError> {
    let landmarks = chunk.landmarks().ok_or(TraceError::NoLandmarks)?;
    let boxes = chunk.face_boxes();
    let steps = landmarks.len() - 1;
    let total: f64 = (1..landmarks.len())
        .map(|t| {
            let (prev, cur) = (&landmarks[t - 1], &landmarks[t]);
            let disp =
                cur.iter().zip(prev).map(|(a, b)| a.distance(b)).sum::<f64>() / cur.len() as f64;
            disp / boxes[t].diagonal()
        })
        .sum();
    let per_step = total / steps as f64;
    Ok((per_step * chunk.fps() / MOVEMENT_REFERENCE_FPS).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunkio::test_support::uniform_parts;
    use crate::chunkio::{Point, VideoChunk};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_chunk(seed: u64, w: usize, h: usize, n: usize) -> VideoChunk {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = uniform_parts(w, h, n, [0, 0, 0]);
        rng.fill(&mut p.frames[..]);
        for b in &mut p.face_boxes {
            let x = rng.random_range(0..w as u32 - 1);
            let y = rng.random_range(0..h as u32 - 1);
            *b = FaceBox {
                x,
                y,
                width: rng.random_range(1..=w as u32 - x),
                height: rng.random_range(1..=h as u32 - y),
            };
        }
        VideoChunk::from_parts(p).unwrap()
    }

    // Naive per-pixel reference: index every pixel explicitly.
    fn oracle_means(chunk: &VideoChunk, t: usize) -> [f64; 4] {
        let b = chunk.face_boxes()[t];
        let frame = chunk.frame(t);
        let mut acc = [0.0; 4];
        let mut count = 0.0;
        for y in b.y..b.y + b.height {
            for x in b.x..b.x + b.width {
                let i = ((y as usize) * chunk.width() + x as usize) * 3;
                let (r, g, bl) = (frame[i] as f64, frame[i + 1] as f64, frame[i + 2] as f64);
                acc[0] += r;
                acc[1] += g;
                acc[2] += bl;
                acc[3] += 0.299 * r + 0.587 * g + 0.114 * bl;
                count += 1.0;
            }
        }
        acc.map(|v| v / count)
    }

    #[test]
    fn white_frames_give_255() {
        let c = VideoChunk::from_parts(uniform_parts(6, 5, 4, [255, 255, 255])).unwrap();
        let tr = extract_trace(&c).unwrap();
        for ch in [tr.r(), tr.g(), tr.b()] {
            assert!(ch.iter().all(|&v| v == 255.0));
        }
        assert_eq!(tr.fs(), 30.0);
    }

    #[test]
    fn half_and_half_box_mean() {
        let mut p = uniform_parts(4, 2, 2, [0, 0, 0]);
        for t in 0..2 {
            for y in 0..2 {
                for x in 0..4 {
                    let i = ((t * 2 + y) * 4 + x) * 3;
                    p.frames[i] = if x < 2 { 100 } else { 200 };
                }
            }
        }
        let c = VideoChunk::from_parts(p).unwrap();
        assert_eq!(extract_trace(&c).unwrap().r(), &[150.0, 150.0]);
    }

    #[test]
    fn trace_and_luma_match_per_pixel_oracle() {
        for seed in 0..5 {
            let c = random_chunk(seed, 17, 11, 20);
            let tr = extract_trace(&c).unwrap();
            let luma = luma_series(&c).unwrap();
            for t in 0..c.frame_count() {
                let o = oracle_means(&c, t);
                assert!((tr.r()[t] - o[0]).abs() < 1e-9);
                assert!((tr.g()[t] - o[1]).abs() < 1e-9);
                assert!((tr.b()[t] - o[2]).abs() < 1e-9);
                assert!((luma.samples()[t] - o[3]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn luma_of_gray_and_green() {
        let gray = VideoChunk::from_parts(uniform_parts(3, 3, 3, [128, 128, 128])).unwrap();
        assert!(luma_series(&gray)
            .unwrap()
            .samples()
            .iter()
            .all(|&v| (v - 128.0).abs() < 1e-12));
        let green = VideoChunk::from_parts(uniform_parts(3, 3, 3, [0, 255, 0])).unwrap();
        assert!(luma_series(&green)
            .unwrap()
            .samples()
            .iter()
            .all(|&v| (v - 0.587 * 255.0).abs() < 1e-9 && (v - 149.685).abs() < 1e-9));
    }

    #[test]
    fn box_mean_scales_with_gain_on_real_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let frame: Vec<f64> = (0..10 * 8 * 3).map(|_| rng.random_range(0.0..255.0)).collect();
        let b = FaceBox {
            x: 2,
            y: 1,
            width: 5,
            height: 6,
        };
        let base = box_mean(&frame, 10, &b);
        for alpha in [0.25, 0.5, 0.731, 1.0] {
            let scaled: Vec<f64> = frame.iter().map(|v| v * alpha).collect();
            let m = box_mean(&scaled, 10, &b);
            for c in 0..3 {
                assert!((m[c] - alpha * base[c]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn box_mean_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut frame: Vec<f64> = (0..6 * 6 * 3).map(|_| rng.random_range(0.0..255.0)).collect();
        let full = FaceBox::full_frame(6, 6);
        let before = box_mean(&frame, 6, &full);
        // Reverse pixel order (keeping each pixel's channels together).
        let mut pixels: Vec<[f64; 3]> = frame.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
        pixels.reverse();
        frame = pixels.concat();
        let after = box_mean(&frame, 6, &full);
        for c in 0..3 {
            assert!((before[c] - after[c]).abs() < 1e-9);
        }
    }

    #[test]
    fn illuminance_variation_cases() {
        let constant = Waveform::new(vec![80.0; 50], 30.0).unwrap();
        assert_eq!(illuminance_variation(&constant), 0.0);

        let alternating =
            Waveform::new((0..50).map(|i| if i % 2 == 0 { 0.0 } else { 255.0 }).collect(), 30.0)
                .unwrap();
        assert!((illuminance_variation(&alternating) - 1.0).abs() < 1e-12);

        // 10 s at 30 fps holds exactly 10 periods of a 1 Hz sinusoid.
        let sine: Vec<f64> = (0..300)
            .map(|i| 100.0 + 10.0 * (2.0 * std::f64::consts::PI * i as f64 / 30.0).sin())
            .collect();
        let v = illuminance_variation(&Waveform::new(sine.clone(), 30.0).unwrap());
        assert!((v - 10.0 / 2f64.sqrt() / 127.5).abs() < 1e-9);
        assert!((v - 0.0555).abs() < 1e-3);

        let shifted: Vec<f64> = sine.iter().map(|s| s + 37.0).collect();
        let w = illuminance_variation(&Waveform::new(shifted, 30.0).unwrap());
        assert!((v - w).abs() < 1e-12);
    }

    fn with_landmarks(p: &mut crate::chunkio::ChunkParts, lm: Vec<Vec<Point>>) {
        p.landmarks = Some(lm);
    }

    #[test]
    fn movement_static_and_saturated() {
        let mut p = uniform_parts(40, 30, 20, [0, 0, 0]);
        with_landmarks(&mut p, vec![vec![Point::new(5.0, 5.0), Point::new(9.0, 7.0)]; 20]);
        let c = VideoChunk::from_parts(p).unwrap();
        assert_eq!(movement_score(&c).unwrap(), 0.0);

        let mut p = uniform_parts(40, 30, 20, [0, 0, 0]);
        let diag = FaceBox::full_frame(40, 30).diagonal();
        let lm = (0..20)
            .map(|t| vec![Point::new(t as f64 * diag, 0.0), Point::new(0.0, t as f64 * diag)])
            .collect();
        with_landmarks(&mut p, lm);
        let c = VideoChunk::from_parts(p).unwrap();
        assert_eq!(movement_score(&c).unwrap(), 1.0);
    }

    #[test]
    fn movement_requires_landmarks() {
        let c = VideoChunk::from_parts(uniform_parts(4, 4, 3, [0, 0, 0])).unwrap();
        assert!(matches!(movement_score(&c), Err(TraceError::NoLandmarks)));
    }

    // Second implementation of the movement formula with explicit loops.
    fn oracle_movement(lm: &[Vec<Point>], boxes: &[FaceBox], fps: f64) -> f64 {
        let mut acc = 0.0;
        for t in 1..lm.len() {
            let mut d = 0.0;
            for (a, b) in lm[t].iter().zip(&lm[t - 1]) {
                let (dx, dy) = (a.x - b.x, a.y - b.y);
                d += (dx * dx + dy * dy).sqrt();
            }
            d /= lm[t].len() as f64;
            let bw = boxes[t].width as f64;
            let bh = boxes[t].height as f64;
            acc += d / (bw * bw + bh * bh).sqrt();
        }
        let v = acc / (lm.len() - 1) as f64 * (fps / 30.0);
        v.clamp(0.0, 1.0)
    }

    #[test]
    fn movement_matches_oracle_on_jitter() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let mut p = uniform_parts(64, 48, 40, [0, 0, 0]);
            let lm: Vec<Vec<Point>> = (0..40)
                .map(|_| {
                    (0..7)
                        .map(|_| Point::new(rng.random_range(20.0..24.0), rng.random_range(15.0..18.0)))
                        .collect()
                })
                .collect();
            for b in &mut p.face_boxes {
                *b = FaceBox {
                    x: 10,
                    y: 8,
                    width: rng.random_range(20..40),
                    height: rng.random_range(20..38),
                };
            }
            with_landmarks(&mut p, lm.clone());
            let boxes = p.face_boxes.clone();
            let c = VideoChunk::from_parts(p).unwrap();
            let got = movement_score(&c).unwrap();
            assert!((got - oracle_movement(&lm, &boxes, 30.0)).abs() < 1e-9);
            assert!(got > 0.0 && got < 1.0);
        }
    }

    #[test]
    fn movement_translation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let lm: Vec<Vec<Point>> = (0..30)
            .map(|_| (0..4).map(|_| Point::new(rng.random_range(10.0..20.0), rng.random_range(10.0..20.0))).collect())
            .collect();
        let score = |dx: u32, dy: u32| {
            let mut p = uniform_parts(80, 80, 30, [0, 0, 0]);
            for b in &mut p.face_boxes {
                *b = FaceBox { x: 5 + dx, y: 5 + dy, width: 30, height: 30 };
            }
            p.landmarks = Some(
                lm.iter()
                    .map(|f| f.iter().map(|q| Point::new(q.x + dx as f64, q.y + dy as f64)).collect())
                    .collect(),
            );
            movement_score(&VideoChunk::from_parts(p).unwrap()).unwrap()
        };
        assert!((score(0, 0) - score(17, 33)).abs() < 1e-12);
    }

    #[test]
    fn movement_is_frame_rate_independent() {
        // Same physical motion (2 px/s drift) sampled at 30 and 60 fps.
        let score = |fps: f64| {
            let n = (fps * 2.0) as usize;
            let mut p = uniform_parts(50, 50, n, [0, 0, 0]);
            p.fps = fps;
            p.labels.pulse_wave = Waveform::new(vec![0.0; n], fps).unwrap();
            p.labels.resp_wave = Waveform::new(vec![0.0; n], fps).unwrap();
            p.landmarks = Some(
                (0..n)
                    .map(|t| vec![Point::new(10.0 + 2.0 * t as f64 / fps, 10.0)])
                    .collect(),
            );
            movement_score(&VideoChunk::from_parts(p).unwrap()).unwrap()
        };
        assert!((score(30.0) - score(60.0)).abs() < 1e-12);
    }
}
