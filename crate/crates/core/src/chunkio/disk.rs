//! Directory layout:
//!
//! ```text
//! meta.json        fps, width, height, frame_count, age, gender_male, skin_type,
//!                  movement, illuminance_var, camera_stationary, hr_bpm, rr_bpm
//! frames.rgb24     frame_count*height*width*3 bytes, frame/row-major, interleaved RGB
//! labels.csv       frame,ppg,resp   (one row per frame, video time base)
//! landmarks.csv    frame,point,x,y  (optional)
//! face_boxes.csv   frame,x,y,width,height  (optional; absent means full-frame boxes)
//! ```
//!
//! Reals are written with Rust's shortest round-trip formatting, so a save
//! followed by a load reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    ChunkError, ChunkMetadata, ChunkParts, FaceBox, Point, VideoChunk, VitalsLabel, Waveform,
};

pub const META_FILE: &str = "meta.json";
pub const FRAMES_FILE: &str = "frames.rgb24";
pub const LABELS_FILE: &str = "labels.csv";
pub const LANDMARKS_FILE: &str = "landmarks.csv";
pub const BOXES_FILE: &str = "face_boxes.csv";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaJson {
    fps: f64,
    width: usize,
    height: usize,
    frame_count: usize,
    age: u32,
    gender_male: bool,
    skin_type: u8,
    movement: f64,
    illuminance_var: f64,
    camera_stationary: bool,
    hr_bpm: f64,
    rr_bpm: f64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ChunkError + '_ {
    move |source| ChunkError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(file: &'static str, detail: impl Into<String>) -> ChunkError {
    ChunkError::Parse {
        file,
        detail: detail.into(),
    }
}

fn require(dir: &Path, name: &str) -> Result<PathBuf, ChunkError> {
    let path = dir.join(name);
    if path.is_file() {
        Ok(path)
    } else {
        Err(ChunkError::MissingFile(path))
    }
}

/// Reads the CSV at `path`, checking its header, and returns the records.
fn read_csv(
    path: &Path,
    file: &'static str,
    header: &[&str],
) -> Result<Vec<csv::StringRecord>, ChunkError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| parse_err(file, e.to_string()))?;
    let found = rdr
        .headers()
        .map_err(|e| parse_err(file, e.to_string()))?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(parse_err(
            file,
            format!("expected header {}, found {}", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    rdr.records()
        .map(|r| r.map_err(|e| parse_err(file, e.to_string())))
        .collect()
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    file: &'static str,
) -> Result<T, ChunkError> {
    let raw = rec.get(i).unwrap_or("");
    raw.trim()
        .parse()
        .map_err(|_| parse_err(file, format!("cannot parse `{raw}` on line {}", line_of(rec))))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

/// Loads and validates the chunk stored in `dir`.
pub fn load_chunk(dir: impl AsRef<Path>) -> Result<VideoChunk, ChunkError> {
    let dir = dir.as_ref();
    let meta_path = require(dir, META_FILE)?;
    let frames_path = require(dir, FRAMES_FILE)?;
    let labels_path = require(dir, LABELS_FILE)?;

    let meta_raw = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: MetaJson =
        serde_json::from_str(&meta_raw).map_err(|e| parse_err("meta.json", e.to_string()))?;

    let frames = fs::read(&frames_path).map_err(io_err(&frames_path))?;
    let expected = (meta.frame_count as u64)
        .checked_mul(meta.width as u64)
        .and_then(|v| v.checked_mul(meta.height as u64))
        .and_then(|v| v.checked_mul(3))
        .ok_or_else(|| parse_err("meta.json", "frame dimensions overflow"))?;
    if frames.len() as u64 != expected {
        return Err(ChunkError::CorruptHeader {
            expected,
            actual: frames.len() as u64,
        });
    }

    let rows = read_csv(&labels_path, "labels.csv", &["frame", "ppg", "resp"])?;
    if rows.len() != meta.frame_count {
        return Err(ChunkError::invariant(
            "label_coverage",
            format!("{} label rows for {} frames", rows.len(), meta.frame_count),
        ));
    }
    let mut ppg = Vec::with_capacity(rows.len());
    let mut resp = Vec::with_capacity(rows.len());
    for (t, rec) in rows.iter().enumerate() {
        let frame: usize = field(rec, 0, "labels.csv")?;
        if frame != t {
            return Err(ChunkError::invariant(
                "label_coverage",
                format!("label row {t} refers to frame {frame}"),
            ));
        }
        ppg.push(field::<f64>(rec, 1, "labels.csv")?);
        resp.push(field::<f64>(rec, 2, "labels.csv")?);
    }

    let landmarks_path = dir.join(LANDMARKS_FILE);
    let landmarks = if landmarks_path.is_file() {
        Some(read_landmarks(&landmarks_path, meta.frame_count)?)
    } else {
        None
    };

    let boxes_path = dir.join(BOXES_FILE);
    let face_boxes = if boxes_path.is_file() {
        read_boxes(&boxes_path, meta.frame_count)?
    } else {
        vec![FaceBox::full_frame(meta.width, meta.height); meta.frame_count]
    };

    let parts = ChunkParts {
        width: meta.width,
        height: meta.height,
        fps: meta.fps,
        frame_count: meta.frame_count,
        frames,
        face_boxes,
        landmarks,
        labels: VitalsLabel {
            pulse_wave: Waveform::new(ppg, meta.fps)?,
            resp_wave: Waveform::new(resp, meta.fps)?,
            hr_bpm: meta.hr_bpm,
            rr_bpm: meta.rr_bpm,
        },
        metadata: ChunkMetadata {
            age: meta.age,
            gender_male: meta.gender_male,
            skin_type: meta.skin_type,
            movement: meta.movement,
            illuminance_var: meta.illuminance_var,
            camera_stationary: meta.camera_stationary,
        },
    };
    VideoChunk::from_parts(parts)
}

fn read_landmarks(path: &Path, frame_count: usize) -> Result<Vec<Vec<Point>>, ChunkError> {
    let rows = read_csv(path, "landmarks.csv", &["frame", "point", "x", "y"])?;
    let mut frames: Vec<Vec<Point>> = vec![Vec::new(); frame_count];
    for rec in &rows {
        let t: usize = field(rec, 0, "landmarks.csv")?;
        let k: usize = field(rec, 1, "landmarks.csv")?;
        let slot = frames.get_mut(t).ok_or_else(|| {
            ChunkError::invariant(
                "landmarks_per_frame",
                format!("landmark row for frame {t} beyond {frame_count} frames"),
            )
        })?;
        if k != slot.len() {
            return Err(ChunkError::invariant(
                "landmark_count",
                format!("frame {t}: expected point {}, found point {k}", slot.len()),
            ));
        }
        slot.push(Point::new(
            field(rec, 2, "landmarks.csv")?,
            field(rec, 3, "landmarks.csv")?,
        ));
    }
    Ok(frames)
}

fn read_boxes(path: &Path, frame_count: usize) -> Result<Vec<FaceBox>, ChunkError> {
    let rows = read_csv(path, "face_boxes.csv", &["frame", "x", "y", "width", "height"])?;
    if rows.len() != frame_count {
        return Err(ChunkError::invariant(
            "face_box_per_frame",
            format!("{} face boxes for {frame_count} frames", rows.len()),
        ));
    }
    rows.iter()
        .enumerate()
        .map(|(t, rec)| {
            let frame: usize = field(rec, 0, "face_boxes.csv")?;
            if frame != t {
                return Err(ChunkError::invariant(
                    "face_box_per_frame",
                    format!("face box row {t} refers to frame {frame}"),
                ));
            }
            Ok(FaceBox {
                x: field(rec, 1, "face_boxes.csv")?,
                y: field(rec, 2, "face_boxes.csv")?,
                width: field(rec, 3, "face_boxes.csv")?,
                height: field(rec, 4, "face_boxes.csv")?,
            })
        })
        .collect()
}

/// Writes `chunk` into `dir`, creating the directory if needed.
pub fn save_chunk(chunk: &VideoChunk, dir: impl AsRef<Path>) -> Result<(), ChunkError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let p = chunk.parts();

    let meta = MetaJson {
        fps: p.fps,
        width: p.width,
        height: p.height,
        frame_count: p.frame_count,
        age: p.metadata.age,
        gender_male: p.metadata.gender_male,
        skin_type: p.metadata.skin_type,
        movement: p.metadata.movement,
        illuminance_var: p.metadata.illuminance_var,
        camera_stationary: p.metadata.camera_stationary,
        hr_bpm: p.labels.hr_bpm,
        rr_bpm: p.labels.rr_bpm,
    };
    let mut meta_json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    meta_json.push('\n');
    write_file(&dir.join(META_FILE), meta_json.as_bytes())?;
    write_file(&dir.join(FRAMES_FILE), &p.frames)?;

    let mut labels = String::from("frame,ppg,resp\n");
    let ppg = p.labels.pulse_wave.samples();
    let resp = p.labels.resp_wave.samples();
    for t in 0..p.frame_count {
        let _ = writeln!(labels, "{t},{},{}", ppg[t], resp[t]);
    }
    write_file(&dir.join(LABELS_FILE), labels.as_bytes())?;

    let landmarks_path = dir.join(LANDMARKS_FILE);
    match &p.landmarks {
        Some(lm) => {
            let mut out = String::from("frame,point,x,y\n");
            for (t, pts) in lm.iter().enumerate() {
                for (k, q) in pts.iter().enumerate() {
                    let _ = writeln!(out, "{t},{k},{},{}", q.x, q.y);
                }
            }
            write_file(&landmarks_path, out.as_bytes())?;
        }
        None => remove_stale(&landmarks_path)?,
    }

    let boxes_path = dir.join(BOXES_FILE);
    let full = FaceBox::full_frame(p.width, p.height);
    if p.face_boxes.iter().all(|b| *b == full) {
        remove_stale(&boxes_path)?;
    } else {
        let mut out = String::from("frame,x,y,width,height\n");
        for (t, b) in p.face_boxes.iter().enumerate() {
            let _ = writeln!(out, "{t},{},{},{},{}", b.x, b.y, b.width, b.height);
        }
        write_file(&boxes_path, out.as_bytes())?;
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ChunkError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn remove_stale(path: &Path) -> Result<(), ChunkError> {
    if path.exists() {
        fs::remove_file(path).map_err(io_err(path))?;
    }
    Ok(())
}
