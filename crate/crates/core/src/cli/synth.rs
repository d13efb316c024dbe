use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{create_file, ensure_dir, io_err, thread_pool, CliError};
use crate::chunkio::save_chunk;
use crate::synth::{generate, SynthSpec};

pub const MANIFEST_FILE: &str = "manifest.csv";

/// RNG stream used for per-chunk heart rates, distinct from pixel noise.
const HR_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Template spec; its seed is the seed of the first chunk.
    pub spec: SynthSpec,
    pub count: usize,
    /// Draws each chunk's heart rate uniformly from `[lo, hi]` bpm.
    pub hr_range: Option<(f64, f64)>,
    pub out: PathBuf,
    pub workers: usize,
}

pub fn chunk_dir_name(i: usize) -> String {
    format!("chunk_{i:04}")
}

/// Per-chunk specs, seeds `seed .. seed + count`.
fn chunk_specs(cfg: &SynthConfig) -> Result<Vec<SynthSpec>, CliError> {
    let mut hr_rng = ChaCha8Rng::seed_from_u64(cfg.spec.seed);
    hr_rng.set_stream(HR_STREAM);
    let specs: Vec<SynthSpec> = (0..cfg.count)
        .map(|i| SynthSpec {
            seed: cfg.spec.seed + i as u64,
            hr_bpm: match cfg.hr_range {
                Some((lo, hi)) if hi > lo => hr_rng.random_range(lo..=hi),
                Some((lo, _)) => lo,
                None => cfg.spec.hr_bpm,
            },
            ..cfg.spec.clone()
        })
        .collect();
    if let Some((lo, hi)) = cfg.hr_range {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(CliError::Usage(format!("hr range [{lo}, {hi}] is empty")));
        }
        for hr in [lo, hi] {
            SynthSpec {
                hr_bpm: hr,
                ..cfg.spec.clone()
            }
            .validate()?;
        }
    }
    cfg.spec.validate()?;
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

/// Writes `count` chunk directories plus `manifest.csv`; every spec is
/// validated before anything touches the disk.
pub fn cmd_synth(cfg: &SynthConfig) -> Result<Vec<PathBuf>, CliError> {
    let specs = chunk_specs(cfg)?;
    ensure_dir(&cfg.out)?;
    let pool = thread_pool(cfg.workers)?;
    let out: &Path = &cfg.out;
    let dirs = pool.install(|| {
        specs
            .par_iter()
            .enumerate()
            .map(|(i, spec)| {
                let dir = out.join(chunk_dir_name(i));
                save_chunk(&generate(spec)?, &dir)?;
                Ok(dir)
            })
            .collect::<Result<Vec<PathBuf>, CliError>>()
    })?;

    let manifest = out.join(MANIFEST_FILE);
    let mut w = csv::Writer::from_writer(create_file(&manifest)?);
    w.write_record(["chunk", "seed", "hr_bpm", "rr_bpm"])?;
    for (i, s) in specs.iter().enumerate() {
        w.write_record([
            chunk_dir_name(i),
            s.seed.to_string(),
            s.hr_bpm.to_string(),
            s.rr_bpm.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(&manifest))?;
    Ok(dirs)
}
