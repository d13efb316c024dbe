use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rppg_bench::cli::{
    cmd_buckets, cmd_regress, cmd_run, cmd_synth, cmd_timing, BucketsConfig, CliError,
    RegressConfig, RunConfig, SnrTarget, SynthConfig, TimingConfig, BUCKETS_FILE, EXIT_OK,
    EXIT_USAGE, RESULTS_FILE,
};
use rppg_bench::{EstimatorId, FrequencyBand, SynthSpec};

#[derive(Parser, Debug)]
#[command(name = "rppg-bench", version, about = "rPPG estimator benchmarking toolkit")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Base RNG seed (synthesis and timing fixtures).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for chunk-level parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate estimators over a directory of chunks.
    Run(RunArgs),
    /// OLS regression of SNR on chunk factors.
    Regress(RegressArgs),
    /// SNR means and SDs grouped by a factor.
    Buckets(BucketsArgs),
    /// Generate synthetic chunks with known vitals.
    Synth(SynthArgs),
    /// Per-frame processing latency.
    Timing(TimingArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Directory whose subdirectories are chunks.
    #[arg(long)]
    dataset: PathBuf,
    /// Estimators to run.
    #[arg(long, value_delimiter = ',', default_values_t = EstimatorId::ALL.map(|m| m.name().to_string()))]
    methods: Vec<String>,
    /// Heart-rate band in Hz, as lo,hi.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    hr_band: Option<Vec<f64>>,
    /// Respiration band in Hz, as lo,hi.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    rr_band: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TargetArg {
    #[value(name = "pulse_snr")]
    PulseSnr,
    #[value(name = "resp_snr")]
    RespSnr,
}

#[derive(Args, Debug)]
struct RegressArgs {
    /// chunk_metrics.csv written by `run`.
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long, value_enum, default_value = "pulse_snr")]
    target: TargetArg,
    /// Regressor columns; `skin_type` expands to dummies.
    #[arg(long, value_delimiter = ',')]
    factors: Vec<String>,
    /// Only rows of this estimator.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Args, Debug)]
struct BucketsArgs {
    /// chunk_metrics.csv written by `run`.
    #[arg(long)]
    metrics: PathBuf,
    /// Column to bin on, e.g. movement.
    #[arg(long)]
    factor: String,
    /// Strictly increasing bin edges.
    #[arg(long, value_delimiter = ',', required = true)]
    edges: Vec<f64>,
    /// Only rows of this estimator.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 10.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    /// Base skin colour as r,g,b in 0-255.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [196.0, 140.0, 118.0])]
    base_rgb: Vec<f64>,
    #[arg(long, default_value_t = 72.0)]
    hr_bpm: f64,
    /// Draw each chunk's heart rate uniformly from lo,hi (overrides --hr-bpm).
    #[arg(long, value_delimiter = ',', num_args = 2)]
    hr_range: Option<Vec<f64>>,
    #[arg(long, default_value_t = 15.0)]
    rr_bpm: f64,
    #[arg(long, default_value_t = 0.01)]
    pulse_amplitude: f64,
    #[arg(long, default_value_t = 1.0)]
    resp_motion_px: f64,
    #[arg(long, default_value_t = 0.0)]
    illum_drift_amplitude: f64,
    #[arg(long, default_value_t = 0.0)]
    pixel_noise_sd: f64,
    #[arg(long, default_value_t = 30)]
    age: u32,
    #[arg(long)]
    gender_male: bool,
    #[arg(long, default_value_t = 3)]
    skin_type: u8,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    camera_stationary: bool,
}

#[derive(Args, Debug)]
struct TimingArgs {
    #[arg(long, default_value = "POS")]
    method: String,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
}

fn parse_methods(names: &[String]) -> anyhow::Result<Vec<EstimatorId>> {
    let mut out: Vec<EstimatorId> = Vec::new();
    for n in names {
        let id: EstimatorId = n.parse().map_err(|e| anyhow!("{e}"))?;
        if !out.contains(&id) {
            out.push(id);
        }
    }
    Ok(out)
}

fn band(v: Option<Vec<f64>>, default: FrequencyBand) -> anyhow::Result<FrequencyBand> {
    match v.as_deref() {
        None => Ok(default),
        Some([lo, hi]) => FrequencyBand::new(*lo, *hi).map_err(|e| anyhow!("{e}")),
        Some(other) => Err(anyhow!("band needs lo,hi, got {other:?}")),
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

enum Failure {
    /// Flag values that could not be turned into a config.
    Usage(anyhow::Error),
    Command(CliError),
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        Failure::Command(e)
    }
}

fn usage(e: anyhow::Error) -> Failure {
    Failure::Usage(e)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let workers = cli.workers.unwrap_or_else(default_workers);
    match cli.command {
        Command::Run(a) => {
            let cfg = RunConfig {
                dataset: a.dataset,
                methods: parse_methods(&a.methods).map_err(usage)?,
                out: cli.out,
                hr_band: band(a.hr_band, FrequencyBand::HR).map_err(usage)?,
                rr_band: band(a.rr_band, FrequencyBand::RR).map_err(usage)?,
                workers,
            };
            let s = cmd_run(&cfg)?;
            eprintln!(
                "evaluated {} of {} chunks; {} skipped; wrote {}",
                s.chunks_evaluated,
                s.chunks_total,
                s.skipped.len(),
                cfg.out.join(RESULTS_FILE).display()
            );
        }
        Command::Regress(a) => {
            let cfg = RegressConfig {
                chunk_metrics: a.metrics,
                target: match a.target {
                    TargetArg::PulseSnr => SnrTarget::Pulse,
                    TargetArg::RespSnr => SnrTarget::Resp,
                },
                factors: a.factors,
                method: a.method,
                out: cli.out,
            };
            let report = cmd_regress(&cfg)?;
            print!("{}", report.summary());
        }
        Command::Buckets(a) => {
            let cfg = BucketsConfig {
                chunk_metrics: a.metrics,
                factor: a.factor,
                edges: a.edges,
                method: a.method,
                out: cli.out,
            };
            let r = cmd_buckets(&cfg)?;
            eprintln!(
                "{} bins; wrote {}",
                r.buckets.len(),
                cfg.out.join(BUCKETS_FILE).display()
            );
        }
        Command::Synth(a) => {
            let base_rgb: [f64; 3] = a
                .base_rgb
                .as_slice()
                .try_into()
                .context("--base-rgb needs three values")
                .map_err(usage)?;
            let hr_range = match a.hr_range.as_deref() {
                None => None,
                Some(&[lo, hi]) => Some((lo, hi)),
                Some(_) => return Err(usage(anyhow!("--hr-range needs lo,hi"))),
            };
            let cfg = SynthConfig {
                spec: SynthSpec {
                    duration_s: a.duration_s,
                    fps: a.fps,
                    width: a.width,
                    height: a.height,
                    base_rgb,
                    hr_bpm: a.hr_bpm,
                    rr_bpm: a.rr_bpm,
                    pulse_amplitude: a.pulse_amplitude,
                    resp_motion_px: a.resp_motion_px,
                    illum_drift_amplitude: a.illum_drift_amplitude,
                    pixel_noise_sd: a.pixel_noise_sd,
                    seed: cli.seed,
                    age: a.age,
                    gender_male: a.gender_male,
                    skin_type: a.skin_type,
                    camera_stationary: a.camera_stationary,
                },
                count: a.count,
                hr_range,
                out: cli.out,
                workers,
            };
            let dirs = cmd_synth(&cfg)?;
            eprintln!("wrote {} chunks under {}", dirs.len(), cfg.out.display());
        }
        Command::Timing(a) => {
            let cfg = TimingConfig {
                method: parse_methods(&[a.method]).map_err(usage)?[0],
                width: a.width,
                height: a.height,
                iterations: a.iterations,
                seed: cli.seed,
                out: Some(cli.out),
            };
            let r = cmd_timing(&cfg)?;
            println!(
                "{} {}x{}: {:.6} ms/frame (sd {:.6}) over {} iterations",
                r.method, r.width, r.height, r.mean_ms, r.sd_ms, r.iterations
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { EXIT_OK as u8 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(Failure::Command(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
