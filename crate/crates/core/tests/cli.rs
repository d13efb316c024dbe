use std::fs;
use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rppg_bench::chunkio::FRAMES_FILE;
use rppg_bench::cli::{
    cmd_buckets, cmd_regress, cmd_run, cmd_synth, cmd_timing, BucketsConfig, CliError,
    RegressConfig, RunConfig, SnrTarget, SynthConfig, TimingConfig, CHUNK_METRICS_FILE,
    CHUNK_METRICS_HEADER, MANIFEST_FILE, RESULTS_FILE,
};
use rppg_bench::factors::{FactorError, BUCKETS_HEADER};
use rppg_bench::{EstimatorId, SynthSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rppg-bench"))
}

fn synth_dataset(dir: &Path, count: usize, seed: u64) {
    cmd_synth(&SynthConfig {
        spec: SynthSpec {
            seed,
            ..SynthSpec::default()
        },
        count,
        hr_range: Some((55.0, 100.0)),
        out: dir.to_path_buf(),
        workers: 2,
    })
    .unwrap();
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(Result::unwrap)
        .collect()
}

/// chunk_metrics-style table with SNR = 10 - 8 * movement + noise.
fn planted_metrics(path: &Path, n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["chunk", "method", "pulse_snr", "resp_snr", "movement", "age", "skin_type_2", "skin_type_3", "skin_type_4", "skin_type_5", "skin_type_6"])
        .unwrap();
    for i in 0..n {
        // Log-spread so every decade of movement is populated.
        let movement = 10f64.powf(rng.random_range(-3.0..0.0));
        let snr = 10.0 - 8.0 * movement + rng.random_range(-0.2..0.2);
        let skin = rng.random_range(1..=6);
        let mut rec = vec![
            format!("chunk_{i:04}"),
            "POS".to_string(),
            snr.to_string(),
            if i % 3 == 0 { String::new() } else { (snr - 3.0).to_string() },
            movement.to_string(),
            rng.random_range(18..70).to_string(),
        ];
        rec.extend((2..=6).map(|k| u8::from(skin == k).to_string()));
        w.write_record(&rec).unwrap();
    }
    w.flush().unwrap();
}

#[test]
fn run_on_noise_free_chunks() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth_dataset(&data, 10, 0);
    let out = tmp.path().join("out");
    let s = cmd_run(&RunConfig {
        methods: vec![EstimatorId::Pos],
        ..RunConfig::new(&data, &out)
    })
    .unwrap();
    assert_eq!(s.chunks_evaluated, 10);
    assert!(s.reports[0].hr_mae <= 0.5, "{:?}", s.reports[0]);

    let results = csv_rows(&out.join(RESULTS_FILE));
    assert_eq!(results.len(), 1);
    assert_eq!(&results[0][0], "POS");
    let rows = csv_rows(&out.join(CHUNK_METRICS_FILE));
    assert_eq!(rows.len(), 10);
    let header = csv::Reader::from_path(out.join(CHUNK_METRICS_FILE))
        .unwrap()
        .headers()
        .unwrap()
        .clone();
    let header: Vec<&str> = header.iter().collect();
    assert_eq!(header, CHUNK_METRICS_HEADER);
    for regressor in [
        "age", "gender_male", "skin_type_2", "skin_type_6", "hr", "rr", "movement",
        "illuminance_var", "camera_stationary",
    ] {
        assert!(header.contains(&regressor), "{regressor}");
    }
}

#[test]
fn corrupt_chunk_is_skipped() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth_dataset(&data, 5, 10);
    let frames = data.join("chunk_0002").join(FRAMES_FILE);
    let bytes = fs::read(&frames).unwrap();
    fs::write(&frames, &bytes[..bytes.len() - 7]).unwrap();
    let s = cmd_run(&RunConfig::new(&data, tmp.path().join("out"))).unwrap();
    assert_eq!(s.chunks_total, 5);
    assert_eq!(s.chunks_evaluated, 4);
    assert_eq!(s.skipped.len(), 1);
    assert_eq!(s.skipped[0].chunk, "chunk_0002");
    assert!(s.reports.iter().all(|r| r.n_chunks == 4));
}

#[test]
fn empty_dataset_exits_2_without_results() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("empty");
    fs::create_dir(&data).unwrap();
    let out = tmp.path().join("out");
    let status = bin()
        .args(["run", "--dataset"])
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(!out.join(RESULTS_FILE).exists());
    assert!(matches!(
        cmd_run(&RunConfig::new(&data, &out)),
        Err(CliError::NoUsableData(_))
    ));
}

#[test]
fn usage_errors_exit_1() {
    let cases: [&[&str]; 4] = [
        &["frobnicate"],
        &["run"],
        &["run", "--dataset", "/definitely/not/here"],
        &["timing", "--method", "XYZ"],
    ];
    for args in cases {
        let status = bin().args(args).status().unwrap();
        assert_eq!(status.code(), Some(1), "{args:?}");
    }
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn synth_via_binary_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str| {
        let out = tmp.path().join(dir);
        let status = bin()
            .args(["synth", "--count", "3", "--seed", "7", "--pixel-noise-sd", "2", "--duration-s", "5", "--width", "16", "--height", "16", "--workers", "2", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        out
    };
    let (a, b) = (run("a"), run("b"));
    let manifest = csv_rows(&a.join(MANIFEST_FILE));
    assert_eq!(manifest.len(), 3);
    assert_eq!(&manifest[2][0], "chunk_0002");
    assert_eq!(&manifest[2][1], "9");
    for entry in ["manifest.csv", "chunk_0000/meta.json", "chunk_0001/frames.rgb24", "chunk_0002/labels.csv", "chunk_0002/landmarks.csv"] {
        assert_eq!(fs::read(a.join(entry)).unwrap(), fs::read(b.join(entry)).unwrap(), "{entry}");
    }
}

#[test]
fn synth_rejects_out_of_band_hr_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    let status = bin()
        .args(["synth", "--count", "2", "--hr-bpm", "300", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    assert!(!out.exists());

    let err = cmd_synth(&SynthConfig {
        spec: SynthSpec::default(),
        count: 2,
        hr_range: Some((60.0, 400.0)),
        out: out.clone(),
        workers: 1,
    })
    .unwrap_err();
    assert!(matches!(err, CliError::Synth(_)), "{err}");
    assert!(!out.exists());
}

#[test]
fn regress_recovers_planted_movement_effect() {
    let tmp = tempfile::tempdir().unwrap();
    let metrics = tmp.path().join("m.csv");
    planted_metrics(&metrics, 150, 1);
    let out = tmp.path().join("out");
    let cfg = RegressConfig {
        chunk_metrics: metrics.clone(),
        target: SnrTarget::Pulse,
        factors: vec!["movement".into(), "age".into(), "skin_type".into()],
        method: Some("POS".into()),
        out: out.clone(),
    };
    let r = cmd_regress(&cfg).unwrap();
    let m = r.coefficient("movement").unwrap();
    assert!(m.coef < 0.0 && m.p_value < 0.05, "{m:?}");
    assert_eq!(r.coefficients.len(), 1 + 2 + 5);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("regression.json")).unwrap()).unwrap();
    assert_eq!(json["dep_variable"], "pulse_snr");
    let text = fs::read_to_string(out.join("regression.txt")).unwrap();
    assert!(text.contains("movement") && text.contains("Adj. R-squared:"));

    // Respiration SNR is missing on every third row; those rows are dropped.
    let resp = cmd_regress(&RegressConfig {
        target: SnrTarget::Resp,
        ..cfg.clone()
    })
    .unwrap();
    assert_eq!(resp.n_obs, 100);

    // Binary path prints the table and exits 0.
    let output = bin()
        .args(["regress", "--target", "pulse_snr", "--factors", "movement", "--metrics"])
        .arg(&metrics)
        .arg("--out")
        .arg(tmp.path().join("out2"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&output.stdout).contains("P>|t|"));
}

#[test]
fn regress_exact_fit_and_duplicate_factor() {
    let tmp = tempfile::tempdir().unwrap();
    let metrics = tmp.path().join("m.csv");
    let mut w = csv::Writer::from_path(&metrics).unwrap();
    w.write_record(["chunk", "method", "pulse_snr", "resp_snr", "movement"]).unwrap();
    for i in 0..12 {
        let m = i as f64 / 20.0;
        w.write_record([format!("c{i}"), "G".into(), (4.0 - 3.0 * m).to_string(), String::new(), m.to_string()])
            .unwrap();
    }
    w.flush().unwrap();
    let cfg = RegressConfig {
        chunk_metrics: metrics.clone(),
        target: SnrTarget::Pulse,
        factors: vec!["movement".into()],
        method: None,
        out: tmp.path().join("out"),
    };
    let r = cmd_regress(&cfg).unwrap();
    assert_eq!(r.r_squared, 1.0);

    let dup = cmd_regress(&RegressConfig {
        factors: vec!["movement".into(), "movement".into()],
        ..cfg.clone()
    })
    .unwrap_err();
    assert!(matches!(dup, CliError::Factor(FactorError::SingularDesign { .. })));
    assert_eq!(dup.to_string().matches("movement").count(), 2, "{dup}");

    let output = bin()
        .args(["regress", "--factors", "movement,movement", "--metrics"])
        .arg(&metrics)
        .arg("--out")
        .arg(tmp.path().join("out3"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8_lossy(&output.stderr);
    assert_eq!(err.matches("movement").count(), 2, "{err}");

    // No resp_snr values at all: nothing to fit.
    let none = cmd_regress(&RegressConfig {
        target: SnrTarget::Resp,
        ..cfg
    })
    .unwrap_err();
    assert_eq!(none.exit_code(), 2);
}

#[test]
fn buckets_over_planted_movement() {
    let tmp = tempfile::tempdir().unwrap();
    let metrics = tmp.path().join("m.csv");
    planted_metrics(&metrics, 300, 2);
    let out = tmp.path().join("out");
    let cfg = BucketsConfig {
        chunk_metrics: metrics.clone(),
        factor: "movement".into(),
        edges: vec![0.0, 0.01, 0.1, 1.0],
        method: None,
        out: out.clone(),
    };
    let r = cmd_buckets(&cfg).unwrap();
    let means: Vec<f64> = r.buckets.iter().map(|b| b.pulse_snr_mean.unwrap()).collect();
    assert!(means.windows(2).all(|w| w[1] <= w[0]), "{means:?}");
    assert_eq!(r.buckets.iter().map(|b| b.n).sum::<usize>(), 300);

    let text = fs::read_to_string(out.join("buckets.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), BUCKETS_HEADER.join(","));
    assert_eq!(text.lines().count(), 4);

    let single = cmd_buckets(&BucketsConfig {
        edges: vec![0.0, 1.0],
        ..cfg.clone()
    })
    .unwrap();
    assert_eq!(single.buckets.len(), 1);

    let gap = cmd_buckets(&BucketsConfig {
        edges: vec![0.0, 0.5, 0.50001, 1.0],
        ..cfg.clone()
    })
    .unwrap();
    assert_eq!(gap.buckets[1].n, 0);
    let text = fs::read_to_string(out.join("buckets.csv")).unwrap();
    let row = text.lines().nth(2).unwrap();
    assert!(row.ends_with(",,,,,0"), "{row}");

    let unknown = cmd_buckets(&BucketsConfig {
        factor: "nonexistent".into(),
        ..cfg
    })
    .unwrap_err();
    assert!(matches!(unknown, CliError::Factor(FactorError::UnknownColumn(_))));
}

#[test]
fn timing_reports() {
    let one = cmd_timing(&TimingConfig {
        method: EstimatorId::Chrom,
        width: 32,
        height: 32,
        iterations: 1,
        seed: 0,
        out: None,
    })
    .unwrap();
    assert_eq!(one.sd_ms, 0.0);
    assert!(one.mean_ms > 0.0);

    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["timing", "--method", "pos", "--iterations", "50", "--out"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let rows = csv_rows(&tmp.path().join("timing.csv"));
    assert_eq!(&rows[0][0], "POS");
    assert_eq!(&rows[0][3], "50");
}

#[test]
fn timing_grows_with_frame_area() {
    let median_of_means = |height: usize| {
        let mut means: Vec<f64> = (0..5)
            .map(|_| {
                cmd_timing(&TimingConfig {
                    method: EstimatorId::Pos,
                    width: 128,
                    height,
                    iterations: 1000,
                    seed: 0,
                    out: None,
                })
                .unwrap()
                .mean_ms
            })
            .collect();
        means.sort_by(f64::total_cmp);
        means[2]
    };
    let small = median_of_means(128);
    let large = median_of_means(256);
    assert!(large >= small, "{large} < {small}");
}
