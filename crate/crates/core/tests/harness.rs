use std::fs;
use std::path::{Path, PathBuf};

use restobench_core::degrade::{DegradationSpec, NoiseSpec};
use restobench_core::harness::{
    build_corpus, evaluate_corpus, run_enhancer, run_matrix, sweep_attenuation, sweep_snr, write_synthetic_inputs,
    Builtin, Enhancer, Manifest, MatrixColumn, RunOptions, MANIFEST_FILE, SWEEP_CSV_HEADER,
};
use restobench_core::metrics::{MetricReport, CSV_HEADER};
use restobench_core::Error;

fn opts() -> RunOptions {
    RunOptions::with_jobs(4)
}

fn inputs(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    write_synthetic_inputs(&dir.join("in"), n, 2.0, 16000, 3).unwrap()
}

fn noise_only() -> DegradationSpec {
    MatrixColumn::Noise.spec(&DegradationSpec::default())
}

fn enhance(corpus: &Path, e: Enhancer, name: &str) -> Manifest {
    run_enhancer(&corpus.join(MANIFEST_FILE), &e, &corpus.join(name), &opts())
        .unwrap()
        .manifest
        .unwrap()
}

#[test]
fn corpus_uses_the_configured_snr_set_and_is_deterministic() {
    let t = tempfile::tempdir().unwrap();
    let (clean, noise) = inputs(t.path(), 4);
    let spec = DegradationSpec::default();
    let a = build_corpus(&clean, &noise, &spec, &t.path().join("a"), &RunOptions::with_jobs(1)).unwrap();
    let b = build_corpus(&clean, &noise, &spec, &t.path().join("b"), &RunOptions::with_jobs(8)).unwrap();
    assert_eq!(a.items.len(), 4);
    for item in &a.items {
        assert!([2.5, 7.5, 12.5, 17.5].contains(&item.applied.snr_db));
        assert!(item.degraded_path.is_file());
        assert!(item.degraded_path.with_extension("json").is_file());
    }
    for (x, y) in a.items.iter().zip(&b.items) {
        assert_eq!(x.applied, y.applied);
        assert_eq!(fs::read(&x.degraded_path).unwrap(), fs::read(&y.degraded_path).unwrap());
    }
    let loaded = Manifest::load(t.path().join("a").join(MANIFEST_FILE)).unwrap();
    assert_eq!(loaded, a);
}

#[test]
fn empty_clean_dir_is_an_error() {
    let t = tempfile::tempdir().unwrap();
    let (_, noise) = inputs(t.path(), 1);
    let empty = t.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let err = build_corpus(&empty, &noise, &DegradationSpec::default(), &t.path().join("o"), &opts()).unwrap_err();
    assert!(matches!(err, Error::NoInputItems(_)));
    assert!(err.to_string().contains("no input items"));
}

#[test]
fn unreadable_clean_file_is_skipped_and_recorded() {
    let t = tempfile::tempdir().unwrap();
    let (clean, noise) = inputs(t.path(), 2);
    fs::write(clean.join("broken.wav"), b"not a wav").unwrap();
    let m = build_corpus(&clean, &noise, &DegradationSpec::default(), &t.path().join("o"), &opts()).unwrap();
    assert_eq!(m.items.len(), 2);
    assert_eq!(m.skipped.len(), 1);
    assert!(m.skipped[0].path.ends_with("broken.wav"));
}

#[test]
fn passthrough_copies_bytes_and_has_zero_deltas() {
    let t = tempfile::tempdir().unwrap();
    let (clean, noise) = inputs(t.path(), 3);
    let corpus = t.path().join("c");
    build_corpus(&clean, &noise, &noise_only(), &corpus, &opts()).unwrap();
    let m = enhance(&corpus, Enhancer::Builtin(Builtin::Passthrough), "pass");
    for item in &m.items {
        let restored = item.restored_path.as_ref().unwrap();
        assert_eq!(fs::read(restored).unwrap(), fs::read(&item.degraded_path).unwrap());
    }
    let report = evaluate_corpus(&m, &opts()).unwrap();
    let unprocessed = evaluate_corpus(&Manifest::load(corpus.join(MANIFEST_FILE)).unwrap(), &opts()).unwrap();
    assert_eq!(report.per_item, unprocessed.per_item);
    assert!(unprocessed.deltas.is_none());
    let d = report.deltas.unwrap();
    assert!(d.per_item.iter().all(|i| i.stoi == 0.0 && i.seg_snr_db == 0.0 && i.lsd_db == 0.0));
}

#[test]
fn clean_restoration_scores_at_the_caps() {
    let t = tempfile::tempdir().unwrap();
    let (clean, noise) = inputs(t.path(), 2);
    let corpus = t.path().join("c");
    let mut m = build_corpus(&clean, &noise, &noise_only(), &corpus, &opts()).unwrap();
    for item in &mut m.items {
        item.restored_path = Some(item.clean_path.clone());
    }
    let r = evaluate_corpus(&m, &opts()).unwrap();
    assert!((r.aggregate.stoi.mean - 1.0).abs() < 1e-9);
    assert_eq!(r.aggregate.seg_snr_db.mean, 35.0);
}

#[test]
fn oracle_mask_improves_noise_only_corpus() {
    let t = tempfile::tempdir().unwrap();
    let (clean, noise) = inputs(t.path(), 3);
    let corpus = t.path().join("c");
    build_corpus(&clean, &noise, &noise_only(), &corpus, &opts()).unwrap();
    let m = enhance(&corpus, Enhancer::Builtin(Builtin::OracleMask), "oracle");
    let r = evaluate_corpus(&m, &opts()).unwrap();
    assert!(r.deltas.unwrap().aggregate.stoi.mean > 0.0);
}

#[cfg(unix)]
fn script(dir: &Path, name: &str, body: &str) -> String {
    use std::os::unix::fs::PermissionsExt;
    let p = dir.join(name);
    fs::write(&p, format!("#!/bin/sh\n{body}\n")).unwrap();
    fs::set_permissions(&p, fs::Permissions::from_mode(0o755)).unwrap();
    p.display().to_string()
}

#[cfg(unix)]
#[test]
fn adapter_failures_are_accounted_per_item() {
    let t = tempfile::tempdir().unwrap();
    let (clean, noise) = inputs(t.path(), 3);
    let corpus = t.path().join("c");
    build_corpus(&clean, &noise, &noise_only(), &corpus, &opts()).unwrap();
    let degraded = corpus.join("degraded");
    let copy_all = format!("cp {}/*.wav \"$2\"/", degraded.display());
    let short = t.path().join("short.wav");
    restobench_core::dsp::wav::write_wav(&short, &restobench_core::AudioBuffer::zeros(1000, 16000).unwrap()).unwrap();

    let cases = [
        ("copy.sh", copy_all.clone(), 0usize),
        ("fail.sh", "exit 4".to_string(), 3),
        ("omit.sh", format!("{copy_all}\nrm \"$2\"/utt001.wav"), 1),
        ("short.sh", format!("{copy_all}\ncp {} \"$2\"/utt002.wav", short.display()), 1),
    ];
    let pass = evaluate_corpus(&enhance(&corpus, Enhancer::Builtin(Builtin::Passthrough), "p"), &opts()).unwrap();
    for (name, body, expected_failed) in cases {
        let cmd = script(t.path(), name, &body);
        let out = run_enhancer(&corpus.join(MANIFEST_FILE), &Enhancer::Adapter(cmd), &corpus.join(name), &opts()).unwrap();
        assert_eq!(out.failed.len(), expected_failed, "{name}: {:?}", out.failed);
        let m = out.manifest.unwrap();
        let r = evaluate_corpus(&m, &opts()).unwrap();
        assert_eq!(r.failed.len(), expected_failed);
        assert_eq!(r.per_item.len() + r.failed.len(), m.items.len());
        if expected_failed == 0 {
            assert_eq!(r.per_item, pass.per_item);
        }
        if name == "short.sh" {
            assert!(out.failed[0].reason.contains("length mismatch"), "{}", out.failed[0].reason);
        }
        assert!(corpus.join(name).join("adapter.log").is_file());
    }
}

#[cfg(unix)]
#[test]
fn adapter_timeout_fails_every_item() {
    let t = tempfile::tempdir().unwrap();
    let (clean, noise) = inputs(t.path(), 1);
    let corpus = t.path().join("c");
    build_corpus(&clean, &noise, &noise_only(), &corpus, &opts()).unwrap();
    let cmd = script(t.path(), "slow.sh", "sleep 5");
    let o = RunOptions {
        jobs: 2,
        item_timeout: std::time::Duration::from_millis(200),
    };
    let out = run_enhancer(&corpus.join(MANIFEST_FILE), &Enhancer::Adapter(cmd), &corpus.join("slow"), &o).unwrap();
    assert_eq!(out.failed.len(), 1);
    assert!(out.failed[0].reason.contains("timed out"));
}

#[test]
fn matrix_noise_delta_exceeds_attenuation_delta_for_the_oracle() {
    let t = tempfile::tempdir().unwrap();
    let (clean, noise) = inputs(t.path(), 3);
    let r = run_matrix(
        &clean,
        &noise,
        &DegradationSpec::default(),
        &[MatrixColumn::Noise, MatrixColumn::Att],
        &Enhancer::Builtin(Builtin::OracleMask),
        &t.path().join("m"),
        &opts(),
    )
    .unwrap();
    let delta = |c| r.report(c).unwrap().deltas.as_ref().unwrap().aggregate.stoi.mean;
    assert!(delta(MatrixColumn::Noise) > delta(MatrixColumn::Att));
    let csv = fs::read_to_string(t.path().join("m").join("matrix.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
}

#[test]
fn attenuation_sweep_degrades_monotonically() {
    let t = tempfile::tempdir().unwrap();
    let (clean, noise) = inputs(t.path(), 3);
    let mut base = DegradationSpec::default();
    base.clip.enabled_prob = 0.0;
    base.lpf.enabled_prob = 0.0;
    base.attenuation.enabled_prob = 1.0;
    let lengths = [0.0, 50.0, 100.0, 200.0];
    let r = sweep_attenuation(&clean, &noise, &base, &lengths, &Enhancer::Builtin(Builtin::Passthrough), &t.path().join("s"), &opts())
        .unwrap();
    let stoi: Vec<f64> = r.points.iter().map(|p| p.report.aggregate.stoi.mean).collect();
    assert!(stoi.windows(2).all(|w| w[1] <= w[0]), "{stoi:?}");

    let mut no_att = base.clone();
    no_att.attenuation.enabled_prob = 0.0;
    let c = t.path().join("ref");
    build_corpus(&clean, &noise, &no_att, &c, &opts()).unwrap();
    let reference = evaluate_corpus(&Manifest::load(c.join(MANIFEST_FILE)).unwrap(), &opts()).unwrap();
    assert_eq!(reference.per_item, r.points[0].report.per_item);

    let csv = fs::read_to_string(t.path().join("s").join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(SWEEP_CSV_HEADER));
    assert_eq!(lines.count(), lengths.len() * 3);
}

#[test]
fn snr_sweep_oracle_helps_at_every_point() {
    let t = tempfile::tempdir().unwrap();
    let (clean, noise) = inputs(t.path(), 2);
    let grid = [-2.5, 7.5, 17.5];
    let r = sweep_snr(&clean, &noise, &noise_only(), &grid, &Enhancer::Builtin(Builtin::OracleMask), &t.path().join("s"), &opts())
        .unwrap();
    assert_eq!(r.points.len(), 3);
    for p in &r.points {
        assert!(p.report.deltas.as_ref().unwrap().aggregate.stoi.mean > 0.0, "at {} dB", p.value);
    }
    let mut spec = noise_only();
    spec.noise = NoiseSpec::SnrSetDb(vec![1.0]);
    assert!(sweep_snr(&clean, &noise, &spec, &[], &Enhancer::Builtin(Builtin::Passthrough), &t.path().join("x"), &opts()).is_err());
}

#[test]
fn report_serialisation_round_trips() {
    let t = tempfile::tempdir().unwrap();
    let (clean, noise) = inputs(t.path(), 2);
    let corpus = t.path().join("c");
    build_corpus(&clean, &noise, &noise_only(), &corpus, &opts()).unwrap();
    let m = enhance(&corpus, Enhancer::Builtin(Builtin::SpectralSubtract), "ss");
    let r = evaluate_corpus(&m, &opts()).unwrap();
    assert_eq!(MetricReport::from_json(&r.to_json()).unwrap(), r);
    let csv = r.to_csv();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    assert_eq!(csv.lines().count(), 1 + r.per_item.len() + 1);
}

#[test]
fn selftest_passes_on_synthetic_audio() {
    let t = tempfile::tempdir().unwrap();
    let checks = restobench_core::harness::selftest(t.path(), &opts()).unwrap();
    for c in &checks {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
}
