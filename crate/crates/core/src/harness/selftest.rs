use std::fs;
use std::path::Path;

use super::config::MatrixColumn;
use super::enhance::{run_enhancer, Builtin, Enhancer};
use super::{build_corpus, evaluate_corpus, write_synthetic_inputs, RunOptions, MANIFEST_FILE};
use crate::degrade::DegradationSpec;
use crate::error::{Error, Result};
use crate::metrics::{lsd, seg_snr, MetricReport};
use crate::synth;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn enhance_and_score(corpus: &Path, builtin: Builtin, opts: &RunOptions) -> Result<MetricReport> {
    let outcome = run_enhancer(
        &corpus.join(MANIFEST_FILE),
        &Enhancer::Builtin(builtin),
        &corpus.join(builtin.name()),
        opts,
    )?;
    evaluate_corpus(&outcome.manifest.expect("manifest"), opts)
}

fn dir_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = e.map_err(|e| Error::io(dir, e))?.path();
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        out.push((p.file_name().unwrap().to_string_lossy().into_owned(), bytes));
    }
    out.sort();
    Ok(out)
}

/// Runs the harness invariants end to end on synthesized audio inside
/// `workdir`. Needs no external data.
pub fn selftest(workdir: &Path, opts: &RunOptions) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    // A recording-like noise floor keeps every bin above the LSD power floor.
    let speech = synth::speech_like(11, 2.0, 16000);
    let x = synth::noisy(&speech, &synth::white_noise(12, speech.len(), 16000, 1.0), 50.0);
    let half = x.scaled(0.5);
    let s = seg_snr(&x, &half)?;
    checks.push(check("seg_snr(x, 0.5x) = 6.02 dB", (s - 6.02).abs() <= 0.05, format!("{s:.4} dB")));
    let l = lsd(&x, &x.scaled(10.0))?;
    checks.push(check("lsd(x, 10x) = 20 dB", (l - 20.0).abs() <= 0.01, format!("{l:.4} dB")));

    let (clean, noise) = write_synthetic_inputs(&workdir.join("inputs"), 6, 2.0, 16000, 5)?;
    let noise_only = MatrixColumn::Noise.spec(&DegradationSpec::default());
    let corpus = workdir.join("noise_only");
    build_corpus(&clean, &noise, &noise_only, &corpus, opts)?;
    let pass = enhance_and_score(&corpus, Builtin::Passthrough, opts)?;
    let sub = enhance_and_score(&corpus, Builtin::SpectralSubtract, opts)?;
    let oracle = enhance_and_score(&corpus, Builtin::OracleMask, opts)?;
    let (p, s, o) = (pass.aggregate.stoi.mean, sub.aggregate.stoi.mean, oracle.aggregate.stoi.mean);
    checks.push(check(
        "mean STOI: oracle_mask >= spectral_subtract >= passthrough",
        o >= s && s >= p - 1e-6,
        format!("{o:.4} / {s:.4} / {p:.4}"),
    ));
    let zero = pass.deltas.as_ref().is_some_and(|d| {
        d.per_item
            .iter()
            .all(|i| i.stoi == 0.0 && i.seg_snr_db == 0.0 && i.lsd_db == 0.0)
    });
    checks.push(check("passthrough deltas are zero", zero, format!("{} items", pass.per_item.len())));
    let accounted = pass.per_item.len() + pass.failed.len() == 6;
    checks.push(check(
        "evaluated + failed = items",
        accounted,
        format!("{} + {}", pass.per_item.len(), pass.failed.len()),
    ));

    let spec = DegradationSpec::default();
    let a = workdir.join("determinism_a");
    let b = workdir.join("determinism_b");
    build_corpus(&clean, &noise, &spec, &a, &RunOptions { jobs: 1, ..*opts })?;
    build_corpus(&clean, &noise, &spec, &b, opts)?;
    let same_audio = dir_bytes(&a.join("degraded"))? == dir_bytes(&b.join("degraded"))?;
    let ra = enhance_and_score(&a, Builtin::OracleMask, opts)?;
    let rb = enhance_and_score(&b, Builtin::OracleMask, opts)?;
    checks.push(check(
        "rebuilt corpus is byte-identical and scores identically",
        same_audio && ra == rb,
        format!("audio identical: {same_audio}, reports identical: {}", ra == rb),
    ));
    Ok(checks)
}
