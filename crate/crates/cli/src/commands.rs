use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use log::info;
use restobench_core::conditioning::{
    concat_features, load_features, repeat_frames_to, store_features, weighted_layer_average, LayerWeights,
};
use restobench_core::configs::{bundled, bundled_experiment};
use restobench_core::degrade::DegradationSpec;
use restobench_core::harness::{
    build_corpus, evaluate_corpus, run_enhancer, run_matrix, selftest, sweep_attenuation, sweep_snr,
    write_builtin_outputs, Builtin, Enhancer, ExperimentConfig, ExperimentKind, Manifest, RunOptions,
};
use restobench_core::metrics::MetricReport;
use restobench_core::Error;

use crate::{Cli, Command, CorpusInputs, EnhancerArgs, FeaturesOp};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_ADAPTER: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnknownEnhancer(_) => EXIT_USAGE,
            Error::Adapter(_) => EXIT_ADAPTER,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

pub fn run(cli: Cli) -> CmdResult {
    let opts = RunOptions::with_jobs(cli.jobs);
    match cli.command {
        Command::Degrade { inputs, spec } => degrade(&inputs, &spec, &opts),
        Command::Enhance { manifest, enhancer, out } => enhance(&manifest, &enhancer, out, opts),
        Command::Evaluate { manifest, out } => evaluate(&manifest, out, &opts),
        Command::SweepAtt { inputs, config, enhancer } => {
            experiment(ExperimentKind::AttenuationSweep, &inputs, &config, &enhancer, opts)
        }
        Command::SweepSnr { inputs, config, enhancer } => {
            experiment(ExperimentKind::SnrSweep, &inputs, &config, &enhancer, opts)
        }
        Command::Matrix { inputs, config, enhancer } => {
            experiment(ExperimentKind::Matrix, &inputs, &config, &enhancer, opts)
        }
        Command::Features { op } => features(op),
        Command::Selftest { workdir } => run_selftest(workdir, &opts),
        Command::Adapter {
            builtin,
            manifest,
            out_dir,
        } => adapter(&builtin, &manifest, &out_dir, &opts),
    }
}

/// A path that exists is read from disk; anything else must name a bundled
/// configuration.
fn read_config(arg: &str) -> Result<String, Failure> {
    let path = Path::new(arg);
    if path.exists() {
        return fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())));
    }
    bundled(arg)
        .map(str::to_string)
        .ok_or_else(|| Failure::data(format!("{arg}: no such file and no bundled config of that name")))
}

fn load_spec(arg: &str, seed: Option<u64>) -> Result<DegradationSpec, Failure> {
    let mut spec = DegradationSpec::from_json(&read_config(arg)?).map_err(|e| Failure::data(format!("{arg}: {e}")))?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(spec)
}

fn resolve_enhancer(args: &EnhancerArgs) -> Result<Option<Enhancer>, Failure> {
    match (&args.builtin, &args.adapter) {
        (Some(b), _) => Ok(Some(Enhancer::Builtin(b.parse()?))),
        (None, Some(cmd)) => Ok(Some(Enhancer::Adapter(cmd.clone()))),
        (None, None) => Ok(None),
    }
}

fn degrade(inputs: &CorpusInputs, spec: &str, opts: &RunOptions) -> CmdResult {
    let spec = load_spec(spec, inputs.seed)?;
    let m = build_corpus(&inputs.clean, &inputs.noise, &spec, &inputs.out, opts)?;
    println!(
        "built {} items ({} skipped) in {}",
        m.items.len(),
        m.skipped.len(),
        inputs.out.display()
    );
    Ok(EXIT_OK)
}

fn parent_or_cwd(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn enhance(manifest: &Path, args: &EnhancerArgs, out: Option<PathBuf>, mut opts: RunOptions) -> CmdResult {
    let enhancer = resolve_enhancer(args)?.ok_or_else(|| Failure::usage("one of --builtin or --adapter is required"))?;
    opts.item_timeout = Duration::from_secs(args.timeout_secs);
    let out = out.unwrap_or_else(|| parent_or_cwd(manifest).join("restored"));
    let outcome = run_enhancer(manifest, &enhancer, &out, &opts)?;
    println!(
        "{enhancer}: {} restored, {} failed; manifest {}",
        outcome.processed,
        outcome.failed.len(),
        outcome.manifest_path.display()
    );
    for f in &outcome.failed {
        eprintln!("failed {}: {}", f.item_id, f.reason);
    }
    Ok(if outcome.any_failed() { EXIT_ADAPTER } else { EXIT_OK })
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn write_report(report: &MetricReport, dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::data(format!("{}: {e}", dir.display())))?;
    write(&dir.join("report.json"), &(report.to_json() + "\n"))?;
    write(&dir.join("report.csv"), &report.to_csv())?;
    if let Some(csv) = report.deltas_csv() {
        write(&dir.join("deltas.csv"), &csv)?;
    }
    Ok(())
}

fn evaluate(manifest_path: &Path, out: Option<PathBuf>, opts: &RunOptions) -> CmdResult {
    let manifest = Manifest::load(manifest_path)?;
    let report = evaluate_corpus(&manifest, opts)?;
    let out = out.unwrap_or_else(|| parent_or_cwd(manifest_path));
    write_report(&report, &out)?;
    let a = &report.aggregate;
    println!(
        "evaluated {} items, {} failed: stoi {:.4}, seg_snr {:.2} dB, lsd {:.2} dB",
        a.count,
        report.failed.len(),
        a.stoi.mean,
        a.seg_snr_db.mean,
        a.lsd_db.mean
    );
    if let Some(d) = &report.deltas {
        println!(
            "delta vs degraded: stoi {:+.4}, seg_snr {:+.2} dB, lsd {:+.2} dB",
            d.aggregate.stoi.mean, d.aggregate.seg_snr_db.mean, d.aggregate.lsd_db.mean
        );
    }
    Ok(EXIT_OK)
}

fn load_experiment(arg: &str) -> Result<ExperimentConfig, Failure> {
    if Path::new(arg).exists() {
        return Ok(ExperimentConfig::load(Path::new(arg))?);
    }
    Ok(bundled_experiment(arg)?)
}

fn experiment(
    kind: ExperimentKind,
    inputs: &CorpusInputs,
    config: &str,
    args: &EnhancerArgs,
    mut opts: RunOptions,
) -> CmdResult {
    let mut cfg = load_experiment(config)?;
    if cfg.kind != kind {
        return Err(Failure::data(format!("{config}: config kind {:?} does not match the subcommand", cfg.kind)));
    }
    if let Some(seed) = inputs.seed {
        cfg.spec.seed = seed;
    }
    if let Some(e) = resolve_enhancer(args)? {
        cfg.enhancer = e;
    }
    opts.item_timeout = Duration::from_secs(args.timeout_secs);
    let (clean, noise, out) = (&inputs.clean, &inputs.noise, &inputs.out);
    info!("{kind:?} with {}", cfg.enhancer);
    let (csv, failed) = match kind {
        ExperimentKind::AttenuationSweep => {
            let r = sweep_attenuation(clean, noise, &cfg.spec, &cfg.attenuation_lengths_ms, &cfg.enhancer, out, &opts)?;
            let failed = r.points.iter().map(|p| p.report.failed.len()).sum::<usize>();
            (out.join("sweep.csv"), failed)
        }
        ExperimentKind::SnrSweep => {
            let r = sweep_snr(clean, noise, &cfg.spec, &cfg.snr_grid_db, &cfg.enhancer, out, &opts)?;
            let failed = r.points.iter().map(|p| p.report.failed.len()).sum::<usize>();
            (out.join("sweep.csv"), failed)
        }
        ExperimentKind::Matrix => {
            let r = run_matrix(clean, noise, &cfg.spec, &cfg.matrix, &cfg.enhancer, out, &opts)?;
            let failed = r.columns.iter().map(|(_, r)| r.failed.len()).sum::<usize>();
            (out.join("matrix.csv"), failed)
        }
    };
    println!("wrote {} ({failed} failed items)", csv.display());
    Ok(if failed > 0 { EXIT_ADAPTER } else { EXIT_OK })
}

fn features(op: FeaturesOp) -> CmdResult {
    match op {
        FeaturesOp::Inspect { file } => {
            let fm = load_features(&file)?;
            let v = fm.values();
            let (lo, hi) = v.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            let mean = v.iter().map(|&x| x as f64).sum::<f64>() / v.len().max(1) as f64;
            println!(
                "layers {} frames {} dim {} frame_rate_hz {}",
                fm.layers(),
                fm.frames(),
                fm.dim(),
                fm.frame_rate_hz()
            );
            if !v.is_empty() {
                println!("min {lo} max {hi} mean {mean}");
            }
        }
        FeaturesOp::Average { file, weights, out } => {
            let fm = load_features(&file)?;
            let w = match weights {
                Some(p) => LayerWeights::load(p)?,
                None => LayerWeights::uniform(fm.layers())?,
            };
            store_features(&weighted_layer_average(&fm, &w)?, &out)?;
        }
        FeaturesOp::Repeat { file, frames, rate, out } => {
            let fm = load_features(&file)?;
            if fm.frames() == 0 {
                return Err(Failure::data(format!("{}: no frames to repeat", file.display())));
            }
            let rate = rate.unwrap_or(fm.frame_rate_hz() * frames as f32 / fm.frames() as f32);
            store_features(&repeat_frames_to(&fm, frames, rate)?, &out)?;
        }
        FeaturesOp::Concat { a, b, out } => {
            let fa = load_features(&a)?;
            let fb = load_features(&b)?;
            store_features(&concat_features(&fa, &fb)?, &out)?;
        }
    }
    Ok(EXIT_OK)
}

fn run_selftest(workdir: Option<PathBuf>, opts: &RunOptions) -> CmdResult {
    let (dir, scratch) = match workdir {
        Some(d) => (d, false),
        None => (std::env::temp_dir().join(format!("restobench-selftest-{}", std::process::id())), true),
    };
    let result = selftest(&dir, opts);
    if scratch {
        let _ = fs::remove_dir_all(&dir);
    }
    let checks = result?;
    let mut all = true;
    for c in &checks {
        println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        all &= c.passed;
    }
    Ok(if all { EXIT_OK } else { EXIT_DATA })
}

fn adapter(builtin: &str, manifest: &Path, out_dir: &Path, opts: &RunOptions) -> CmdResult {
    let builtin: Builtin = builtin.parse()?;
    let m = Manifest::load(manifest)?;
    let failed = write_builtin_outputs(&m, builtin, out_dir, opts)?;
    for f in &failed {
        eprintln!("failed {}: {}", f.item_id, f.reason);
    }
    Ok(if failed.is_empty() { EXIT_OK } else { EXIT_DATA })
}
