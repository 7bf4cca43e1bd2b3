use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Degraded-speech corpus synthesis and restoration benchmarking.
#[derive(Debug, Parser)]
#[command(name = "restobench", version, about)]
struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct EnhancerArgs {
    /// Built-in restorer: passthrough, oracle_mask, spectral_subtract or declip.
    #[arg(long, conflicts_with = "adapter")]
    builtin: Option<String>,
    /// External restorer command, invoked as `<cmd> <manifest.json> <out_dir>`.
    #[arg(long)]
    adapter: Option<String>,
    /// Per-item time budget for an external adapter, in seconds.
    #[arg(long, default_value_t = 60)]
    timeout_secs: u64,
}

#[derive(Debug, Args)]
struct CorpusInputs {
    /// Directory of clean mono WAV files.
    #[arg(long)]
    clean: PathBuf,
    /// Directory of noise WAV files.
    #[arg(long)]
    noise: PathBuf,
    /// Master seed; overrides the seed in the spec or config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a degraded corpus from clean and noise directories.
    Degrade {
        #[command(flatten)]
        inputs: CorpusInputs,
        /// Degradation spec file, or the name of a bundled one.
        #[arg(long, default_value = "paper-default.json")]
        spec: String,
    },
    /// Run a restorer over a corpus.
    Enhance {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        enhancer: EnhancerArgs,
        /// Output directory (default: `restored` next to the manifest).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a corpus against its clean references.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        /// Report directory (default: the manifest's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attenuation-length sweep.
    SweepAtt {
        #[command(flatten)]
        inputs: CorpusInputs,
        #[arg(long, default_value = "sweep-att.json")]
        config: String,
        #[command(flatten)]
        enhancer: EnhancerArgs,
    },
    /// SNR-grid sweep.
    SweepSnr {
        #[command(flatten)]
        inputs: CorpusInputs,
        #[arg(long, default_value = "sweep-snr.json")]
        config: String,
        #[command(flatten)]
        enhancer: EnhancerArgs,
    },
    /// Single-distortion matrix.
    Matrix {
        #[command(flatten)]
        inputs: CorpusInputs,
        #[arg(long, default_value = "matrix.json")]
        config: String,
        #[command(flatten)]
        enhancer: EnhancerArgs,
    },
    /// Inspect and transform FEAT1 feature files.
    Features {
        #[command(subcommand)]
        op: FeaturesOp,
    },
    /// Check the harness invariants on synthesized audio.
    Selftest {
        /// Scratch directory (default: a fresh directory under the system temp dir).
        #[arg(long)]
        workdir: Option<PathBuf>,
    },
    /// Run a built-in restorer through the external adapter protocol.
    Adapter {
        builtin: String,
        manifest: PathBuf,
        out_dir: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum FeaturesOp {
    /// Print the header and value statistics.
    Inspect { file: PathBuf },
    /// Weighted average over layers.
    Average {
        file: PathBuf,
        /// JSON file `{"logits": [...]}`; uniform weights when omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat frames to a target frame count.
    Repeat {
        file: PathBuf,
        #[arg(long)]
        frames: usize,
        /// Frame rate recorded in the output (default: scaled with the frame count).
        #[arg(long)]
        rate: Option<f32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Concatenate two matrices along the feature dimension.
    Concat {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RESTOBENCH_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::EXIT_USAGE } else { commands::EXIT_OK });
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
