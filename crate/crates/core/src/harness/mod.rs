//! Corpus building, enhancer invocation, evaluation and the sweep/matrix
//! experiment drivers.

mod config;
mod corpus;
mod enhance;
mod evaluate;
mod selftest;
mod sweep;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::degrade::{AppliedDegradation, DegradationSpec};
use crate::error::{Error, Result};

pub use config::{default_attenuation_lengths, default_snr_grid, ExperimentConfig, ExperimentKind, MatrixColumn};
pub use corpus::{build_corpus, write_synthetic_inputs};
pub use enhance::{run_enhancer, write_builtin_outputs, Builtin, EnhanceOutcome, Enhancer, ADAPTER_LOG, ENHANCE_REPORT_FILE};
pub use evaluate::evaluate_corpus;
pub use selftest::{selftest, Check};
pub use sweep::{
    run_matrix, sweep_attenuation, sweep_snr, MatrixResult, SweepPoint, SweepResult, MATRIX_CSV_HEADER, REPORT_FILE,
    SWEEP_CSV_HEADER,
};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEFAULT_ITEM_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub item_id: String,
    pub clean_path: PathBuf,
    pub noise_path: PathBuf,
    pub degraded_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restored_path: Option<PathBuf>,
    pub applied: AppliedDegradation,
    /// Set when enhancement failed for this item.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// An input file that could not be turned into an item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedInput {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub items: Vec<ManifestItem>,
    pub spec: DegradationSpec,
    pub created_utc: String,
    pub tool_version: String,
    #[serde(default)]
    pub skipped: Vec<SkippedInput>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "manifest schema_version {} (expected {MANIFEST_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let mut ids: Vec<&str> = self.items.iter().map(|i| i.item_id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(format!("duplicate item_id {:?}", w[0])));
        }
        Ok(())
    }

    pub fn failed_count(&self) -> usize {
        self.items.iter().filter(|i| i.failure.is_some()).count()
    }
}

/// Worker settings shared by the harness entry points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 means one per available core.
    pub jobs: usize,
    pub item_timeout: Duration,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            jobs: 0,
            item_timeout: DEFAULT_ITEM_TIMEOUT,
        }
    }
}

impl RunOptions {
    pub fn with_jobs(jobs: usize) -> Self {
        Self {
            jobs,
            ..Self::default()
        }
    }

    pub(crate) fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

pub(crate) fn create_dir(path: &Path) -> Result<PathBuf> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
    fs::canonicalize(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serialises");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
