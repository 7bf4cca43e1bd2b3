use std::fmt;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::thread;
use std::time::{Duration, Instant};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{create_dir, write_json, Manifest, ManifestItem, RunOptions, MANIFEST_FILE};
use crate::baselines;
use crate::dsp::wav::{read_wav, write_wav};
use crate::dsp::AudioBuffer;
use crate::error::{Error, Result};

pub const ADAPTER_LOG: &str = "adapter.log";
pub const ENHANCE_REPORT_FILE: &str = "enhance_report.json";
const POLL_INTERVAL: Duration = Duration::from_millis(20);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Passthrough,
    OracleMask,
    SpectralSubtract,
    Declip,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::Passthrough,
        Builtin::OracleMask,
        Builtin::SpectralSubtract,
        Builtin::Declip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Passthrough => "passthrough",
            Builtin::OracleMask => "oracle_mask",
            Builtin::SpectralSubtract => "spectral_subtract",
            Builtin::Declip => "declip",
        }
    }

    /// Restores one degraded item. `clean` is only consulted by the oracle.
    pub fn process(self, degraded: &AudioBuffer, clean: &AudioBuffer) -> Result<AudioBuffer> {
        match self {
            Builtin::Passthrough => Ok(baselines::passthrough(degraded)),
            Builtin::OracleMask => baselines::oracle_mask(degraded, clean),
            Builtin::SpectralSubtract => baselines::spectral_subtract(degraded, baselines::DEFAULT_NOISE_FRAMES),
            // The plateau of a clipped item is its peak.
            Builtin::Declip => match degraded.peak() {
                p if p > 0.0 => baselines::declip_interpolate(degraded, p),
                _ => Ok(degraded.clone()),
            },
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownEnhancer(s.to_string()))
    }
}

/// A restorer: either a baseline run in-process or an external command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Enhancer {
    Builtin(Builtin),
    Adapter(String),
}

impl fmt::Display for Enhancer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Enhancer::Builtin(b) => write!(f, "{b}"),
            Enhancer::Adapter(cmd) => write!(f, "adapter `{cmd}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhanceOutcome {
    pub enhancer: Enhancer,
    pub manifest_path: PathBuf,
    pub processed: usize,
    pub failed: Vec<crate::metrics::FailedItem>,
    #[serde(skip)]
    pub manifest: Option<Manifest>,
}

impl EnhanceOutcome {
    pub fn any_failed(&self) -> bool {
        !self.failed.is_empty()
    }
}

/// Checks a restored file against its degraded input.
fn check_output(path: &Path, reference: &AudioBuffer) -> std::result::Result<(), String> {
    if !path.is_file() {
        return Err(format!("missing output {}", path.display()));
    }
    let out = read_wav(path).map_err(|e| format!("unreadable output: {e}"))?;
    if out.sample_rate() != reference.sample_rate() {
        return Err(format!(
            "sample rate mismatch: {} Hz, expected {} Hz",
            out.sample_rate(),
            reference.sample_rate()
        ));
    }
    if out.len() != reference.len() {
        return Err(format!(
            "length mismatch: {} samples, expected {}",
            out.len(),
            reference.len()
        ));
    }
    Ok(())
}

fn run_builtin(item: &ManifestItem, builtin: Builtin, out_dir: &Path) -> std::result::Result<PathBuf, String> {
    let target = out_dir.join(format!("{}.wav", item.item_id));
    if builtin == Builtin::Passthrough {
        // Same bytes as the degraded file.
        fs::copy(&item.degraded_path, &target).map_err(|e| format!("copy failed: {e}"))?;
        return Ok(target);
    }
    let degraded = read_wav(&item.degraded_path).map_err(|e| e.to_string())?;
    let clean = read_wav(&item.clean_path).map_err(|e| e.to_string())?;
    let restored = builtin.process(&degraded, &clean).map_err(|e| e.to_string())?;
    write_wav(&target, &restored).map_err(|e| e.to_string())?;
    Ok(target)
}

/// Writes `<out_dir>/<item_id>.wav` for every item with a built-in restorer,
/// as an external adapter would. Returns the items that could not be restored.
pub fn write_builtin_outputs(
    manifest: &Manifest,
    builtin: Builtin,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<Vec<crate::metrics::FailedItem>> {
    let out_dir = create_dir(out_dir)?;
    let results: Vec<std::result::Result<PathBuf, String>> = opts.install(|| {
        manifest
            .items
            .par_iter()
            .map(|item| run_builtin(item, builtin, &out_dir))
            .collect()
    })?;
    Ok(manifest
        .items
        .iter()
        .zip(results)
        .filter_map(|(item, r)| {
            r.err().map(|reason| crate::metrics::FailedItem {
                item_id: item.item_id.clone(),
                reason,
            })
        })
        .collect())
}

fn split_command(cmd: &str) -> Result<Vec<String>> {
    let parts = shell_words::split(cmd).map_err(|e| Error::Adapter(format!("cannot parse command `{cmd}`: {e}")))?;
    if parts.is_empty() {
        return Err(Error::Adapter("empty adapter command".into()));
    }
    Ok(parts)
}

/// Runs the adapter once for the whole corpus. `Ok(None)` means it exited 0;
/// `Ok(Some(reason))` is a run-level failure that applies to every item.
fn run_adapter(cmd: &str, manifest_path: &Path, out_dir: &Path, timeout: Duration) -> Result<Option<String>> {
    let parts = split_command(cmd)?;
    let log_path = out_dir.join(ADAPTER_LOG);
    let log = File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    let log_err = log.try_clone().map_err(|e| Error::io(&log_path, e))?;
    info!("running adapter `{cmd}` (timeout {:?})", timeout);
    let mut child = match Command::new(&parts[0])
        .args(&parts[1..])
        .arg(manifest_path)
        .arg(out_dir)
        .stdin(Stdio::null())
        .stdout(log)
        .stderr(log_err)
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return Ok(Some(format!("adapter failed to start: {e}"))),
    };
    let start = Instant::now();
    loop {
        match child.try_wait().map_err(|e| Error::Adapter(e.to_string()))? {
            Some(status) if status.success() => return Ok(None),
            Some(status) => return Ok(Some(format!("adapter exited with {status}"))),
            None if start.elapsed() > timeout => {
                // The child may exit between the check and the kill.
                let _ = child.kill();
                let _ = child.wait();
                return Ok(Some(format!("adapter timed out after {:?}", timeout)));
            }
            None => thread::sleep(POLL_INTERVAL),
        }
    }
}

/// Runs `enhancer` over the corpus described by `manifest_path`, writing
/// `<out_dir>/<item_id>.wav`, the updated manifest and an enhancement report.
///
/// Item-level failures are recorded in the returned outcome and manifest
/// rather than returned as errors.
pub fn run_enhancer(
    manifest_path: &Path,
    enhancer: &Enhancer,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<EnhanceOutcome> {
    let mut manifest = Manifest::load(manifest_path)?;
    let manifest_path = fs::canonicalize(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let out_dir = create_dir(out_dir)?;
    if manifest.items.is_empty() {
        return Err(Error::NoInputItems(manifest_path));
    }

    let results: Vec<std::result::Result<PathBuf, String>> = match enhancer {
        Enhancer::Builtin(b) => {
            let failed = write_builtin_outputs(&manifest, *b, &out_dir, opts)?;
            manifest
                .items
                .iter()
                .map(|item| match failed.iter().find(|f| f.item_id == item.item_id) {
                    Some(f) => Err(f.reason.clone()),
                    None => Ok(out_dir.join(format!("{}.wav", item.item_id))),
                })
                .collect()
        }
        Enhancer::Adapter(cmd) => {
            let timeout = opts.item_timeout * manifest.items.len() as u32;
            let run_failure = run_adapter(cmd, &manifest_path, &out_dir, timeout)?;
            manifest
                .items
                .iter()
                .map(|item| match &run_failure {
                    Some(reason) => Err(reason.clone()),
                    None => Ok(out_dir.join(format!("{}.wav", item.item_id))),
                })
                .collect()
        }
    };

    // Contract checks on every produced file, builtins included.
    let checked: Vec<std::result::Result<PathBuf, String>> = opts.install(|| {
        manifest
            .items
            .par_iter()
            .zip(results.into_par_iter())
            .map(|(item, res)| {
                let path = res?;
                let reference = read_wav(&item.degraded_path).map_err(|e| e.to_string())?;
                check_output(&path, &reference)?;
                Ok(path)
            })
            .collect()
    })?;

    let mut failed = Vec::new();
    for (item, res) in manifest.items.iter_mut().zip(checked) {
        match res {
            Ok(path) => {
                item.restored_path = Some(path);
                item.failure = None;
            }
            Err(reason) => {
                warn!("item {} failed: {reason}", item.item_id);
                item.restored_path = None;
                failed.push(crate::metrics::FailedItem {
                    item_id: item.item_id.clone(),
                    reason: reason.clone(),
                });
                item.failure = Some(reason);
            }
        }
    }
    let restored_manifest = out_dir.join(MANIFEST_FILE);
    manifest.save(&restored_manifest)?;
    let outcome = EnhanceOutcome {
        enhancer: enhancer.clone(),
        manifest_path: restored_manifest,
        processed: manifest.items.len() - failed.len(),
        failed,
        manifest: Some(manifest),
    };
    write_json(&out_dir.join(ENHANCE_REPORT_FILE), &outcome)?;
    info!(
        "{enhancer}: {} restored, {} failed",
        outcome.processed,
        outcome.failed.len()
    );
    Ok(outcome)
}
