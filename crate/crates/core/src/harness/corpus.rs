use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{create_dir, write_json, Manifest, ManifestItem, RunOptions, SkippedInput, MANIFEST_FILE, MANIFEST_SCHEMA_VERSION};
use crate::degrade::{apply_chain_detailed, draw_noise_offset, sample_applied, DegradationSpec};
use crate::dsp::wav::{read_wav, write_wav};
use crate::dsp::{resample, AudioBuffer};
use crate::error::{Error, Result};
use crate::synth;

const NOISE_SHUFFLE_STREAM: u64 = 6;

/// `*.wav` files directly inside `dir`, sorted by file name.
fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_wav = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            out.push(fs::canonicalize(&path).map_err(|e| Error::io(&path, e))?);
        }
    }
    out.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

struct NoiseFile {
    path: PathBuf,
    audio: AudioBuffer,
}

enum Built {
    Item(Box<ManifestItem>),
    Skipped(SkippedInput),
}

/// Degrades every clean WAV in `clean_dir` with noise from `noise_dir` and
/// writes `degraded/<id>.wav`, `degraded/<id>.json` and the manifest under
/// `out_dir`.
pub fn build_corpus(
    clean_dir: &Path,
    noise_dir: &Path,
    spec: &DegradationSpec,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<Manifest> {
    spec.validate()?;
    let clean_files = list_wavs(clean_dir)?;
    if clean_files.is_empty() {
        return Err(Error::NoInputItems(clean_dir.to_path_buf()));
    }
    let noise_files = list_wavs(noise_dir)?;
    if noise_files.is_empty() {
        return Err(Error::NoInputItems(noise_dir.to_path_buf()));
    }
    let out_dir = create_dir(out_dir)?;
    let degraded_dir = create_dir(&out_dir.join("degraded"))?;

    opts.install(|| {
        let mut skipped = Vec::new();
        let mut noises = Vec::new();
        for (path, res) in noise_files
            .par_iter()
            .map(|p| (p.clone(), read_wav(p)))
            .collect::<Vec<_>>()
        {
            match res {
                Ok(audio) => noises.push(NoiseFile { path, audio }),
                Err(e) => {
                    warn!("skipping noise file {}: {e}", path.display());
                    skipped.push(SkippedInput {
                        path,
                        reason: e.to_string(),
                    });
                }
            }
        }
        if noises.is_empty() {
            return Err(Error::NoInputItems(noise_dir.to_path_buf()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(NOISE_SHUFFLE_STREAM);
        noises.shuffle(&mut rng);

        let cleans: Vec<Result<AudioBuffer>> = clean_files.par_iter().map(read_wav).collect();

        // Noise at each clean sample rate, computed once per rate.
        let mut rates: Vec<u32> = cleans.iter().flatten().map(|b| b.sample_rate()).collect();
        rates.sort_unstable();
        rates.dedup();
        let pairs: Vec<(u32, usize)> = rates
            .iter()
            .flat_map(|&r| (0..noises.len()).map(move |n| (r, n)))
            .collect();
        let resampled: BTreeMap<(u32, usize), AudioBuffer> = pairs
            .par_iter()
            .map(|&(r, n)| ((r, n), resample(&noises[n].audio, r)))
            .collect();

        let mut seen = std::collections::HashSet::new();
        let duplicate: Vec<bool> = clean_files.iter().map(|p| !seen.insert(stem(p))).collect();

        let built: Vec<Result<Built>> = clean_files
            .par_iter()
            .zip(cleans.into_par_iter())
            .enumerate()
            .map(|(index, (path, clean))| {
                let skip = |reason: String| {
                    warn!("skipping {}: {reason}", path.display());
                    Ok(Built::Skipped(SkippedInput {
                        path: path.clone(),
                        reason,
                    }))
                };
                if duplicate[index] {
                    return skip(format!("duplicate item id {:?}", stem(path)));
                }
                let clean = match clean {
                    Ok(c) => c,
                    Err(e) => return skip(e.to_string()),
                };
                let which = index % noises.len();
                let noise = &resampled[&(clean.sample_rate(), which)];
                let mut applied = sample_applied(spec, index as u64, clean.len(), clean.sample_rate())?;
                applied.noise_source = file_name(&noises[which].path);
                applied.noise_offset = draw_noise_offset(applied.seed_used, noise.len(), clean.len());
                let out = match apply_chain_detailed(&clean, noise, &applied) {
                    Ok(out) => out,
                    Err(e) => return skip(e.to_string()),
                };
                applied.levels = Some(out.levels);
                let id = stem(path);
                let degraded_path = degraded_dir.join(format!("{id}.wav"));
                write_wav(&degraded_path, &out.mixture)?;
                write_json(&degraded_dir.join(format!("{id}.json")), &applied)?;
                Ok(Built::Item(Box::new(ManifestItem {
                    item_id: id,
                    clean_path: path.clone(),
                    noise_path: noises[which].path.clone(),
                    degraded_path,
                    restored_path: None,
                    applied,
                    failure: None,
                })))
            })
            .collect();

        let mut items = Vec::new();
        for b in built {
            match b? {
                Built::Item(i) => items.push(*i),
                Built::Skipped(s) => skipped.push(s),
            }
        }
        if items.is_empty() {
            return Err(Error::NoInputItems(clean_dir.to_path_buf()));
        }
        items.sort_by(|a, b| a.item_id.cmp(&b.item_id));
        let manifest = Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            items,
            spec: spec.clone(),
            created_utc: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            skipped,
        };
        manifest.save(out_dir.join(MANIFEST_FILE))?;
        info!(
            "built {} items ({} skipped) in {}",
            manifest.items.len(),
            manifest.skipped.len(),
            out_dir.display()
        );
        Ok(manifest)
    })?
}

/// Writes `n_items` speech-like clean files and two white-noise files under
/// `dir/clean` and `dir/noise`, returning those two directories.
pub fn write_synthetic_inputs(
    dir: &Path,
    n_items: usize,
    duration_secs: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<(PathBuf, PathBuf)> {
    let clean_dir = create_dir(&dir.join("clean"))?;
    let noise_dir = create_dir(&dir.join("noise"))?;
    for i in 0..n_items {
        let s = synth::speech_like(seed.wrapping_add(i as u64), duration_secs, sample_rate);
        write_wav(clean_dir.join(format!("utt{i:03}.wav")), &s)?;
    }
    let noise_len = (duration_secs * 2.0 * sample_rate as f64) as usize;
    for i in 0..2u64 {
        let n = synth::white_noise(seed ^ (0xA5A5 + i), noise_len, sample_rate, 0.3);
        write_wav(noise_dir.join(format!("noise{i}.wav")), &n)?;
    }
    Ok((clean_dir, noise_dir))
}
