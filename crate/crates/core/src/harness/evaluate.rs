use rayon::prelude::*;

use super::{Manifest, ManifestItem, RunOptions};
use crate::dsp::wav::read_wav;
use crate::dsp::AudioBuffer;
use crate::error::Result;
use crate::metrics::{improvement_delta, lsd, seg_snr, stoi, FailedItem, ItemMetrics, MetricReport};

fn metrics_for(id: &str, clean: &AudioBuffer, processed: &AudioBuffer) -> std::result::Result<ItemMetrics, String> {
    if clean.len() != processed.len() {
        return Err(format!(
            "length mismatch: {} samples, clean has {}",
            processed.len(),
            clean.len()
        ));
    }
    let e = |e: crate::Error| e.to_string();
    Ok(ItemMetrics {
        item_id: id.to_string(),
        stoi: stoi(clean, processed).map_err(e)?,
        seg_snr_db: seg_snr(clean, processed).map_err(e)?,
        lsd_db: lsd(clean, processed).map_err(e)?,
    })
}

struct Evaluated {
    restored: ItemMetrics,
    degraded: ItemMetrics,
}

fn evaluate_item(item: &ManifestItem) -> std::result::Result<Evaluated, String> {
    if let Some(reason) = &item.failure {
        return Err(reason.clone());
    }
    let clean = read_wav(&item.clean_path).map_err(|e| e.to_string())?;
    let degraded = read_wav(&item.degraded_path).map_err(|e| e.to_string())?;
    let degraded_m = metrics_for(&item.item_id, &clean, &degraded)?;
    let restored_m = match &item.restored_path {
        Some(p) => {
            let restored = read_wav(p).map_err(|e| e.to_string())?;
            metrics_for(&item.item_id, &clean, &restored)?
        }
        None => degraded_m.clone(),
    };
    Ok(Evaluated {
        restored: restored_m,
        degraded: degraded_m,
    })
}

/// Scores each item's restored audio (or its degraded audio when nothing was
/// restored) against the clean reference. When any item has restored audio,
/// the report carries deltas against the degraded condition.
///
/// Failed or unscorable items are listed in `failed` and left out of the
/// aggregates.
pub fn evaluate_corpus(manifest: &Manifest, opts: &RunOptions) -> Result<MetricReport> {
    let results: Vec<(String, std::result::Result<Evaluated, String>)> = opts.install(|| {
        manifest
            .items
            .par_iter()
            .map(|item| (item.item_id.clone(), evaluate_item(item)))
            .collect()
    })?;
    let mut restored = Vec::new();
    let mut degraded = Vec::new();
    let mut failed = Vec::new();
    for (item_id, r) in results {
        match r {
            Ok(ev) => {
                restored.push(ev.restored);
                degraded.push(ev.degraded);
            }
            Err(reason) => failed.push(FailedItem { item_id, reason }),
        }
    }
    let report = MetricReport::new(restored, failed.clone());
    if manifest.items.iter().any(|i| i.restored_path.is_some()) {
        let baseline = MetricReport::new(degraded, failed);
        improvement_delta(&report, &baseline)
    } else {
        Ok(report)
    }
}
