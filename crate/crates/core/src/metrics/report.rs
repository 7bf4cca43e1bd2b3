use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const METRICS_NOTE: &str =
    "stoi: canonical STOI; seg_snr_db and lsd_db are deterministic substitutes for PESQ and NISQA, not PESQ/NISQA values";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMetrics {
    pub item_id: String,
    pub stoi: f64,
    pub seg_snr_db: f64,
    pub lsd_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Stat {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stat {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Stat {
        let n = values.clone().count();
        if n == 0 {
            return Stat::default();
        }
        let mean = values.clone().sum::<f64>() / n as f64;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        Stat {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub stoi: Stat,
    pub seg_snr_db: Stat,
    pub lsd_db: Stat,
}

impl Aggregate {
    pub fn of(items: &[ItemMetrics]) -> Aggregate {
        Aggregate {
            count: items.len(),
            stoi: Stat::of(items.iter().map(|i| i.stoi)),
            seg_snr_db: Stat::of(items.iter().map(|i| i.seg_snr_db)),
            lsd_db: Stat::of(items.iter().map(|i| i.lsd_db)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    pub per_item: Vec<ItemMetrics>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedItem {
    pub item_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub metrics_note: String,
    pub per_item: Vec<ItemMetrics>,
    pub aggregate: Aggregate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Deltas>,
    #[serde(default)]
    pub failed: Vec<FailedItem>,
}

impl MetricReport {
    /// Sorts items and failures by id and computes the aggregate.
    pub fn new(mut per_item: Vec<ItemMetrics>, mut failed: Vec<FailedItem>) -> MetricReport {
        per_item.sort_by(|a, b| a.item_id.cmp(&b.item_id));
        failed.sort_by(|a, b| a.item_id.cmp(&b.item_id));
        let aggregate = Aggregate::of(&per_item);
        MetricReport {
            schema_version: REPORT_SCHEMA_VERSION,
            metrics_note: METRICS_NOTE.to_string(),
            per_item,
            aggregate,
            deltas: None,
            failed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// `item_id,stoi,seg_snr_db,lsd_db`, one row per item then a `mean` row.
    pub fn to_csv(&self) -> String {
        metrics_csv(&self.per_item, &self.aggregate)
    }

    pub fn deltas_csv(&self) -> Option<String> {
        self.deltas
            .as_ref()
            .map(|d| metrics_csv(&d.per_item, &d.aggregate))
    }
}

pub const CSV_HEADER: &str = "item_id,stoi,seg_snr_db,lsd_db";
pub const CSV_AGGREGATE_ID: &str = "mean";

fn metrics_csv(items: &[ItemMetrics], agg: &Aggregate) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for i in items {
        out.push_str(&format!("{},{},{},{}\n", i.item_id, i.stoi, i.seg_snr_db, i.lsd_db));
    }
    out.push_str(&format!(
        "{CSV_AGGREGATE_ID},{},{},{}\n",
        agg.stoi.mean, agg.seg_snr_db.mean, agg.lsd_db.mean
    ));
    out
}

/// Per-item and aggregate `report − baseline`, attached as `deltas`.
pub fn improvement_delta(report: &MetricReport, baseline: &MetricReport) -> Result<MetricReport> {
    fn ids(r: &MetricReport) -> Vec<&str> {
        let mut v: Vec<&str> = r.per_item.iter().map(|i| i.item_id.as_str()).collect();
        v.sort_unstable();
        v
    }
    if ids(report) != ids(baseline) {
        return Err(Error::IncomparableReports(format!(
            "{} items vs {} items with different ids",
            report.per_item.len(),
            baseline.per_item.len()
        )));
    }
    let mut per_item: Vec<ItemMetrics> = report
        .per_item
        .iter()
        .map(|r| {
            let b = baseline
                .per_item
                .iter()
                .find(|b| b.item_id == r.item_id)
                .expect("ids checked");
            ItemMetrics {
                item_id: r.item_id.clone(),
                stoi: r.stoi - b.stoi,
                seg_snr_db: r.seg_snr_db - b.seg_snr_db,
                lsd_db: r.lsd_db - b.lsd_db,
            }
        })
        .collect();
    per_item.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    let aggregate = Aggregate::of(&per_item);
    let mut out = report.clone();
    out.deltas = Some(Deltas {
        per_item,
        aggregate,
    });
    Ok(out)
}
