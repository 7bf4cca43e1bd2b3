use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};

use super::config::MatrixColumn;
use super::enhance::{run_enhancer, Enhancer};
use super::{build_corpus, create_dir, evaluate_corpus, write_json, write_text, RunOptions, MANIFEST_FILE};
use crate::degrade::{DegradationSpec, NoiseSpec};
use crate::error::{Error, Result};
use crate::metrics::{Aggregate, MetricReport, Stat};

pub const SWEEP_CSV_HEADER: &str = "sweep_value,metric,mean,std,delta_mean,delta_std,evaluated,failed";
pub const MATRIX_CSV_HEADER: &str = "column,metric,mean,std,delta_mean,delta_std,evaluated,failed";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// `attenuation_ms` or `snr_db`.
    pub variable: String,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixResult {
    pub columns: Vec<(MatrixColumn, MetricReport)>,
}

fn metric_stats(agg: &Aggregate) -> [(&'static str, Stat); 3] {
    [
        ("stoi", agg.stoi),
        ("seg_snr_db", agg.seg_snr_db),
        ("lsd_db", agg.lsd_db),
    ]
}

/// One CSV row per metric for a single report.
fn report_rows(key: &str, report: &MetricReport, out: &mut String) {
    let deltas = report.deltas.as_ref().map(|d| metric_stats(&d.aggregate));
    for (k, (name, stat)) in metric_stats(&report.aggregate).into_iter().enumerate() {
        let (dm, ds) = match &deltas {
            Some(d) => (d[k].1.mean.to_string(), d[k].1.std.to_string()),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{key},{name},{},{},{dm},{ds},{},{}\n",
            stat.mean,
            stat.std,
            report.aggregate.count,
            report.failed.len()
        ));
    }
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{SWEEP_CSV_HEADER}\n");
        for p in &self.points {
            report_rows(&p.value.to_string(), &p.report, &mut out);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep serialises")
    }
}

impl MatrixResult {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{MATRIX_CSV_HEADER}\n");
        for (col, report) in &self.columns {
            report_rows(col.name(), report, &mut out);
        }
        out
    }

    pub fn report(&self, column: MatrixColumn) -> Option<&MetricReport> {
        self.columns.iter().find(|(c, _)| *c == column).map(|(_, r)| r)
    }
}

/// Builds, enhances and evaluates one corpus under `dir`.
fn run_point(
    clean_dir: &Path,
    noise_dir: &Path,
    spec: &DegradationSpec,
    enhancer: &Enhancer,
    dir: &Path,
    opts: &RunOptions,
) -> Result<MetricReport> {
    let dir = create_dir(dir)?;
    build_corpus(clean_dir, noise_dir, spec, &dir, opts)?;
    let outcome = run_enhancer(&dir.join(MANIFEST_FILE), enhancer, &dir.join("restored"), opts)?;
    let manifest = outcome.manifest.expect("outcome carries its manifest");
    let report = evaluate_corpus(&manifest, opts)?;
    write_json(&dir.join(REPORT_FILE), &report)?;
    Ok(report)
}

fn check_increasing(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(format!("{name} must be non-empty and strictly increasing")));
    }
    Ok(())
}

fn finish_sweep(result: SweepResult, out_dir: &Path) -> Result<SweepResult> {
    write_text(&out_dir.join("sweep.csv"), &result.to_csv())?;
    write_text(&out_dir.join("sweep.json"), &(result.to_json() + "\n"))?;
    Ok(result)
}

/// One corpus per attenuation length with every region exactly that long.
/// Length 0 disables attenuation. The master seed is shared by all points.
pub fn sweep_attenuation(
    clean_dir: &Path,
    noise_dir: &Path,
    base: &DegradationSpec,
    lengths_ms: &[f64],
    enhancer: &Enhancer,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<SweepResult> {
    check_increasing("attenuation lengths", lengths_ms)?;
    if lengths_ms[0] < 0.0 {
        return Err(Error::InvalidConfig("attenuation lengths must be non-negative".into()));
    }
    let out_dir = create_dir(out_dir)?;
    let mut points = Vec::new();
    for (i, &len) in lengths_ms.iter().enumerate() {
        let mut spec = base.clone();
        if len == 0.0 {
            spec.attenuation.enabled_prob = 0.0;
        } else {
            spec.attenuation.duration_range_ms = [len, len];
        }
        info!("attenuation sweep point {len} ms");
        let report = run_point(clean_dir, noise_dir, &spec, enhancer, &out_dir.join(format!("point_{i}")), opts)?;
        points.push(SweepPoint { value: len, report });
    }
    finish_sweep(
        SweepResult {
            variable: "attenuation_ms".into(),
            points,
        },
        &out_dir,
    )
}

/// One corpus per SNR with the SNR set pinned to that value.
pub fn sweep_snr(
    clean_dir: &Path,
    noise_dir: &Path,
    base: &DegradationSpec,
    grid_db: &[f64],
    enhancer: &Enhancer,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<SweepResult> {
    check_increasing("SNR grid", grid_db)?;
    let out_dir = create_dir(out_dir)?;
    let mut points = Vec::new();
    for (i, &snr) in grid_db.iter().enumerate() {
        let mut spec = base.clone();
        spec.noise = NoiseSpec::SnrSetDb(vec![snr]);
        info!("SNR sweep point {snr} dB");
        let report = run_point(clean_dir, noise_dir, &spec, enhancer, &out_dir.join(format!("point_{i}")), opts)?;
        points.push(SweepPoint { value: snr, report });
    }
    finish_sweep(
        SweepResult {
            variable: "snr_db".into(),
            points,
        },
        &out_dir,
    )
}

/// One corpus per distortion column, each under `out_dir/<column>`.
pub fn run_matrix(
    clean_dir: &Path,
    noise_dir: &Path,
    base: &DegradationSpec,
    columns: &[MatrixColumn],
    enhancer: &Enhancer,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<MatrixResult> {
    if columns.is_empty() {
        return Err(Error::InvalidConfig("matrix has no columns".into()));
    }
    let out_dir = create_dir(out_dir)?;
    let mut result = MatrixResult { columns: Vec::new() };
    for &col in columns {
        info!("matrix column {}", col.name());
        let report = run_point(clean_dir, noise_dir, &col.spec(base), enhancer, &out_dir.join(col.name()), opts)?;
        result.columns.push((col, report));
    }
    write_text(&out_dir.join("matrix.csv"), &result.to_csv())?;
    write_json(&out_dir.join("matrix.json"), &result)?;
    Ok(result)
}
