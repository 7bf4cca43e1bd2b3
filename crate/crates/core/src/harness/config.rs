use std::path::Path;

use serde::{Deserialize, Serialize};

use super::enhance::{Builtin, Enhancer};
use crate::degrade::{DegradationSpec, NoiseSpec};
use crate::error::{Error, Result};

/// SNR used for columns that should carry no audible noise.
pub const NOISELESS_SNR_DB: f64 = 120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Matrix,
    AttenuationSweep,
    SnrSweep,
}

/// One single-distortion test condition, or all of them together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixColumn {
    Noise,
    Clip,
    Lpf,
    Att,
    All,
}

impl MatrixColumn {
    pub const ALL: [MatrixColumn; 5] = [
        MatrixColumn::Noise,
        MatrixColumn::Clip,
        MatrixColumn::Lpf,
        MatrixColumn::Att,
        MatrixColumn::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MatrixColumn::Noise => "noise",
            MatrixColumn::Clip => "clip",
            MatrixColumn::Lpf => "lpf",
            MatrixColumn::Att => "att",
            MatrixColumn::All => "all",
        }
    }

    /// `base` with only this column's factors enabled (probability 1). Ranges
    /// and the seed are kept.
    pub fn spec(self, base: &DegradationSpec) -> DegradationSpec {
        let mut s = base.clone();
        let on = |enabled: bool| if enabled { 1.0 } else { 0.0 };
        let all = self == MatrixColumn::All;
        s.clip.enabled_prob = on(all || self == MatrixColumn::Clip);
        s.lpf.enabled_prob = on(all || self == MatrixColumn::Lpf);
        s.attenuation.enabled_prob = on(all || self == MatrixColumn::Att);
        if !(all || self == MatrixColumn::Noise) {
            s.noise = NoiseSpec::SnrSetDb(vec![NOISELESS_SNR_DB]);
        }
        s
    }
}

pub fn default_attenuation_lengths() -> Vec<f64> {
    (0..=8).map(|i| 25.0 * i as f64).collect()
}

/// Nine equally spaced points from −2.5 to 17.5 dB.
pub fn default_snr_grid() -> Vec<f64> {
    let (lo, hi, n) = (-2.5, 17.5, 9);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn default_columns() -> Vec<MatrixColumn> {
    MatrixColumn::ALL.to_vec()
}

fn default_enhancer() -> Enhancer {
    Enhancer::Builtin(Builtin::Passthrough)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub spec: DegradationSpec,
    #[serde(default = "default_columns")]
    pub matrix: Vec<MatrixColumn>,
    #[serde(default = "default_attenuation_lengths")]
    pub attenuation_lengths_ms: Vec<f64>,
    #[serde(default = "default_snr_grid")]
    pub snr_grid_db: Vec<f64>,
    #[serde(default = "default_enhancer")]
    pub enhancer: Enhancer,
}

fn strictly_increasing(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidConfig(format!("{name} is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(format!("{name} must be finite and strictly increasing")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            spec: DegradationSpec::default(),
            matrix: default_columns(),
            attenuation_lengths_ms: default_attenuation_lengths(),
            snr_grid_db: default_snr_grid(),
            enhancer: default_enhancer(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        strictly_increasing("attenuation_lengths_ms", &self.attenuation_lengths_ms)?;
        if self.attenuation_lengths_ms[0] < 0.0 {
            return Err(Error::InvalidConfig("attenuation_lengths_ms must be non-negative".into()));
        }
        strictly_increasing("snr_grid_db", &self.snr_grid_db)?;
        if self.matrix.is_empty() {
            return Err(Error::InvalidConfig("matrix is empty".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let c: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        c.validate()?;
        Ok(c)
    }
}
