use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 1234;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// How a clip ratio turns into an amplitude threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipMode {
    /// threshold = ratio · max|s|
    #[default]
    PeakRelative,
    /// threshold = ratio
    Absolute,
}

impl ClipMode {
    fn is_default(&self) -> bool {
        *self == ClipMode::default()
    }
}

/// One stage of the speech-side degradation f.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Attenuation,
    Clip,
    Lpf,
}

pub const DEFAULT_ORDER: [Stage; 3] = [Stage::Attenuation, Stage::Clip, Stage::Lpf];

fn default_order() -> Vec<Stage> {
    DEFAULT_ORDER.to_vec()
}

fn is_default_order(order: &[Stage]) -> bool {
    order == DEFAULT_ORDER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipSpec {
    pub enabled_prob: f64,
    pub ratio_range: [f64; 2],
    #[serde(default, skip_serializing_if = "ClipMode::is_default")]
    pub mode: ClipMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpfSpec {
    pub enabled_prob: f64,
    pub cutoff_range_hz: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttenuationSpec {
    pub enabled_prob: f64,
    pub gain_range: [f64; 2],
    pub duration_range_ms: [f64; 2],
    pub max_regions: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    SnrSetDb(Vec<f64>),
    SnrRangeDb([f64; 2]),
}

/// Full parameterisation of the speech degradation f and the noise mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationSpec {
    pub clip: ClipSpec,
    pub lpf: LpfSpec,
    pub attenuation: AttenuationSpec,
    pub noise: NoiseSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_order", skip_serializing_if = "is_default_order")]
    pub chain_order: Vec<Stage>,
}

impl Default for DegradationSpec {
    /// Ranges of the multi-distortion protocol with the augmentation
    /// probabilities 0.25 / 0.5 / 0.8 and the four test SNRs.
    fn default() -> Self {
        Self {
            clip: ClipSpec {
                enabled_prob: 0.25,
                ratio_range: [0.06, 0.9],
                mode: ClipMode::PeakRelative,
            },
            lpf: LpfSpec {
                enabled_prob: 0.5,
                cutoff_range_hz: [2000.0, 8000.0],
            },
            attenuation: AttenuationSpec {
                enabled_prob: 0.8,
                gain_range: [0.0, 0.01],
                duration_range_ms: [10.0, 50.0],
                max_regions: 20,
            },
            noise: NoiseSpec::SnrSetDb(vec![2.5, 7.5, 12.5, 17.5]),
            seed: DEFAULT_SEED,
            chain_order: default_order(),
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{name} = {p} is not a probability")))
    }
}

fn check_range(name: &str, r: [f64; 2]) -> Result<()> {
    if r.iter().all(|v| v.is_finite()) && r[0] <= r[1] {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{name} = {r:?} is not an ordered finite range")))
    }
}

impl DegradationSpec {
    /// Training-side SNR set (0, 5, 10, 15 dB); everything else as [`Default`].
    pub fn training_default() -> Self {
        Self {
            noise: NoiseSpec::SnrSetDb(vec![0.0, 5.0, 10.0, 15.0]),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_prob("clip.enabled_prob", self.clip.enabled_prob)?;
        check_prob("lpf.enabled_prob", self.lpf.enabled_prob)?;
        check_prob("attenuation.enabled_prob", self.attenuation.enabled_prob)?;

        check_range("clip.ratio_range", self.clip.ratio_range)?;
        if !(self.clip.ratio_range[0] > 0.0 && self.clip.ratio_range[1] <= 1.0) {
            return Err(Error::InvalidSpec("clip.ratio_range must lie in (0, 1]".into()));
        }
        check_range("lpf.cutoff_range_hz", self.lpf.cutoff_range_hz)?;
        if self.lpf.cutoff_range_hz[0] <= 0.0 {
            return Err(Error::InvalidSpec("lpf.cutoff_range_hz must be positive".into()));
        }
        let att = &self.attenuation;
        check_range("attenuation.gain_range", att.gain_range)?;
        if !(att.gain_range[0] >= 0.0 && att.gain_range[1] < 1.0) {
            return Err(Error::InvalidSpec("attenuation.gain_range must lie in [0, 1)".into()));
        }
        check_range("attenuation.duration_range_ms", att.duration_range_ms)?;
        if att.duration_range_ms[0] < 0.0 {
            return Err(Error::InvalidSpec("attenuation.duration_range_ms must be non-negative".into()));
        }
        if att.max_regions == 0 {
            return Err(Error::InvalidSpec("attenuation.max_regions must be positive".into()));
        }
        match &self.noise {
            NoiseSpec::SnrSetDb(set) => {
                if set.is_empty() || set.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSpec("noise.snr_set_db must be a non-empty list of finite values".into()));
                }
            }
            NoiseSpec::SnrRangeDb(r) => check_range("noise.snr_range_db", *r)?,
        }
        let mut seen = Vec::new();
        for s in &self.chain_order {
            if seen.contains(s) {
                return Err(Error::InvalidSpec(format!("chain_order repeats {s:?}")));
            }
            seen.push(*s);
        }
        if seen.len() != DEFAULT_ORDER.len() {
            return Err(Error::InvalidSpec("chain_order must list attenuation, clip and lpf once each".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
