//! Configurations shipped with the toolkit, addressable by file name.

use crate::degrade::DegradationSpec;
use crate::error::{Error, Result};
use crate::harness::ExperimentConfig;

/// `(file name, contents)` for every bundled configuration.
pub const BUNDLED: &[(&str, &str)] = &[
    ("paper-default.json", include_str!("../configs/paper-default.json")),
    ("paper-train.json", include_str!("../configs/paper-train.json")),
    ("table2-noise.json", include_str!("../configs/table2-noise.json")),
    ("table2-clip.json", include_str!("../configs/table2-clip.json")),
    ("table2-lpf.json", include_str!("../configs/table2-lpf.json")),
    ("table2-att.json", include_str!("../configs/table2-att.json")),
    ("table2-all.json", include_str!("../configs/table2-all.json")),
    ("sweep-att.json", include_str!("../configs/sweep-att.json")),
    ("sweep-snr.json", include_str!("../configs/sweep-snr.json")),
    ("matrix.json", include_str!("../configs/matrix.json")),
];

/// Contents of the bundled file `name` (with or without `.json`).
pub fn bundled(name: &str) -> Option<&'static str> {
    let with_ext = if name.ends_with(".json") { name.to_string() } else { format!("{name}.json") };
    BUNDLED.iter().find(|(n, _)| *n == with_ext).map(|(_, text)| *text)
}

pub fn bundled_spec(name: &str) -> Result<DegradationSpec> {
    let text = bundled(name).ok_or_else(|| Error::InvalidConfig(format!("no bundled config {name:?}")))?;
    let spec = DegradationSpec::from_json(text).map_err(|e| Error::InvalidConfig(format!("{name}: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

pub fn bundled_experiment(name: &str) -> Result<ExperimentConfig> {
    let text = bundled(name).ok_or_else(|| Error::InvalidConfig(format!("no bundled config {name:?}")))?;
    ExperimentConfig::from_json(text)
}
