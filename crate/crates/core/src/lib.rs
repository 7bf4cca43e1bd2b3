pub mod dsp;
pub mod error;

pub use dsp::AudioBuffer;
pub use error::{Error, Result};
pub mod degrade;
pub mod metrics;
pub mod synth;
pub mod conditioning;
pub mod baselines;
pub mod harness;
pub mod configs;
