//! Signal primitives shared by every other module: the mono audio buffer,
//! WAV I/O, STFT/ISTFT, resampling, FIR low-pass design and level measurement.

mod fir;
mod resample;
mod stft;
pub mod wav;

pub use fir::{apply_fir, design_lowpass, FirFilter, LOWPASS_TAPS};
pub use resample::resample;
pub use stft::{istft, stft, Spectrogram, Window};

use crate::error::{Error, Result};

/// Level reported for an all-zero signal.
pub const SILENCE_DB: f64 = -120.0;

/// Mono sampled signal.
///
/// Samples are held as `f64` in memory; files on disk are written as 32-bit float.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidAudio("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidAudio(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    /// Builds a buffer that shares `like`'s sample rate. Used internally where
    /// the samples are known to be finite.
    pub(crate) fn with_rate_of(samples: Vec<f64>, like: &AudioBuffer) -> Self {
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Self {
            samples,
            sample_rate: like.sample_rate,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    pub fn scaled(&self, gain: f64) -> AudioBuffer {
        AudioBuffer::with_rate_of(self.samples.iter().map(|s| s * gain).collect(), self)
    }
}

pub(crate) fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt()
}

/// 20·log10(RMS), floored at [`SILENCE_DB`].
pub fn level_db(buf: &AudioBuffer) -> f64 {
    let r = buf.rms();
    if r > 0.0 {
        (20.0 * r.log10()).max(SILENCE_DB)
    } else {
        SILENCE_DB
    }
}
