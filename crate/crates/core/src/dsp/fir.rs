use std::f64::consts::PI;

use super::AudioBuffer;
use crate::error::{Error, Result};

/// Tap count used for every cutoff at or above `14·fs/511` (≈ 440 Hz at 16 kHz).
pub const LOWPASS_TAPS: usize = 511;

/// Linear-phase (type I) FIR filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
}

impl FirFilter {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.len().is_multiple_of(2) {
            return Err(Error::InvalidAudio("FIR tap count must be odd".into()));
        }
        let n = taps.len();
        for i in 0..n / 2 {
            if (taps[i] - taps[n - 1 - i]).abs() > 1e-12 {
                return Err(Error::InvalidAudio("FIR taps must be symmetric".into()));
            }
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn group_delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Magnitude response at `freq` Hz for sample rate `sample_rate`.
    pub fn magnitude_at(&self, freq: f64, sample_rate: u32) -> f64 {
        let w = 2.0 * PI * freq / sample_rate as f64;
        let (re, im) = self
            .taps
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (n, &h)| {
                (re + h * (w * n as f64).cos(), im - h * (w * n as f64).sin())
            });
        (re * re + im * im).sqrt()
    }
}

/// Blackman-windowed sinc low-pass with unit DC gain.
///
/// Uses [`LOWPASS_TAPS`] taps unless the cutoff is so low relative to the
/// sample rate that the transition band (0.8·cutoff to 1.2·cutoff) would be
/// narrower than the window's main lobe; the length then grows to keep the
/// −50 dB stopband at 1.2·cutoff.
pub fn design_lowpass(cutoff: f64, sample_rate: u32) -> Result<FirFilter> {
    let fs = sample_rate as f64;
    if !(cutoff > 0.0 && cutoff < fs / 2.0) {
        return Err(Error::InvalidCutoff {
            cutoff,
            sample_rate,
        });
    }
    let needed = (14.0 * fs / cutoff).ceil() as usize;
    let n_taps = LOWPASS_TAPS.max(needed | 1);
    let center = (n_taps / 2) as isize;
    let fc = cutoff / fs;
    let m_max = (n_taps - 1) as f64;
    let half: Vec<f64> = (0..=center)
        .map(|m| {
            let n = (center + m) as f64;
            let w = 0.42 - 0.5 * (2.0 * PI * n / m_max).cos() + 0.08 * (4.0 * PI * n / m_max).cos();
            let sinc = if m == 0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * m as f64).sin() / (PI * m as f64)
            };
            sinc * w
        })
        .collect();
    let dc: f64 = half[0] + 2.0 * half[1..].iter().sum::<f64>();
    let taps: Vec<f64> = (0..n_taps)
        .map(|i| half[(i as isize - center).unsigned_abs()] / dc)
        .collect();
    FirFilter::new(taps)
}

/// Zero-padded convolution, shifted by the group delay so the output lines up
/// with the input and keeps its length.
pub fn apply_fir(buf: &AudioBuffer, filt: &FirFilter) -> AudioBuffer {
    let x = buf.samples();
    let h = filt.taps();
    let d = filt.group_delay() as isize;
    let n = x.len() as isize;
    let out = (0..n)
        .map(|i| {
            // y[i] = Σ_k h[k]·x[i + d − k]
            let k_lo = (i + d - (n - 1)).max(0) as usize;
            let k_hi = ((i + d) as usize).min(h.len() - 1);
            if k_lo > k_hi {
                return 0.0;
            }
            let base = (i + d) as usize;
            h[k_lo..=k_hi]
                .iter()
                .enumerate()
                .map(|(j, &hk)| hk * x[base - (k_lo + j)])
                .sum()
        })
        .collect();
    AudioBuffer::with_rate_of(out, buf)
}
