//! Objective metrics: STOI, segmental SNR and log-spectral distance.
//!
//! Segmental SNR and LSD stand in for PESQ and NISQA, which are not
//! implemented here; every [`MetricReport`] carries a note saying so.

mod report;
mod stoi;

pub use report::{
    improvement_delta, Aggregate, Deltas, FailedItem, ItemMetrics, MetricReport, Stat,
    CSV_AGGREGATE_ID, CSV_HEADER, METRICS_NOTE, REPORT_SCHEMA_VERSION,
};
pub use stoi::{stoi, STOI_RATE};

use crate::dsp::{self, AudioBuffer, Window};
use crate::error::{Error, Result};

pub const SEG_SNR_MIN_DB: f64 = -10.0;
pub const SEG_SNR_MAX_DB: f64 = 35.0;
pub const SEG_SNR_FRAME_SECS: f64 = 0.030;
/// Frames more than this far below the loudest clean frame are ignored.
pub const SEG_SNR_ACTIVITY_DB: f64 = -60.0;

pub const LSD_FRAME_SECS: f64 = 0.032;
pub const LSD_HOP_SECS: f64 = 0.016;
pub const LSD_POWER_FLOOR: f64 = 1e-10;

fn check_pair(clean: &AudioBuffer, processed: &AudioBuffer) -> Result<()> {
    if clean.sample_rate() != processed.sample_rate() {
        return Err(Error::RateMismatch(clean.sample_rate(), processed.sample_rate()));
    }
    if clean.len() != processed.len() {
        return Err(Error::LengthMismatch(clean.len(), processed.len()));
    }
    Ok(())
}

fn frame_samples(secs: f64, rate: u32) -> usize {
    ((secs * rate as f64).round() as usize).max(1)
}

/// Mean over active 30 ms frames of the frame SNR, each clamped to
/// [[`SEG_SNR_MIN_DB`], [`SEG_SNR_MAX_DB`]].
pub fn seg_snr(clean: &AudioBuffer, processed: &AudioBuffer) -> Result<f64> {
    check_pair(clean, processed)?;
    let len = frame_samples(SEG_SNR_FRAME_SECS, clean.sample_rate());
    let frames: Vec<(f64, f64)> = clean
        .samples()
        .chunks_exact(len)
        .zip(processed.samples().chunks_exact(len))
        .map(|(c, p)| {
            let signal: f64 = c.iter().map(|v| v * v).sum();
            let error: f64 = c.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
            (signal, error)
        })
        .collect();
    let peak = frames.iter().map(|f| f.0).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::SilentReference);
    }
    let threshold = peak * 10f64.powf(SEG_SNR_ACTIVITY_DB / 10.0);
    let active: Vec<f64> = frames
        .iter()
        .filter(|(s, _)| *s > threshold)
        .map(|&(s, e)| {
            if e == 0.0 {
                SEG_SNR_MAX_DB
            } else {
                (10.0 * (s / e).log10()).clamp(SEG_SNR_MIN_DB, SEG_SNR_MAX_DB)
            }
        })
        .collect();
    Ok(active.iter().sum::<f64>() / active.len() as f64)
}

/// Mean over frames of the RMS (over bins) log-power difference.
pub fn lsd(clean: &AudioBuffer, processed: &AudioBuffer) -> Result<f64> {
    check_pair(clean, processed)?;
    let rate = clean.sample_rate();
    let frame = frame_samples(LSD_FRAME_SECS, rate);
    let hop = frame_samples(LSD_HOP_SECS, rate);
    let a = dsp::stft(clean, frame, hop, Window::Hann)?;
    let b = dsp::stft(processed, frame, hop, Window::Hann)?;
    let log_power = |c: &rustfft::num_complex::Complex64| 10.0 * (c.norm_sqr() + LSD_POWER_FLOOR).log10();
    let total: f64 = a
        .frames()
        .zip(b.frames())
        .map(|(fa, fb)| {
            let ms = fa
                .iter()
                .zip(fb)
                .map(|(x, y)| (log_power(x) - log_power(y)).powi(2))
                .sum::<f64>()
                / fa.len() as f64;
            ms.sqrt()
        })
        .sum();
    Ok(total / a.n_frames() as f64)
}
