//! Reference restorers with known behaviour, used to sanity-check the harness.

use crate::dsp::{self, AudioBuffer, Spectrogram, Window};
use crate::error::{Error, Result};

pub const TF_FRAME_SECS: f64 = 0.032;
pub const TF_HOP_SECS: f64 = 0.016;
pub const MASK_EPS: f64 = 1e-8;
pub const SUBTRACTION_ALPHA: f64 = 1.0;
pub const SUBTRACTION_BETA: f64 = 0.02;
pub const DEFAULT_NOISE_FRAMES: usize = 10;
/// Relative tolerance for deciding a sample sits at the clipping threshold.
pub const CLIP_DETECT_TOLERANCE: f64 = 1e-6;

/// STFT over a zero-padded copy, so every original sample is covered by two
/// full Hann frames and the inverse can be cropped back to the input length.
struct PaddedAnalysis {
    spec: Spectrogram,
    pad: usize,
    len: usize,
}

impl PaddedAnalysis {
    fn new(buf: &AudioBuffer) -> Result<Self> {
        let rate = buf.sample_rate() as f64;
        let frame = ((TF_FRAME_SECS * rate).round() as usize).max(16);
        let hop = ((TF_HOP_SECS * rate).round() as usize).clamp(1, frame);
        let pad = frame - hop;
        let mut total = buf.len() + 2 * pad;
        if total < frame {
            total = frame;
        }
        let rem = (total - frame) % hop;
        if rem != 0 {
            total += hop - rem;
        }
        let mut padded = vec![0.0; total];
        padded[pad..pad + buf.len()].copy_from_slice(buf.samples());
        let spec = dsp::stft(&AudioBuffer::with_rate_of(padded, buf), frame, hop, Window::Hann)?;
        Ok(Self {
            spec,
            pad,
            len: buf.len(),
        })
    }

    /// Indices of frames lying entirely inside the unpadded signal.
    fn interior_frames(&self) -> Vec<usize> {
        let (frame, hop) = (self.spec.frame_len(), self.spec.hop());
        (0..self.spec.n_frames())
            .filter(|f| f * hop >= self.pad && f * hop + frame <= self.pad + self.len)
            .collect()
    }

    fn synthesize(&self, spec: &Spectrogram) -> Result<AudioBuffer> {
        let full = dsp::istft(spec)?;
        let out = full.samples()[self.pad..self.pad + self.len].to_vec();
        Ok(AudioBuffer::with_rate_of(out, &full))
    }
}

/// The unprocessed input.
pub fn passthrough(x: &AudioBuffer) -> AudioBuffer {
    x.clone()
}

/// Clean-informed ratio mask `min(1, |S|/(|X|+ε))` on the noisy phase.
pub fn oracle_mask(x: &AudioBuffer, clean: &AudioBuffer) -> Result<AudioBuffer> {
    if x.sample_rate() != clean.sample_rate() {
        return Err(Error::RateMismatch(x.sample_rate(), clean.sample_rate()));
    }
    if x.len() != clean.len() {
        return Err(Error::LengthMismatch(x.len(), clean.len()));
    }
    let noisy = PaddedAnalysis::new(x)?;
    let target = PaddedAnalysis::new(clean)?;
    let mut masked = noisy.spec.clone();
    for (xb, sb) in masked.bins_mut().iter_mut().zip(
        target
            .spec
            .frames()
            .flat_map(|f| f.iter()),
    ) {
        let mask = (sb.norm() / (xb.norm() + MASK_EPS)).min(1.0);
        *xb *= mask;
    }
    noisy.synthesize(&masked)
}

/// Magnitude spectral subtraction with a noise floor averaged over the
/// `noise_frames` lowest-energy frames.
pub fn spectral_subtract(x: &AudioBuffer, noise_frames: usize) -> Result<AudioBuffer> {
    let analysis = PaddedAnalysis::new(x)?;
    let spec = &analysis.spec;
    let mut candidates = analysis.interior_frames();
    if candidates.is_empty() {
        candidates = (0..spec.n_frames()).collect();
    }
    let energy = |f: usize| spec.frame(f).iter().map(|c| c.norm_sqr()).sum::<f64>();
    candidates.sort_by(|&a, &b| energy(a).total_cmp(&energy(b)).then(a.cmp(&b)));
    let chosen = &candidates[..noise_frames.clamp(1, candidates.len())];
    let n_bins = spec.n_bins();
    let mut floor = vec![0.0; n_bins];
    for &f in chosen {
        for (acc, c) in floor.iter_mut().zip(spec.frame(f)) {
            *acc += c.norm();
        }
    }
    floor.iter_mut().for_each(|v| *v /= chosen.len() as f64);

    let mut out = spec.clone();
    for f in 0..out.n_frames() {
        for (c, &n) in out.frame_mut(f).iter_mut().zip(&floor) {
            let mag = c.norm();
            if mag == 0.0 {
                continue;
            }
            let target = (mag - SUBTRACTION_ALPHA * n).max(SUBTRACTION_BETA * mag);
            *c *= target / mag;
        }
    }
    analysis.synthesize(&out)
}

fn hermite(p0: f64, m0: f64, p1: f64, m1: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * m1
}

/// Replaces each run of samples at `|x| ≥ threshold·(1−1e-6)` with a cubic
/// Hermite segment between the nearest unclipped neighbours, with slopes from
/// the next sample out on each side. Runs touching either end of the buffer
/// are held at ±threshold.
pub fn declip_interpolate(x: &AudioBuffer, threshold: f64) -> Result<AudioBuffer> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidAudio(format!("declip threshold {threshold} must be positive")));
    }
    let s = x.samples();
    let level = threshold * (1.0 - CLIP_DETECT_TOLERANCE);
    let clipped: Vec<bool> = s.iter().map(|v| v.abs() >= level).collect();
    if !clipped.iter().any(|&c| c) {
        return Ok(x.clone());
    }
    if clipped.iter().all(|&c| c) {
        return Err(Error::NoAnchors);
    }
    let n = s.len();
    let mut out = s.to_vec();
    let mut i = 0;
    while i < n {
        if !clipped[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && clipped[i] {
            i += 1;
        }
        let end = i; // exclusive
        if start == 0 || end == n {
            for v in &mut out[start..end] {
                *v = threshold.copysign(*v);
            }
            continue;
        }
        let (l, r) = (start - 1, end);
        let slope_l = if l >= 1 && !clipped[l - 1] { s[l] - s[l - 1] } else { 0.0 };
        let slope_r = if r + 1 < n && !clipped[r + 1] { s[r + 1] - s[r] } else { 0.0 };
        let span = (r - l) as f64;
        for (k, v) in (start..end).zip(&mut out[start..end]) {
            let t = (k - l) as f64 / span;
            *v = hermite(s[l], slope_l * span, s[r], slope_r * span, t);
        }
    }
    Ok(AudioBuffer::with_rate_of(out, x))
}
