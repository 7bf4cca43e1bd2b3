//! Short-time objective intelligibility.
//!
//! Canonical parameterisation: 10 kHz analysis, 256-sample Hann frames
//! zero-padded to a 512-point FFT with 50 % overlap, 15 one-third-octave
//! bands from 150 Hz, 30-frame (384 ms) envelope segments, −15 dB
//! signal-to-distortion clipping bound and 40 dB silent-frame removal.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dsp::{resample, AudioBuffer};
use crate::error::{Error, Result};

pub const STOI_RATE: u32 = 10_000;
pub const FRAME_LEN: usize = 256;
pub const HOP: usize = FRAME_LEN / 2;
pub const NFFT: usize = 512;
pub const NUM_BANDS: usize = 15;
pub const MIN_FREQ: f64 = 150.0;
pub const SEGMENT_FRAMES: usize = 30;
pub const BETA_DB: f64 = -15.0;
pub const DYN_RANGE_DB: f64 = 40.0;

const EPS: f64 = f64::EPSILON;

/// `hanning(FRAME_LEN + 2)` with the two zero end points dropped.
fn analysis_window() -> Vec<f64> {
    let m = (FRAME_LEN + 1) as f64;
    (1..=FRAME_LEN)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / m).cos())
        .collect()
}

fn frame_count(len: usize) -> usize {
    if len < FRAME_LEN {
        0
    } else {
        (len - FRAME_LEN) / HOP + 1
    }
}

/// Drops frames whose clean energy is more than [`DYN_RANGE_DB`] below the
/// loudest clean frame and overlap-adds the remaining windowed frames of both
/// signals.
fn remove_silent_frames(x: &[f64], y: &[f64], win: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = frame_count(x.len());
    let energy_db = |start: usize| -> f64 {
        let e: f64 = x[start..start + FRAME_LEN]
            .iter()
            .zip(win)
            .map(|(v, w)| (v * w) * (v * w))
            .sum();
        20.0 * (e.sqrt() + EPS).log10()
    };
    let energies: Vec<f64> = (0..n).map(|f| energy_db(f * HOP)).collect();
    let max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = (0..n).filter(|&f| energies[f] > max - DYN_RANGE_DB).collect();
    if kept.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let out_len = (kept.len() - 1) * HOP + FRAME_LEN;
    let mut xs = vec![0.0; out_len];
    let mut ys = vec![0.0; out_len];
    for (i, &f) in kept.iter().enumerate() {
        let src = f * HOP;
        let dst = i * HOP;
        for k in 0..FRAME_LEN {
            xs[dst + k] += x[src + k] * win[k];
            ys[dst + k] += y[src + k] * win[k];
        }
    }
    (xs, ys)
}

/// `(low_bin, high_bin)` per band, high exclusive.
pub(crate) fn third_octave_bands() -> Vec<(usize, usize)> {
    let df = STOI_RATE as f64 / NFFT as f64;
    let n_bins = NFFT / 2 + 1;
    let nearest = |f: f64| -> usize {
        (0..n_bins)
            .min_by(|&a, &b| {
                let da = (a as f64 * df - f).powi(2);
                let db = (b as f64 * df - f).powi(2);
                da.total_cmp(&db)
            })
            .expect("non-empty")
    };
    (0..NUM_BANDS)
        .map(|k| {
            let k = k as f64;
            let lo = MIN_FREQ * 2f64.powf((2.0 * k - 1.0) / 6.0);
            let hi = MIN_FREQ * 2f64.powf((2.0 * k + 1.0) / 6.0);
            (nearest(lo), nearest(hi))
        })
        .collect()
}

/// Band envelopes, `[band][frame]`.
fn band_envelopes(x: &[f64], win: &[f64], bands: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let n = frame_count(x.len());
    let fft = FftPlanner::new().plan_fft_forward(NFFT);
    let mut buf = vec![Complex64::default(); NFFT];
    let mut env = vec![vec![0.0; n]; bands.len()];
    for f in 0..n {
        buf.iter_mut().for_each(|c| *c = Complex64::default());
        for k in 0..FRAME_LEN {
            buf[k].re = x[f * HOP + k] * win[k];
        }
        fft.process(&mut buf);
        for (b, &(lo, hi)) in bands.iter().enumerate() {
            env[b][f] = buf[lo..hi].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        }
    }
    env
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn centred_unit(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|a| *a -= mean);
    let n = norm(v) + EPS;
    v.iter_mut().for_each(|a| *a /= n);
}

pub fn stoi(clean: &AudioBuffer, processed: &AudioBuffer) -> Result<f64> {
    if clean.sample_rate() != processed.sample_rate() {
        return Err(Error::RateMismatch(clean.sample_rate(), processed.sample_rate()));
    }
    if clean.len() != processed.len() {
        return Err(Error::LengthMismatch(clean.len(), processed.len()));
    }
    if clean.peak() == 0.0 {
        return Err(Error::InsufficientSpeech);
    }
    let x = resample(clean, STOI_RATE);
    let y = resample(processed, STOI_RATE);
    let win = analysis_window();
    let (x, y) = remove_silent_frames(x.samples(), y.samples(), &win);
    let bands = third_octave_bands();
    let x_env = band_envelopes(&x, &win, &bands);
    let y_env = band_envelopes(&y, &win, &bands);
    let n_frames = frame_count(x.len());
    if n_frames < SEGMENT_FRAMES {
        return Err(Error::InsufficientSpeech);
    }

    let clip = 1.0 + 10f64.powf(-BETA_DB / 20.0);
    let mut total = 0.0;
    let mut count = 0usize;
    let mut xs = vec![0.0; SEGMENT_FRAMES];
    let mut ys = vec![0.0; SEGMENT_FRAMES];
    for end in SEGMENT_FRAMES..=n_frames {
        let start = end - SEGMENT_FRAMES;
        for (xb, yb) in x_env.iter().zip(&y_env) {
            xs.copy_from_slice(&xb[start..end]);
            ys.copy_from_slice(&yb[start..end]);
            let alpha = norm(&xs) / (norm(&ys) + EPS);
            for (yv, &xv) in ys.iter_mut().zip(&xs) {
                *yv = (*yv * alpha).min(xv * clip);
            }
            centred_unit(&mut xs);
            centred_unit(&mut ys);
            total += xs.iter().zip(&ys).map(|(a, b)| a * b).sum::<f64>();
            count += 1;
        }
    }
    Ok(total / count as f64)
}
