use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::AudioBuffer;
use crate::error::{Error, Result};

const MIN_FRAME_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    /// Periodic Hann, `0.5 − 0.5·cos(2πn/N)`.
    Hann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

/// Frames × bins matrix of one-sided STFT coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Vec<Complex64>,
    n_frames: usize,
    frame_len: usize,
    hop: usize,
    window: Window,
    sample_rate: u32,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn frame(&self, i: usize) -> &[Complex64] {
        let b = self.n_bins();
        &self.data[i * b..(i + 1) * b]
    }

    pub fn frame_mut(&mut self, i: usize) -> &mut [Complex64] {
        let b = self.n_bins();
        &mut self.data[i * b..(i + 1) * b]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.n_bins())
    }

    pub fn bins_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
}

/// Short-time Fourier transform without padding: the trailing partial frame is dropped.
pub fn stft(buf: &AudioBuffer, frame_len: usize, hop: usize, window: Window) -> Result<Spectrogram> {
    if frame_len < MIN_FRAME_LEN || hop == 0 || hop > frame_len {
        return Err(Error::InvalidAudio(format!(
            "invalid STFT geometry: frame_len {frame_len}, hop {hop}"
        )));
    }
    if buf.len() < frame_len {
        return Err(Error::SignalTooShort {
            len: buf.len(),
            needed: frame_len,
        });
    }
    let n_frames = (buf.len() - frame_len) / hop + 1;
    let n_bins = frame_len / 2 + 1;
    let win = window.coefficients(frame_len);
    let fft = FftPlanner::new().plan_fft_forward(frame_len);
    let mut scratch = vec![Complex64::default(); frame_len];
    let mut data = Vec::with_capacity(n_frames * n_bins);
    let x = buf.samples();
    for f in 0..n_frames {
        let seg = &x[f * hop..f * hop + frame_len];
        for ((s, &v), &w) in scratch.iter_mut().zip(seg).zip(&win) {
            *s = Complex64::new(v * w, 0.0);
        }
        fft.process(&mut scratch);
        data.extend_from_slice(&scratch[..n_bins]);
    }
    Ok(Spectrogram {
        data,
        n_frames,
        frame_len,
        hop,
        window,
        sample_rate: buf.sample_rate(),
    })
}

/// Checks that the hop-periodic sum of the squared window never vanishes, which
/// is what weighted overlap-add needs to invert the analysis.
fn reconstruction_ok(win: &[f64], hop: usize) -> bool {
    let sums: Vec<f64> = (0..hop)
        .map(|n| win.iter().skip(n).step_by(hop).map(|w| w * w).sum())
        .collect();
    let max = sums.iter().cloned().fold(0.0, f64::max);
    let min = sums.iter().cloned().fold(f64::INFINITY, f64::min);
    max > 0.0 && min >= 1e-3 * max
}

/// Weighted overlap-add inverse with window-square normalisation.
pub fn istft(spec: &Spectrogram) -> Result<AudioBuffer> {
    let frame_len = spec.frame_len;
    let hop = spec.hop;
    let win = spec.window.coefficients(frame_len);
    if !reconstruction_ok(&win, hop) {
        return Err(Error::NonCola);
    }
    let out_len = (spec.n_frames - 1) * hop + frame_len;
    let mut out = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let ifft = FftPlanner::new().plan_fft_inverse(frame_len);
    let mut full = vec![Complex64::default(); frame_len];
    let n_bins = spec.n_bins();
    let scale = 1.0 / frame_len as f64;
    for (f, bins) in spec.frames().enumerate() {
        full[..n_bins].copy_from_slice(bins);
        // One-sided to full spectrum. DC and (for even lengths) Nyquist must be real.
        full[0].im = 0.0;
        if frame_len.is_multiple_of(2) {
            full[frame_len / 2].im = 0.0;
        }
        for k in n_bins..frame_len {
            full[k] = full[frame_len - k].conj();
        }
        ifft.process(&mut full);
        let start = f * hop;
        for (n, (c, &w)) in full.iter().zip(&win).enumerate() {
            out[start + n] += c.re * scale * w;
            norm[start + n] += w * w;
        }
    }
    for (o, &d) in out.iter_mut().zip(&norm) {
        *o = if d > 1e-10 { *o / d } else { 0.0 };
    }
    AudioBuffer::new(out, spec.sample_rate)
}
