//! Deterministic synthetic test signals: vowel-like utterances, white noise
//! and tones. Used by `selftest` and the test suites, so nothing needs a corpus.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::AudioBuffer;

/// F1–F3 in Hz for a handful of vowels.
const VOWELS: [[f64; 3]; 5] = [
    [730.0, 1090.0, 2440.0],
    [270.0, 2290.0, 3010.0],
    [300.0, 870.0, 2240.0],
    [530.0, 1840.0, 2480.0],
    [570.0, 840.0, 2410.0],
];

fn formant_gain(freq: f64, formants: &[f64; 3]) -> f64 {
    formants
        .iter()
        .zip([90.0, 120.0, 160.0])
        .map(|(&f, bw)| 1.0 / (1.0 + ((freq - f) / bw).powi(2)))
        .sum::<f64>()
        / (1.0 + freq / 1000.0)
}

/// A sequence of harmonic "syllables" with formant colouring, interleaved
/// with short fricative bursts and pauses. Peak-normalised to 0.5.
pub fn speech_like(seed: u64, duration_secs: f64, sample_rate: u32) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = sample_rate as f64;
    let len = (duration_secs * fs).round() as usize;
    let mut out = vec![0.0; len];
    let mut pos = (rng.gen_range(0.02..0.08) * fs) as usize;
    let nyquist = fs / 2.0;
    while pos < len {
        let seg = (rng.gen_range(0.12..0.30) * fs) as usize;
        let end = (pos + seg).min(len);
        if rng.gen::<f64>() < 0.2 {
            // Fricative: first-difference of white noise tilts energy upwards.
            let amp = rng.gen_range(0.05..0.15);
            let mut prev = 0.0;
            for (i, v) in out[pos..end].iter_mut().enumerate() {
                let w: f64 = rng.gen_range(-1.0..1.0);
                let env = (PI * i as f64 / (end - pos) as f64).sin();
                *v += amp * env * (w - prev);
                prev = w;
            }
        } else {
            let formants = VOWELS[rng.gen_range(0..VOWELS.len())];
            let f0_start: f64 = rng.gen_range(90.0..220.0);
            let f0_end = f0_start * rng.gen_range(0.85..1.15);
            let amp = rng.gen_range(0.4..1.0);
            let n_harm = ((0.9 * nyquist) / f0_start.max(f0_end)).floor() as usize;
            let gains: Vec<f64> = (1..=n_harm)
                .map(|h| formant_gain(h as f64 * f0_start, &formants))
                .collect();
            let phases: Vec<f64> = (0..n_harm).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            let n = end - pos;
            let mut phase = 0.0;
            for i in 0..n {
                let t = i as f64 / n as f64;
                let f0 = f0_start + (f0_end - f0_start) * t;
                phase += 2.0 * PI * f0 / fs;
                let env = (PI * t).sin().powf(0.6);
                let s: f64 = gains
                    .iter()
                    .zip(&phases)
                    .enumerate()
                    .map(|(h, (g, p))| g * ((h + 1) as f64 * phase + p).sin())
                    .sum();
                out[pos + i] += amp * env * s;
            }
        }
        pos = end + (rng.gen_range(0.03..0.15) * fs) as usize;
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        out.iter_mut().for_each(|v| *v *= 0.5 / peak);
    }
    AudioBuffer::new(out, sample_rate).expect("finite synthesis")
}

/// Uniform white noise in [-amplitude, amplitude).
pub fn white_noise(seed: u64, len: usize, sample_rate: u32, amplitude: f64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = (0..len).map(|_| rng.gen_range(-amplitude..amplitude)).collect();
    AudioBuffer::new(x, sample_rate).expect("finite noise")
}

pub fn tone(freq: f64, amplitude: f64, len: usize, sample_rate: u32) -> AudioBuffer {
    let x = (0..len)
        .map(|n| amplitude * (2.0 * PI * freq * n as f64 / sample_rate as f64).sin())
        .collect();
    AudioBuffer::new(x, sample_rate).expect("finite tone")
}

/// Adds `noise` to `speech` so the pair sits at `snr_db`.
pub fn noisy(speech: &AudioBuffer, noise: &AudioBuffer, snr_db: f64) -> AudioBuffer {
    crate::degrade::mix_noise_at_snr(speech, noise, snr_db)
        .expect("non-degenerate synthetic mix")
        .0
}
