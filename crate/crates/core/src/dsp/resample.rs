use std::f64::consts::PI;

use super::AudioBuffer;

/// Zero crossings of the prototype sinc on each side, counted at the lower rate.
const ZERO_CROSSINGS: usize = 64;
/// Cutoff as a fraction of the lower Nyquist frequency.
const ROLLOFF: f64 = 0.955;
const KAISER_BETA: f64 = 9.0;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
pub(crate) fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Rational-ratio windowed-sinc resampler in polyphase form.
///
/// The conceptual upsampled grid runs at `source·up = target·down`; the
/// prototype kernel is tabulated on that grid and only the taps that land on
/// input samples are evaluated for each output. Equal rates return a copy.
pub fn resample(buf: &AudioBuffer, target_rate: u32) -> AudioBuffer {
    let source = buf.sample_rate() as u64;
    let target = target_rate as u64;
    assert!(target > 0, "target rate must be positive");
    if source == target {
        return buf.clone();
    }
    let g = gcd(source, target);
    let up = (target / g) as usize;
    let down = (source / g) as usize;
    let out_len = ((buf.len() as u128 * target as u128 + source as u128 / 2) / source as u128) as usize;

    // Cutoff in cycles per sample of the upsampled grid.
    let fc = 0.5 * ROLLOFF / up.max(down) as f64;
    let half = (ZERO_CROSSINGS as f64 / (2.0 * fc)).ceil() as usize;
    let i0_beta = bessel_i0(KAISER_BETA);
    // Gain `up` compensates for the zero-stuffing implied by the upsampled grid.
    let kernel: Vec<f64> = (0..=half)
        .map(|k| {
            let t = k as f64;
            let sinc = if k == 0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * t).sin() / (PI * t)
            };
            let r = t / half as f64;
            let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
            sinc * w * up as f64
        })
        .collect();

    let x = buf.samples();
    let n_in = x.len() as i64;
    let up_i = up as i64;
    let half_i = half as i64;
    let out: Vec<f64> = (0..out_len)
        .map(|n| {
            let pos = n as i64 * down as i64;
            let j_lo = ((pos - half_i) as f64 / up_i as f64).ceil() as i64;
            let j_hi = (pos + half_i).div_euclid(up_i);
            let mut acc = 0.0;
            for j in j_lo.max(0)..=j_hi.min(n_in - 1) {
                let k = (pos - j * up_i).unsigned_abs() as usize;
                acc += x[j as usize] * kernel[k];
            }
            acc
        })
        .collect();
    AudioBuffer {
        samples: out,
        sample_rate: target_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::num_complex::Complex64;
    use rustfft::FftPlanner;

    fn tone(freq: f64, rate: u32, len: usize) -> AudioBuffer {
        let x = (0..len)
            .map(|n| (2.0 * PI * freq * n as f64 / rate as f64).sin())
            .collect();
        AudioBuffer::new(x, rate).unwrap()
    }

    fn peak_bin(x: &[f64]) -> usize {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        (0..buf.len() / 2)
            .max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm()))
            .unwrap()
    }

    #[test]
    fn equal_rates_are_identity() {
        let b = tone(440.0, 16000, 1234);
        assert_eq!(resample(&b, 16000), b);
    }

    #[test]
    fn output_length_rounds() {
        let b = tone(440.0, 44100, 1001);
        assert_eq!(resample(&b, 10000).len(), 227);
        let b = tone(440.0, 16000, 16001);
        assert_eq!(resample(&b, 10000).len(), 10001);
    }

    #[test]
    fn downsampled_tone_keeps_its_frequency() {
        // 48 kHz -> 16 kHz; after resampling 16000 samples span one second,
        // so FFT bins sit 1 Hz apart.
        let b = tone(1000.0, 48000, 48000);
        let y = resample(&b, 16000);
        assert_eq!(y.len(), 16000);
        let bin = peak_bin(y.samples());
        assert!((bin as i64 - 1000).abs() <= 1, "peak at {bin}");
    }

    #[test]
    fn content_above_target_nyquist_is_rejected() {
        let b = tone(7000.0, 16000, 16000);
        let y = resample(&b, 10000);
        // Skip the kernel's edge transients.
        let inner = &y.samples()[500..y.len() - 500];
        let ratio = super::super::rms(inner) / b.rms();
        assert!(ratio < 0.01, "ratio {ratio}");
    }

    #[test]
    fn passband_ripple_is_small() {
        for (src, dst) in [(16000u32, 10000u32), (10000, 16000), (48000, 16000), (44100, 10000)] {
            let low = src.min(dst) as f64;
            for frac in [0.05, 0.3, 0.6, 0.9] {
                let f = frac * low / 2.0;
                let b = tone(f, src, src as usize);
                let y = resample(&b, dst);
                let trim = dst as usize / 20;
                let inner = &y.samples()[trim..y.len() - trim];
                let gain_db = 20.0 * (super::super::rms(inner) * 2f64.sqrt()).log10();
                assert!(gain_db.abs() < 0.1, "{src}->{dst} at {f} Hz: {gain_db} dB");
            }
        }
    }

    #[test]
    fn bessel_matches_known_values() {
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-13);
        assert!((bessel_i0(5.0) - 27.239_871_823_604_45).abs() < 1e-10);
    }
}
