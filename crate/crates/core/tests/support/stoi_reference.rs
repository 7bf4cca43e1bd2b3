//! Direct, unoptimised STOI written from the algorithm description, used only
//! as a test oracle. Shares no code with the library: naive DFT, explicit
//! loops, its own band table. Inputs must already be at 10 kHz.

use std::f64::consts::PI;

const FS: f64 = 10000.0;
const N_FRAME: usize = 256;
const N_FFT: usize = 512;
const N_BANDS: usize = 15;
const F_MIN: f64 = 150.0;
const N_SEG: usize = 30;
const BETA: f64 = -15.0;
const DYN_RANGE: f64 = 40.0;

fn hann_inner() -> Vec<f64> {
    // Symmetric Hann of N_FRAME + 2 points without its zero end points.
    let m = N_FRAME + 2;
    (0..m)
        .map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / (m - 1) as f64).cos()))
        .skip(1)
        .take(N_FRAME)
        .collect()
}

fn frames(x: &[f64], w: &[f64]) -> Vec<Vec<f64>> {
    let hop = N_FRAME / 2;
    let mut out = Vec::new();
    let mut start = 0;
    while start + N_FRAME <= x.len() {
        out.push((0..N_FRAME).map(|k| x[start + k] * w[k]).collect());
        start += hop;
    }
    out
}

fn overlap_add(fr: &[Vec<f64>]) -> Vec<f64> {
    let hop = N_FRAME / 2;
    if fr.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; (fr.len() - 1) * hop + N_FRAME];
    for (i, f) in fr.iter().enumerate() {
        for k in 0..N_FRAME {
            out[i * hop + k] += f[k];
        }
    }
    out
}

fn dft_power(frame: &[f64]) -> Vec<f64> {
    // |X[k]|^2 for k = 0..=N_FFT/2 of the zero-padded frame.
    (0..=N_FFT / 2)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (n, &v) in frame.iter().enumerate() {
                let ang = -2.0 * PI * (k * n % N_FFT) as f64 / N_FFT as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            re * re + im * im
        })
        .collect()
}

fn band_matrix() -> Vec<Vec<f64>> {
    let freqs: Vec<f64> = (0..=N_FFT / 2).map(|k| k as f64 * FS / N_FFT as f64).collect();
    let closest = |target: f64| {
        let mut best = 0;
        for k in 0..freqs.len() {
            if (freqs[k] - target).powi(2) < (freqs[best] - target).powi(2) {
                best = k;
            }
        }
        best
    };
    (0..N_BANDS)
        .map(|j| {
            let lo = F_MIN * 2f64.powf((2.0 * j as f64 - 1.0) / 6.0);
            let hi = F_MIN * 2f64.powf((2.0 * j as f64 + 1.0) / 6.0);
            let (a, b) = (closest(lo), closest(hi));
            (0..freqs.len()).map(|k| if k >= a && k < b { 1.0 } else { 0.0 }).collect()
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Returns `None` when fewer than 30 frames survive silence removal.
pub fn reference_stoi(clean: &[f64], processed: &[f64]) -> Option<f64> {
    let eps = f64::EPSILON;
    let w = hann_inner();

    // 1. silent frame removal, decided on the clean signal.
    let xf = frames(clean, &w);
    let yf = frames(processed, &w);
    let energies: Vec<f64> = xf.iter().map(|f| 20.0 * (l2(f) + eps).log10()).collect();
    let top = energies.iter().cloned().fold(f64::MIN, f64::max);
    let keep: Vec<bool> = energies.iter().map(|e| top - DYN_RANGE - e < 0.0).collect();
    let xk: Vec<Vec<f64>> = xf.iter().zip(&keep).filter(|p| *p.1).map(|p| p.0.clone()).collect();
    let yk: Vec<Vec<f64>> = yf.iter().zip(&keep).filter(|p| *p.1).map(|p| p.0.clone()).collect();
    let x = overlap_add(&xk);
    let y = overlap_add(&yk);

    // 2. one-third-octave envelopes.
    let obm = band_matrix();
    let envelopes = |sig: &[f64]| -> Vec<Vec<f64>> {
        let spectra: Vec<Vec<f64>> = frames(sig, &w).iter().map(|f| dft_power(f)).collect();
        obm.iter()
            .map(|band| {
                spectra
                    .iter()
                    .map(|p| band.iter().zip(p).map(|(b, v)| b * v).sum::<f64>().sqrt())
                    .collect()
            })
            .collect()
    };
    let x_tob = envelopes(&x);
    let y_tob = envelopes(&y);
    let n_frames = x_tob[0].len();
    if n_frames < N_SEG {
        return None;
    }

    // 3. normalise, clip, correlate every 30-frame segment in every band.
    let clip = 10f64.powf(-BETA / 20.0);
    let mut sum = 0.0;
    let mut count = 0;
    for m in N_SEG..=n_frames {
        for j in 0..N_BANDS {
            let xs: Vec<f64> = x_tob[j][m - N_SEG..m].to_vec();
            let ys: Vec<f64> = y_tob[j][m - N_SEG..m].to_vec();
            let alpha = l2(&xs) / (l2(&ys) + eps);
            let yp: Vec<f64> = ys
                .iter()
                .zip(&xs)
                .map(|(yv, xv)| (alpha * yv).min(xv * (1.0 + clip)))
                .collect();
            let mx = mean(&xs);
            let my = mean(&yp);
            let xc: Vec<f64> = xs.iter().map(|v| v - mx).collect();
            let yc: Vec<f64> = yp.iter().map(|v| v - my).collect();
            let nx = l2(&xc) + eps;
            let ny = l2(&yc) + eps;
            let d: f64 = xc.iter().zip(&yc).map(|(a, b)| (a / nx) * (b / ny)).sum();
            sum += d;
            count += 1;
        }
    }
    Some(sum / count as f64)
}
