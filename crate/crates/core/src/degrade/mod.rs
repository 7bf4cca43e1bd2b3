//! Degradation operators and their seeded composition, `x = f(s) + n`.
//!
//! `f` is a chain of region attenuation, amplitude clipping and low-pass
//! filtering applied to the clean speech; noise is scaled against the clean
//! speech and added last.

mod spec;

pub use spec::{
    AttenuationSpec, ClipMode, ClipSpec, DegradationSpec, LpfSpec, NoiseSpec, Stage, DEFAULT_ORDER,
    DEFAULT_SEED,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::{self, AudioBuffer};
use crate::error::{Error, Result};

/// Cutoffs at or above this fraction of the sample rate are clamped to it.
pub const MAX_CUTOFF_FRACTION: f64 = 0.45;
/// Rejected placements tolerated before accepting fewer regions.
pub const MAX_PLACEMENT_RETRIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub start_sample: usize,
    pub length_samples: usize,
    pub gain: f64,
}

impl Region {
    fn end(&self) -> usize {
        self.start_sample + self.length_samples
    }

    fn overlaps(&self, other: &Region) -> bool {
        self.start_sample < other.end() && other.start_sample < self.end()
    }
}

/// RMS levels measured while mixing, so SNR can be recomputed against either
/// the clean or the degraded speech.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixLevels {
    pub clean_speech_rms: f64,
    pub degraded_speech_rms: f64,
    pub scaled_noise_rms: f64,
}

/// The concrete draw of f and the noise mix for one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppliedDegradation {
    pub clip_ratio: Option<f64>,
    #[serde(default)]
    pub clip_mode: ClipMode,
    pub lpf_cutoff_hz: Option<f64>,
    pub attenuation_regions: Vec<Region>,
    /// Attenuation was drawn as enabled but no region of minimum length fits.
    #[serde(default)]
    pub attenuation_skipped: bool,
    pub noise_source: String,
    #[serde(default)]
    pub noise_offset: usize,
    pub snr_db: f64,
    pub seed_used: u64,
    pub chain_order: Vec<Stage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<MixLevels>,
}

impl AppliedDegradation {
    /// No speech degradation, noise mixed at `snr_db`.
    pub fn noise_only(snr_db: f64) -> Self {
        Self {
            clip_ratio: None,
            clip_mode: ClipMode::PeakRelative,
            lpf_cutoff_hz: None,
            attenuation_regions: Vec::new(),
            attenuation_skipped: false,
            noise_source: String::new(),
            noise_offset: 0,
            snr_db,
            seed_used: 0,
            chain_order: DEFAULT_ORDER.to_vec(),
            levels: None,
        }
    }
}

fn check_rates(a: &AudioBuffer, b: &AudioBuffer) -> Result<()> {
    if a.sample_rate() != b.sample_rate() {
        return Err(Error::RateMismatch(a.sample_rate(), b.sample_rate()));
    }
    Ok(())
}

/// `len` samples of `noise` starting at `offset`, wrapping cyclically when
/// the noise is shorter than requested.
pub fn crop_noise(noise: &AudioBuffer, len: usize, offset: usize) -> Result<AudioBuffer> {
    if noise.is_empty() {
        return Err(Error::DegenerateSnr);
    }
    let n = noise.samples();
    let out = (0..len).map(|i| n[(offset + i) % n.len()]).collect();
    Ok(AudioBuffer::with_rate_of(out, noise))
}

/// Scales the leading `speech.len()` samples of `noise` to sit `snr_db` below
/// `speech` and adds them. Returns `(mixture, scaled_noise)`.
pub fn mix_noise_at_snr(
    speech: &AudioBuffer,
    noise: &AudioBuffer,
    snr_db: f64,
) -> Result<(AudioBuffer, AudioBuffer)> {
    mix_against_reference(speech, speech, noise, snr_db)
}

/// Adds noise to `target`, scaled so that `reference` sits `snr_db` above it.
fn mix_against_reference(
    reference: &AudioBuffer,
    target: &AudioBuffer,
    noise: &AudioBuffer,
    snr_db: f64,
) -> Result<(AudioBuffer, AudioBuffer)> {
    check_rates(reference, noise)?;
    check_rates(target, noise)?;
    if noise.len() < target.len() {
        return Err(Error::LengthMismatch(noise.len(), target.len()));
    }
    let segment = &noise.samples()[..target.len()];
    let speech_rms = reference.rms();
    let noise_rms = dsp::rms(segment);
    if !(speech_rms > 0.0 && noise_rms > 0.0) || !snr_db.is_finite() {
        return Err(Error::DegenerateSnr);
    }
    let gain = speech_rms / (noise_rms * 10f64.powf(snr_db / 20.0));
    let scaled: Vec<f64> = segment.iter().map(|v| v * gain).collect();
    let mixture = target
        .samples()
        .iter()
        .zip(&scaled)
        .map(|(s, n)| s + n)
        .collect();
    Ok((
        AudioBuffer::with_rate_of(mixture, target),
        AudioBuffer::with_rate_of(scaled, target),
    ))
}

/// Clamps every sample to `[-threshold, threshold]`.
pub fn clamp_amplitude(buf: &AudioBuffer, threshold: f64) -> AudioBuffer {
    let out = buf
        .samples()
        .iter()
        .map(|&v| v.clamp(-threshold, threshold))
        .collect();
    AudioBuffer::with_rate_of(out, buf)
}

/// Peak-relative clipping: threshold = `ratio` · max|buf|. Silent input and
/// `ratio >= 1` are returned unchanged.
pub fn clip_signal(buf: &AudioBuffer, ratio: f64) -> AudioBuffer {
    let peak = buf.peak();
    if peak == 0.0 || ratio >= 1.0 {
        return buf.clone();
    }
    clamp_amplitude(buf, ratio * peak)
}

fn clip_with_mode(buf: &AudioBuffer, ratio: f64, mode: ClipMode) -> AudioBuffer {
    match mode {
        ClipMode::PeakRelative => clip_signal(buf, ratio),
        ClipMode::Absolute => clamp_amplitude(buf, ratio),
    }
}

/// The cutoff actually used for `cutoff_hz` at `sample_rate`.
pub fn effective_cutoff(cutoff_hz: f64, sample_rate: u32) -> f64 {
    cutoff_hz.min(MAX_CUTOFF_FRACTION * sample_rate as f64)
}

pub fn lowpass_degrade(buf: &AudioBuffer, cutoff_hz: f64) -> Result<AudioBuffer> {
    let cutoff = effective_cutoff(cutoff_hz, buf.sample_rate());
    let filt = dsp::design_lowpass(cutoff, buf.sample_rate())?;
    Ok(dsp::apply_fir(buf, &filt))
}

fn validate_regions(regions: &[Region], len: usize) -> Result<()> {
    let mut sorted: Vec<&Region> = regions.iter().collect();
    sorted.sort_by_key(|r| r.start_sample);
    for r in &sorted {
        if r.end() > len {
            return Err(Error::InvalidRegions(format!(
                "region at {} of length {} exceeds {len} samples",
                r.start_sample, r.length_samples
            )));
        }
        if !r.gain.is_finite() || r.gain < 0.0 {
            return Err(Error::InvalidRegions(format!("gain {} is not a valid gain", r.gain)));
        }
    }
    for w in sorted.windows(2) {
        if w[0].overlaps(w[1]) {
            return Err(Error::InvalidRegions(format!(
                "regions at {} and {} overlap",
                w[0].start_sample, w[1].start_sample
            )));
        }
    }
    Ok(())
}

pub fn attenuate_regions(buf: &AudioBuffer, regions: &[Region]) -> Result<AudioBuffer> {
    validate_regions(regions, buf.len())?;
    let mut out = buf.samples().to_vec();
    for r in regions {
        for v in &mut out[r.start_sample..r.end()] {
            *v *= r.gain;
        }
    }
    Ok(AudioBuffer::with_rate_of(out, buf))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Master seed combined with a hash of the item index.
pub fn item_seed(master: u64, item_index: u64) -> u64 {
    master ^ splitmix64(item_index)
}

// One ChaCha stream per factor, so changing one factor's parameters never
// shifts the draws of another.
const STREAM_CLIP: u64 = 1;
const STREAM_LPF: u64 = 2;
const STREAM_ATTENUATION: u64 = 3;
const STREAM_SNR: u64 = 4;
const STREAM_NOISE_OFFSET: u64 = 5;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    range[0] + (range[1] - range[0]) * rng.gen::<f64>()
}

fn ms_bounds_to_samples(range_ms: [f64; 2], sample_rate: u32) -> (usize, usize) {
    let per_ms = sample_rate as f64 / 1000.0;
    let lo = (range_ms[0] * per_ms).ceil() as usize;
    let hi = (range_ms[1] * per_ms).floor() as usize;
    (lo, hi)
}

fn sample_regions(
    att: &AttenuationSpec,
    rng: &mut ChaCha8Rng,
    buf_len: usize,
    sample_rate: u32,
) -> (Vec<Region>, bool) {
    let (min_len, max_len) = ms_bounds_to_samples(att.duration_range_ms, sample_rate);
    if max_len == 0 {
        return (Vec::new(), false);
    }
    let min_len = min_len.clamp(1, max_len.max(1));
    if buf_len < min_len || min_len > max_len {
        return (Vec::new(), true);
    }
    let count = rng.gen_range(1..=att.max_regions) as usize;
    let per_ms = sample_rate as f64 / 1000.0;
    let mut regions: Vec<Region> = Vec::with_capacity(count);
    let mut rejections = 0;
    while regions.len() < count && rejections < MAX_PLACEMENT_RETRIES {
        let gain = uniform(rng, att.gain_range);
        let dur_ms = uniform(rng, att.duration_range_ms);
        let u = rng.gen::<f64>();
        let length = ((dur_ms * per_ms).round() as usize).clamp(min_len, max_len);
        if length > buf_len {
            rejections += 1;
            continue;
        }
        let slots = buf_len - length + 1;
        let start = ((u * slots as f64) as usize).min(slots - 1);
        let candidate = Region {
            start_sample: start,
            length_samples: length,
            gain,
        };
        if regions.iter().any(|r| r.overlaps(&candidate)) {
            rejections += 1;
            continue;
        }
        regions.push(candidate);
    }
    regions.sort_by_key(|r| r.start_sample);
    let skipped = regions.is_empty();
    (regions, skipped)
}

/// Draws the degradation for item `item_index` of a corpus.
///
/// `noise_source` and `noise_offset` are left empty; the corpus builder fills
/// them once the noise file is known (see [`draw_noise_offset`]).
pub fn sample_applied(
    spec: &DegradationSpec,
    item_index: u64,
    buf_len: usize,
    sample_rate: u32,
) -> Result<AppliedDegradation> {
    spec.validate()?;
    let seed = item_seed(spec.seed, item_index);

    let mut rng = stream(seed, STREAM_CLIP);
    let clip_ratio = (rng.gen::<f64>() < spec.clip.enabled_prob)
        .then(|| uniform(&mut rng, spec.clip.ratio_range));

    let mut rng = stream(seed, STREAM_LPF);
    let lpf_cutoff_hz = (rng.gen::<f64>() < spec.lpf.enabled_prob)
        .then(|| uniform(&mut rng, spec.lpf.cutoff_range_hz));

    let mut rng = stream(seed, STREAM_ATTENUATION);
    let (attenuation_regions, attenuation_skipped) =
        if rng.gen::<f64>() < spec.attenuation.enabled_prob {
            sample_regions(&spec.attenuation, &mut rng, buf_len, sample_rate)
        } else {
            (Vec::new(), false)
        };

    let mut rng = stream(seed, STREAM_SNR);
    let snr_db = match &spec.noise {
        NoiseSpec::SnrSetDb(set) => set[rng.gen_range(0..set.len())],
        NoiseSpec::SnrRangeDb(r) => uniform(&mut rng, *r),
    };

    Ok(AppliedDegradation {
        clip_ratio,
        clip_mode: spec.clip.mode,
        lpf_cutoff_hz,
        attenuation_regions,
        attenuation_skipped,
        noise_source: String::new(),
        noise_offset: 0,
        snr_db,
        seed_used: seed,
        chain_order: spec.chain_order.clone(),
        levels: None,
    })
}

/// Uniform crop offset into a noise recording of `noise_len` samples.
pub fn draw_noise_offset(seed_used: u64, noise_len: usize, speech_len: usize) -> usize {
    if noise_len <= speech_len {
        return 0;
    }
    stream(seed_used, STREAM_NOISE_OFFSET).gen_range(0..=noise_len - speech_len)
}

/// Everything produced while applying a chain.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub mixture: AudioBuffer,
    pub degraded_speech: AudioBuffer,
    pub scaled_noise: AudioBuffer,
    pub levels: MixLevels,
}

/// Applies only the speech-side stages f(s).
pub fn apply_speech_stages(speech: &AudioBuffer, applied: &AppliedDegradation) -> Result<AudioBuffer> {
    let mut s = speech.clone();
    for stage in &applied.chain_order {
        s = match stage {
            Stage::Attenuation => attenuate_regions(&s, &applied.attenuation_regions)?,
            Stage::Clip => match applied.clip_ratio {
                Some(r) => clip_with_mode(&s, r, applied.clip_mode),
                None => s,
            },
            Stage::Lpf => match applied.lpf_cutoff_hz {
                Some(c) => lowpass_degrade(&s, c)?,
                None => s,
            },
        };
    }
    Ok(s)
}

pub fn apply_chain_detailed(
    speech: &AudioBuffer,
    noise: &AudioBuffer,
    applied: &AppliedDegradation,
) -> Result<ChainOutput> {
    check_rates(speech, noise)?;
    let degraded = apply_speech_stages(speech, applied)?;
    let noise = crop_noise(noise, speech.len(), applied.noise_offset)?;
    let (mixture, scaled_noise) = mix_against_reference(speech, &degraded, &noise, applied.snr_db)?;
    let levels = MixLevels {
        clean_speech_rms: speech.rms(),
        degraded_speech_rms: degraded.rms(),
        scaled_noise_rms: scaled_noise.rms(),
    };
    Ok(ChainOutput {
        mixture,
        degraded_speech: degraded,
        scaled_noise,
        levels,
    })
}

/// `x = f(s) + n`, with the noise level referenced to the clean `speech`.
pub fn apply_chain(
    speech: &AudioBuffer,
    noise: &AudioBuffer,
    applied: &AppliedDegradation,
) -> Result<AudioBuffer> {
    Ok(apply_chain_detailed(speech, noise, applied)?.mixture)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::PI;

    fn sine(peak: f64, len: usize) -> AudioBuffer {
        let x = (0..len)
            .map(|n| peak * (2.0 * PI * 440.0 * n as f64 / 16000.0).sin())
            .collect();
        AudioBuffer::new(x, 16000).unwrap()
    }

    fn noise(len: usize, seed: u64) -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioBuffer::new((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(), 16000).unwrap()
    }

    fn with_rms(buf: &AudioBuffer, target: f64) -> AudioBuffer {
        buf.scaled(target / buf.rms())
    }

    fn measured_snr(speech: &AudioBuffer, scaled_noise: &AudioBuffer) -> f64 {
        20.0 * (speech.rms() / scaled_noise.rms()).log10()
    }

    #[test]
    fn equal_levels_at_zero_db_leave_noise_unscaled() {
        let s = with_rms(&sine(1.0, 4000), 0.1);
        let n = with_rms(&noise(4000, 1), 0.1);
        let (mix, scaled) = mix_noise_at_snr(&s, &n, 0.0).unwrap();
        assert!((scaled.rms() / n.rms() - 1.0).abs() < 1e-12);
        assert_eq!(mix.len(), s.len());
    }

    #[test]
    fn twenty_db_scales_noise_by_a_tenth() {
        let s = with_rms(&sine(1.0, 4000), 0.1);
        let n = with_rms(&noise(4000, 2), 0.1);
        let (_, scaled) = mix_noise_at_snr(&s, &n, 20.0).unwrap();
        assert!((scaled.rms() / n.rms() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn mixture_is_not_renormalised() {
        let s = sine(1.0, 1000);
        let n = noise(1000, 3);
        let (mix, _) = mix_noise_at_snr(&s, &n, -10.0).unwrap();
        assert!(mix.peak() > 1.0);
    }

    #[test]
    fn degenerate_references_are_errors() {
        let z = AudioBuffer::zeros(100, 16000).unwrap();
        let n = noise(100, 4);
        assert!(matches!(mix_noise_at_snr(&z, &n, 0.0), Err(Error::DegenerateSnr)));
        assert!(matches!(mix_noise_at_snr(&n, &z, 0.0), Err(Error::DegenerateSnr)));
    }

    #[test]
    fn clip_sine_to_half() {
        let y = clip_signal(&sine(1.0, 16000), 0.5);
        assert!((y.peak() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn clip_ratio_one_is_identity() {
        let b = noise(777, 5);
        assert_eq!(clip_signal(&b, 1.0), b);
    }

    #[test]
    fn silent_input_is_not_clipped() {
        let z = AudioBuffer::zeros(10, 16000).unwrap();
        assert_eq!(clip_signal(&z, 0.3), z);
    }

    #[test]
    fn clamped_fraction_matches_arcsin() {
        // Peak 0.8, ratio 0.06: threshold 0.048, i.e. |sin| > 0.06.
        let n = 160_000;
        let x: Vec<f64> = (0..n)
            .map(|i| 0.8 * (2.0 * PI * (i as f64 + 0.5) / n as f64).sin())
            .collect();
        let b = AudioBuffer::new(x, 16000).unwrap();
        let y = clip_signal(&b, 0.06);
        let threshold = 0.06 * b.peak();
        assert!((threshold - 0.048).abs() < 1e-6);
        let clamped = y.samples().iter().filter(|v| v.abs() >= threshold).count();
        let expected = 1.0 - 2.0 * 0.06f64.asin() / PI;
        assert!((expected - 0.9618).abs() < 1e-4);
        assert!((clamped as f64 / n as f64 - expected).abs() < 1e-3);
    }

    #[test]
    fn lowpass_keeps_passband_and_kills_stopband() {
        let tone = |f: f64| {
            AudioBuffer::new(
                (0..16000).map(|n| (2.0 * PI * f * n as f64 / 16000.0).sin()).collect(),
                16000,
            )
            .unwrap()
        };
        let inner = |b: &AudioBuffer| dsp::rms(&b.samples()[600..b.len() - 600]);
        let x = tone(1000.0);
        let y = lowpass_degrade(&x, 4000.0).unwrap();
        assert!((20.0 * (inner(&y) / inner(&x)).log10()).abs() < 0.06);
        let x = tone(7000.0);
        let y = lowpass_degrade(&x, 4000.0).unwrap();
        assert!(20.0 * (inner(&y) / inner(&x)).log10() <= -50.0);
    }

    #[test]
    fn nyquist_cutoff_is_clamped() {
        assert_eq!(effective_cutoff(8000.0, 16000), 7200.0);
        assert_eq!(effective_cutoff(4000.0, 16000), 4000.0);
        let x = sine(0.5, 16000);
        let y = lowpass_degrade(&x, 8000.0).unwrap();
        let inner = |b: &AudioBuffer| dsp::rms(&b.samples()[600..b.len() - 600]);
        assert!((20.0 * (inner(&y) / inner(&x)).log10()).abs() < 0.01);
    }

    #[test]
    fn attenuation_regions_behave() {
        let ones = AudioBuffer::new(vec![1.0; 400], 16000).unwrap();
        let whole = [Region { start_sample: 0, length_samples: 400, gain: 0.0 }];
        assert!(attenuate_regions(&ones, &whole).unwrap().samples().iter().all(|&v| v == 0.0));
        assert_eq!(attenuate_regions(&ones, &[]).unwrap(), ones);
        let one = [Region { start_sample: 100, length_samples: 50, gain: 0.01 }];
        let y = attenuate_regions(&ones, &one).unwrap();
        for (i, &v) in y.samples().iter().enumerate() {
            let want = if (100..150).contains(&i) { 0.01 } else { 1.0 };
            assert_eq!(v, want, "sample {i}");
        }
    }

    #[test]
    fn bad_region_lists_are_rejected() {
        let ones = AudioBuffer::new(vec![1.0; 400], 16000).unwrap();
        let overlapping = [
            Region { start_sample: 10, length_samples: 50, gain: 0.0 },
            Region { start_sample: 40, length_samples: 50, gain: 0.0 },
        ];
        assert!(matches!(attenuate_regions(&ones, &overlapping), Err(Error::InvalidRegions(_))));
        let outside = [Region { start_sample: 390, length_samples: 20, gain: 0.0 }];
        assert!(matches!(attenuate_regions(&ones, &outside), Err(Error::InvalidRegions(_))));
    }

    fn all_disabled() -> DegradationSpec {
        let mut s = DegradationSpec::default();
        s.clip.enabled_prob = 0.0;
        s.lpf.enabled_prob = 0.0;
        s.attenuation.enabled_prob = 0.0;
        s
    }

    #[test]
    fn zero_probabilities_draw_nothing() {
        let spec = all_disabled();
        for i in 0..50 {
            let a = sample_applied(&spec, i, 48000, 16000).unwrap();
            assert!(a.clip_ratio.is_none());
            assert!(a.lpf_cutoff_hz.is_none());
            assert!(a.attenuation_regions.is_empty());
            assert!(!a.attenuation_skipped);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = DegradationSpec::default();
        for i in 0..20 {
            assert_eq!(
                sample_applied(&spec, i, 48000, 16000).unwrap(),
                sample_applied(&spec, i, 48000, 16000).unwrap()
            );
        }
        assert_ne!(
            sample_applied(&spec, 0, 48000, 16000).unwrap().seed_used,
            sample_applied(&spec, 1, 48000, 16000).unwrap().seed_used
        );
    }

    #[test]
    fn short_buffer_disables_attenuation() {
        let mut spec = DegradationSpec::default();
        spec.attenuation.enabled_prob = 1.0;
        let a = sample_applied(&spec, 0, 100, 16000).unwrap();
        assert!(a.attenuation_regions.is_empty());
        assert!(a.attenuation_skipped);
    }

    #[test]
    fn crowded_buffer_accepts_fewer_regions() {
        let mut spec = DegradationSpec::default();
        spec.attenuation.enabled_prob = 1.0;
        spec.attenuation.duration_range_ms = [50.0, 50.0];
        spec.attenuation.max_regions = 20;
        // 120 ms fits at most two 50 ms regions.
        for i in 0..20 {
            let a = sample_applied(&spec, i, 1920, 16000).unwrap();
            assert!(a.attenuation_regions.len() <= 2);
            validate_regions(&a.attenuation_regions, 1920).unwrap();
        }
    }

    #[test]
    fn near_identity_chain() {
        let s = sine(0.5, 8000);
        let n = noise(8000, 7);
        let y = apply_chain(&s, &n, &AppliedDegradation::noise_only(120.0)).unwrap();
        for (a, b) in y.samples().iter().zip(s.samples()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn attenuation_only_chain() {
        let s = sine(0.5, 8000);
        let n = noise(8000, 8);
        let mut a = AppliedDegradation::noise_only(120.0);
        a.attenuation_regions = vec![Region { start_sample: 1000, length_samples: 400, gain: 0.005 }];
        let y = apply_chain(&s, &n, &a).unwrap();
        let want = attenuate_regions(&s, &a.attenuation_regions).unwrap();
        for (p, q) in y.samples().iter().zip(want.samples()) {
            assert!((p - q).abs() < 1e-5);
        }
    }

    #[test]
    fn chain_references_snr_to_clean_speech() {
        let s = sine(0.5, 16000);
        let n = noise(20000, 9);
        let mut a = DegradationSpec::default();
        a.attenuation.enabled_prob = 1.0;
        a.clip.enabled_prob = 1.0;
        let mut applied = sample_applied(&a, 3, s.len(), 16000).unwrap();
        applied.noise_offset = draw_noise_offset(applied.seed_used, n.len(), s.len());
        let out = apply_chain_detailed(&s, &n, &applied).unwrap();
        let snr = measured_snr(&s, &out.scaled_noise);
        assert!((snr - applied.snr_db).abs() < 1e-9);
        assert!(out.levels.degraded_speech_rms < out.levels.clean_speech_rms);
    }

    #[test]
    fn order_follows_chain_order() {
        let s = sine(1.0, 16000);
        let mut a = AppliedDegradation::noise_only(120.0);
        a.clip_ratio = Some(0.3);
        a.lpf_cutoff_hz = Some(3000.0);
        let default = apply_speech_stages(&s, &a).unwrap();
        a.chain_order = vec![Stage::Lpf, Stage::Clip, Stage::Attenuation];
        let swapped = apply_speech_stages(&s, &a).unwrap();
        // LPF after clipping lets the filtered signal overshoot the threshold.
        assert!(default.peak() > 0.3 + 1e-6);
        let filtered = lowpass_degrade(&s, 3000.0).unwrap();
        assert!((swapped.peak() - 0.3 * filtered.peak()).abs() < 1e-12);
    }

    #[test]
    fn noise_offsets_stay_in_range() {
        for seed in 0..100 {
            let o = draw_noise_offset(seed, 5000, 3000);
            assert!(o <= 2000);
        }
        assert_eq!(draw_noise_offset(1, 100, 300), 0);
    }

    proptest! {
        #[test]
        fn snr_is_exact(
            seed in any::<u64>(),
            snr in -10.0f64..40.0,
            speech_gain in 0.01f64..2.0,
            noise_gain in 0.01f64..2.0,
        ) {
            let s = noise(2000, seed).scaled(speech_gain);
            let n = noise(3000, seed.wrapping_add(1)).scaled(noise_gain);
            let (mix, scaled) = mix_noise_at_snr(&s, &n, snr).unwrap();
            prop_assert!((measured_snr(&s, &scaled) - snr).abs() < 0.01);
            for ((m, a), b) in mix.samples().iter().zip(s.samples()).zip(scaled.samples()) {
                prop_assert_eq!(*m, a + b);
            }
        }

        #[test]
        fn fixed_threshold_clamp_is_idempotent(
            samples in prop::collection::vec(-2.0f64..2.0, 1..300),
            threshold in 0.01f64..2.0,
        ) {
            let b = AudioBuffer::new(samples, 16000).unwrap();
            let once = clamp_amplitude(&b, threshold);
            prop_assert_eq!(clamp_amplitude(&once, threshold), once);
        }

        #[test]
        fn unit_gains_are_identity(start in 0usize..100, len in 1usize..100) {
            let b = noise(300, 11);
            let r = [Region { start_sample: start, length_samples: len, gain: 1.0 }];
            prop_assert_eq!(attenuate_regions(&b, &r).unwrap(), b);
        }

        #[test]
        fn sampled_parameters_stay_in_range(
            seed in any::<u64>(),
            index in 0u64..10_000,
            probs in prop::array::uniform3(0.0f64..=1.0),
            ratio_lo in 0.01f64..0.5, ratio_span in 0.0f64..0.5,
            cut_lo in 100.0f64..4000.0, cut_span in 0.0f64..4000.0,
            gain_hi in 0.0f64..0.9,
            dur_lo in 1.0f64..60.0, dur_span in 0.0f64..60.0,
            max_regions in 1u32..30,
            len in 0usize..64000,
        ) {
            let spec = DegradationSpec {
                clip: ClipSpec { enabled_prob: probs[0], ratio_range: [ratio_lo, ratio_lo + ratio_span], mode: ClipMode::PeakRelative },
                lpf: LpfSpec { enabled_prob: probs[1], cutoff_range_hz: [cut_lo, cut_lo + cut_span] },
                attenuation: AttenuationSpec {
                    enabled_prob: probs[2],
                    gain_range: [0.0, gain_hi],
                    duration_range_ms: [dur_lo, dur_lo + dur_span],
                    max_regions,
                },
                noise: NoiseSpec::SnrRangeDb([-5.0, 20.0]),
                seed,
                chain_order: DEFAULT_ORDER.to_vec(),
            };
            let a = sample_applied(&spec, index, len, 16000).unwrap();
            if let Some(r) = a.clip_ratio {
                prop_assert!(r >= spec.clip.ratio_range[0] && r <= spec.clip.ratio_range[1]);
            }
            if let Some(c) = a.lpf_cutoff_hz {
                prop_assert!(c >= spec.lpf.cutoff_range_hz[0] && c <= spec.lpf.cutoff_range_hz[1]);
            }
            prop_assert!(a.attenuation_regions.len() <= max_regions as usize);
            validate_regions(&a.attenuation_regions, len).unwrap();
            for w in a.attenuation_regions.windows(2) {
                prop_assert!(w[0].start_sample < w[1].start_sample);
            }
            for r in &a.attenuation_regions {
                prop_assert!(r.gain >= 0.0 && r.gain <= gain_hi);
                let ms = r.length_samples as f64 / 16.0;
                prop_assert!(ms >= dur_lo - 1e-9 && ms <= dur_lo + dur_span + 1e-9);
            }
            prop_assert!(a.snr_db >= -5.0 && a.snr_db <= 20.0);
        }

        #[test]
        fn chain_output_is_finite(seed in any::<u64>(), index in 0u64..1000) {
            let spec = DegradationSpec { seed, ..DegradationSpec::default() };
            let s = noise(4000, seed).scaled(0.3);
            let n = noise(6000, seed ^ 1);
            let mut a = sample_applied(&spec, index, s.len(), 16000).unwrap();
            a.noise_offset = draw_noise_offset(a.seed_used, n.len(), s.len());
            let y = apply_chain(&s, &n, &a).unwrap();
            prop_assert!(y.samples().iter().all(|v| v.is_finite()));
            prop_assert_eq!(y.len(), s.len());
        }
    }
}
