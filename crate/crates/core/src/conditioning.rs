//! Tensor mechanics for consuming externally computed speech representations:
//! FEAT1 files, softmax-weighted layer averaging, frame repetition and
//! feature concatenation.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FEAT1_MAGIC: &[u8; 6] = b"FEAT1\0";
const HEADER_LEN: usize = 6 + 4 * 4;

/// `layers × frames × dim` tensor stored layer-major, then frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    layers: usize,
    frames: usize,
    dim: usize,
    frame_rate_hz: f32,
    values: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(layers: usize, frames: usize, dim: usize, frame_rate_hz: f32, values: Vec<f32>) -> Result<Self> {
        if layers == 0 || frames == 0 || dim == 0 {
            return Err(Error::InvalidFeatures(format!(
                "dimensions must be positive, got {layers}x{frames}x{dim}"
            )));
        }
        if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
            return Err(Error::InvalidFeatures(format!("frame rate {frame_rate_hz} must be positive")));
        }
        let expected = layers
            .checked_mul(frames)
            .and_then(|v| v.checked_mul(dim))
            .ok_or_else(|| Error::DimensionOverflow(format!("{layers}x{frames}x{dim}")))?;
        if values.len() != expected {
            return Err(Error::InvalidFeatures(format!(
                "{} values for a {layers}x{frames}x{dim} tensor",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFeatures("non-finite feature value".into()));
        }
        Ok(Self {
            layers,
            frames,
            dim,
            frame_rate_hz,
            values,
        })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame_rate_hz(&self) -> f32 {
        self.frame_rate_hz
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Feature vector of `layer` at `frame`.
    pub fn vector(&self, layer: usize, frame: usize) -> &[f32] {
        let start = (layer * self.frames + frame) * self.dim;
        &self.values[start..start + self.dim]
    }

    pub fn layer(&self, layer: usize) -> &[f32] {
        let n = self.frames * self.dim;
        &self.values[layer * n..(layer + 1) * n]
    }

    /// Dimensions `[from, to)` of every vector, as a new single-layer-preserving matrix.
    pub fn slice_dims(&self, from: usize, to: usize) -> Result<FeatureMatrix> {
        if from >= to || to > self.dim {
            return Err(Error::InvalidFeatures(format!("bad dim slice {from}..{to} of {}", self.dim)));
        }
        let values = self
            .values
            .chunks_exact(self.dim)
            .flat_map(|v| v[from..to].iter().copied())
            .collect();
        FeatureMatrix::new(self.layers, self.frames, to - from, self.frame_rate_hz, values)
    }
}

/// Softmax-normalised layer weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    logits: Vec<f64>,
    #[serde(skip)]
    weights: Vec<f64>,
}

impl LayerWeights {
    pub fn from_logits(logits: Vec<f64>) -> Result<Self> {
        if logits.is_empty() || logits.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidFeatures("layer logits must be finite and non-empty".into()));
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        let weights = exp.into_iter().map(|e| e / total).collect();
        Ok(Self { logits, weights })
    }

    pub fn uniform(layers: usize) -> Result<Self> {
        Self::from_logits(vec![0.0; layers])
    }

    /// Reads `{"logits": [...]}`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            logits: Vec<f64>,
        }
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let f: File = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        Self::from_logits(f.logits)
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `out[t, d] = Σ_l w[l]·fm[l, t, d]`.
pub fn weighted_layer_average(fm: &FeatureMatrix, lw: &LayerWeights) -> Result<FeatureMatrix> {
    if lw.weights().len() != fm.layers {
        return Err(Error::WeightLayerMismatch {
            weights: lw.weights().len(),
            layers: fm.layers,
        });
    }
    let n = fm.frames * fm.dim;
    let mut acc = vec![0.0f64; n];
    for (l, &w) in lw.weights().iter().enumerate() {
        for (a, &v) in acc.iter_mut().zip(fm.layer(l)) {
            *a += w * v as f64;
        }
    }
    FeatureMatrix::new(1, fm.frames, fm.dim, fm.frame_rate_hz, acc.into_iter().map(|v| v as f32).collect())
}

/// Source frame used for output frame `t`.
pub fn repeat_index(t: usize, source_frames: usize, target_frames: usize) -> usize {
    ((t as u128 * source_frames as u128 / target_frames as u128) as usize).min(source_frames - 1)
}

/// Nearest-lower-index frame repetition to exactly `target_frames` frames.
pub fn repeat_frames_to(fm: &FeatureMatrix, target_frames: usize, target_rate_hz: f32) -> Result<FeatureMatrix> {
    if target_frames == 0 {
        return Err(Error::InvalidFeatures("target frame count must be positive".into()));
    }
    let mut values = Vec::with_capacity(fm.layers * target_frames * fm.dim);
    for l in 0..fm.layers {
        for t in 0..target_frames {
            values.extend_from_slice(fm.vector(l, repeat_index(t, fm.frames, target_frames)));
        }
    }
    FeatureMatrix::new(fm.layers, target_frames, fm.dim, target_rate_hz, values)
}

/// Stacks `b`'s dimensions after `a`'s. Both must be single-layer and frame-aligned.
pub fn concat_features(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<FeatureMatrix> {
    if a.layers != 1 || b.layers != 1 {
        return Err(Error::InvalidFeatures(format!(
            "concatenation needs single-layer inputs, got {} and {} layers",
            a.layers, b.layers
        )));
    }
    if a.frames != b.frames {
        return Err(Error::UnalignedStreams(a.frames, b.frames));
    }
    let mut values = Vec::with_capacity(a.frames * (a.dim + b.dim));
    for t in 0..a.frames {
        values.extend_from_slice(a.vector(0, t));
        values.extend_from_slice(b.vector(0, t));
    }
    FeatureMatrix::new(1, a.frames, a.dim + b.dim, a.frame_rate_hz, values)
}

pub fn encode_features(fm: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * fm.values.len());
    out.extend_from_slice(FEAT1_MAGIC);
    for d in [fm.layers, fm.frames, fm.dim] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&fm.frame_rate_hz.to_le_bytes());
    for v in &fm.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < FEAT1_MAGIC.len() || &bytes[..6] != FEAT1_MAGIC {
        return Err(Error::NotFeat1);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFeatures {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[6 + 4 * i..10 + 4 * i].try_into().expect("4 bytes"));
    let (layers, frames, dim) = (word(0) as u64, word(1) as u64, word(2) as u64);
    let rate = f32::from_le_bytes(bytes[18..22].try_into().expect("4 bytes"));
    let payload = layers
        .checked_mul(frames)
        .and_then(|v| v.checked_mul(dim))
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| Error::DimensionOverflow(format!("{layers}x{frames}x{dim}")))?;
    let expected = payload
        .checked_add(HEADER_LEN as u64)
        .ok_or_else(|| Error::DimensionOverflow(format!("{layers}x{frames}x{dim}")))?;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(Error::TruncatedFeatures { expected, found });
    }
    if found > expected {
        return Err(Error::TrailingFeatureBytes(found - expected));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    FeatureMatrix::new(layers as usize, frames as usize, dim as usize, rate, values)
}

pub fn store_features(fm: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_features(fm)).map_err(|e| Error::io(path, e))
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_features(&bytes)
}
