//! Attention dumps and their reduction to source-token distributions.
//!
//! A raw [`AttentionTensor`] holds `layers × heads × t_out × t_in` weights for
//! one (sentence, language) translation. Each (layer, head) matrix is averaged
//! over target tokens ([`marginalize`]), normalized, and the heads of a layer
//! are averaged into a [`SourceDistribution`] ([`head_consensus`]).

pub mod adist;
pub mod validate;

pub use adist::{
    read_dump, read_dump_path, write_dump, Dump, DumpRecords, Flavor, LayerPolicy, Manifest, RawRecord,
    ReducedRecord,
};
pub use validate::{validate_dump, validate_path, ValidationReport, Violation, ViolationKind};

use crate::error::{AtdError, Result};
use serde::{Deserialize, Serialize};

/// Row-sum tolerance for softmax rows in attention dumps.
pub const ROW_SUM_TOLERANCE: f64 = 1e-4;

/// Cross-attention weights for one (sentence, language) pair, stored flat in
/// `[layer][head][target][source]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTensor {
    pub sentence_id: u32,
    pub language: String,
    /// Model layer index of each stored layer slot.
    pub layer_ids: Vec<u32>,
    heads: usize,
    t_out: usize,
    t_in: usize,
    weights: Vec<f64>,
}

impl AttentionTensor {
    pub fn new(
        sentence_id: u32,
        language: impl Into<String>,
        layer_ids: Vec<u32>,
        heads: usize,
        t_out: usize,
        t_in: usize,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let layers = layer_ids.len();
        if layers == 0 || heads == 0 || t_out == 0 || t_in == 0 {
            return Err(AtdError::Shape(format!(
                "all dimensions must be >= 1 (L={layers}, H={heads}, T_out={t_out}, T_in={t_in})"
            )));
        }
        let expected = layers * heads * t_out * t_in;
        if weights.len() != expected {
            return Err(AtdError::Shape(format!(
                "expected {expected} weights for {layers}x{heads}x{t_out}x{t_in}, got {}",
                weights.len()
            )));
        }
        Ok(Self {
            sentence_id,
            language: language.into(),
            layer_ids,
            heads,
            t_out,
            t_in,
            weights,
        })
    }

    /// Single-layer, single-head tensor from a `t_out × t_in` matrix.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let t_out = rows.len();
        let t_in = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != t_in) {
            return Err(AtdError::Shape("ragged attention rows".into()));
        }
        let weights = rows.iter().flatten().copied().collect();
        Self::new(0, "", vec![0], 1, t_out, t_in, weights)
    }

    pub fn layers(&self) -> usize {
        self.layer_ids.len()
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn t_out(&self) -> usize {
        self.t_out
    }

    pub fn t_in(&self) -> usize {
        self.t_in
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The `t_out × t_in` attention matrix of one (layer slot, head).
    pub fn matrix(&self, layer: usize, head: usize) -> Result<&[f64]> {
        if layer >= self.layers() {
            return Err(AtdError::IndexOutOfRange {
                dim: "layer",
                index: layer,
                len: self.layers(),
            });
        }
        if head >= self.heads {
            return Err(AtdError::IndexOutOfRange {
                dim: "head",
                index: head,
                len: self.heads,
            });
        }
        let size = self.t_out * self.t_in;
        let start = (layer * self.heads + head) * size;
        Ok(&self.weights[start..start + size])
    }
}

/// Normalized distribution over the source tokens of one
/// (sentence, language, layer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDistribution {
    pub sentence_id: u32,
    pub language: String,
    pub layer: u32,
    pub probs: Vec<f64>,
}

/// Average an attention matrix over target tokens: `ā(t) = (1/T_out) Σ_t' A(t', t)`.
pub fn marginalize(tensor: &AttentionTensor, layer: usize, head: usize) -> Result<Vec<f64>> {
    let m = tensor.matrix(layer, head)?;
    let t_in = tensor.t_in();
    let mut out = vec![0.0; t_in];
    for row in m.chunks_exact(t_in) {
        for (acc, &w) in out.iter_mut().zip(row) {
            *acc += w;
        }
    }
    let scale = 1.0 / tensor.t_out() as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

/// Scale a non-negative vector to unit mass. `None` when the mass is zero or
/// not finite.
pub fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let sum: f64 = v.iter().sum();
    if !(sum.is_finite() && sum > 0.0) {
        return None;
    }
    Some(v.iter().map(|x| x / sum).collect())
}

/// Per-layer consensus: marginalize each head, normalize it, average the
/// heads, then renormalize to remove floating-point drift.
pub fn head_consensus(tensor: &AttentionTensor, layer: usize) -> Result<SourceDistribution> {
    let heads = tensor.heads();
    if layer >= tensor.layers() {
        return Err(AtdError::IndexOutOfRange {
            dim: "layer",
            index: layer,
            len: tensor.layers(),
        });
    }
    let layer_id = tensor.layer_ids[layer];
    let mut mean = vec![0.0; tensor.t_in()];
    for head in 0..heads {
        let marginal = marginalize(tensor, layer, head)?;
        let dist = normalize(&marginal).ok_or_else(|| AtdError::DegenerateAttention {
            sentence_id: tensor.sentence_id,
            language: tensor.language.clone(),
            layer: layer_id,
            head: head as u32,
        })?;
        for (acc, p) in mean.iter_mut().zip(dist) {
            *acc += p;
        }
    }
    let inv = 1.0 / heads as f64;
    mean.iter_mut().for_each(|v| *v *= inv);
    let probs = normalize(&mean).ok_or_else(|| AtdError::DegenerateAttention {
        sentence_id: tensor.sentence_id,
        language: tensor.language.clone(),
        layer: layer_id,
        head: 0,
    })?;
    Ok(SourceDistribution {
        sentence_id: tensor.sentence_id,
        language: tensor.language.clone(),
        layer: layer_id,
        probs,
    })
}
