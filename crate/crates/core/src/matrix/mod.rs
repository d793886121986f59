//! The language-by-language ATD matrix.

mod aggregate;
mod io;
mod metric;
mod quality;

pub use aggregate::{
    atd_pair, build_matrix, Corpus, KahanSum, LayerMap, MatrixConfig, MatrixBuild, MissingPolicy,
};
pub use io::{parse_matrix, read_matrix, write_matrix_json, write_matrix_tsv, MatrixFile};
pub(crate) use io::fmt_value;
pub use metric::{check_metric, MetricReport};
pub use quality::{filter_languages, LanguageQuality, QualityTable, SentenceScore};

use crate::error::{AtdError, Result};
use crate::transport::DistanceKind;
use serde::{Deserialize, Serialize};

/// Effective number of shared sentences behind one matrix cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCount {
    pub a: String,
    pub b: String,
    pub sentences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub model_id: String,
    pub sentence_count: usize,
    pub layer_policy: String,
    pub distance_kind: DistanceKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pair_sentences: Vec<PairCount>,
}

/// Symmetric, zero-diagonal, non-negative distance matrix with labels.
/// Only the upper triangle is ever computed; the lower is its mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<f64>,
    pub provenance: Provenance,
}

impl DistanceMatrix {
    /// Build from an upper-triangle function `f(i, j)` for `i < j`.
    pub fn from_fn(labels: Vec<String>, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let n = labels.len();
        check_labels(&labels)?;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                check_value(&labels, i, j, v)?;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Ok(Self {
            labels,
            values,
            provenance: Provenance::default(),
        })
    }

    /// Build from full rows. Rows must be symmetric within a relative
    /// `1e-12`, have a zero diagonal, and be non-negative; the upper
    /// triangle is kept and mirrored.
    pub fn from_rows(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = labels.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(AtdError::InvalidMatrix(format!(
                "expected {n}x{n} values for {n} labels"
            )));
        }
        for i in 0..n {
            if rows[i][i].abs() > 1e-12 || rows[i][i].is_nan() {
                return Err(AtdError::InvalidMatrix(format!(
                    "non-zero diagonal at {}",
                    labels[i]
                )));
            }
            for j in i + 1..n {
                let (a, b) = (rows[i][j], rows[j][i]);
                let scale = a.abs().max(b.abs()).max(1.0);
                if !((a - b).abs() <= 1e-12 * scale) {
                    return Err(AtdError::InvalidMatrix(format!(
                        "asymmetric entry ({}, {}): {a} vs {b}",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        Self::from_fn(labels, |i, j| rows[i][j])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn get_by_label(&self, a: &str, b: &str) -> Result<f64> {
        let i = self
            .index_of(a)
            .ok_or_else(|| AtdError::UnknownLabel(a.into()))?;
        let j = self
            .index_of(b)
            .ok_or_else(|| AtdError::UnknownLabel(b.into()))?;
        Ok(self.get(i, j))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i).to_vec()).collect()
    }

    /// Reorder rows and columns by `order` (indices into the current labels).
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return Err(AtdError::Invalid("ordering is not a permutation".into()));
        }
        let labels = order.iter().map(|&i| self.labels[i].clone()).collect();
        let mut m = Self::from_fn(labels, |a, b| self.get(order[a], order[b]))?;
        m.provenance = self.provenance.clone();
        Ok(m)
    }

    /// Sub-matrix over the given labels, in that order.
    pub fn select(&self, labels: &[String]) -> Result<Self> {
        let order = labels
            .iter()
            .map(|l| self.index_of(l).ok_or_else(|| AtdError::UnknownLabel(l.clone())))
            .collect::<Result<Vec<_>>>()?;
        let mut m = Self::from_fn(labels.to_vec(), |a, b| self.get(order[a], order[b]))?;
        m.provenance = self.provenance.clone();
        Ok(m)
    }
}

fn check_labels(labels: &[String]) -> Result<()> {
    let mut sorted: Vec<&String> = labels.iter().collect();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(AtdError::InvalidMatrix(format!("duplicate label {}", w[0])));
    }
    if labels.iter().any(|l| l.is_empty() || l.chars().any(char::is_whitespace)) {
        return Err(AtdError::InvalidMatrix(
            "labels must be non-empty and contain no whitespace".into(),
        ));
    }
    Ok(())
}

fn check_value(labels: &[String], i: usize, j: usize, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(AtdError::InvalidMatrix(format!(
            "entry ({}, {}) is {v}; distances must be finite and non-negative",
            labels[i], labels[j]
        )));
    }
    Ok(())
}
