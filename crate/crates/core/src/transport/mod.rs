//! Distances between two discrete distributions on the same 1-D token grid.

mod cramer;
pub mod oracle;
mod sinkhorn;
mod w2;

pub use cramer::cramer_l2;
pub use oracle::{w2_lp_oracle, TransportPlan, ORACLE_MAX_SUPPORT};
pub use sinkhorn::{sinkhorn_divergence, SinkhornConfig, SinkhornResult};
pub use w2::w2_exact;

use crate::error::{AtdError, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Mass tolerance for distributions passed to the transport functions.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Per-cell distance used when aggregating a distance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    /// Exact Wasserstein-2 via the monotone coupling.
    #[default]
    W2,
    /// L2 norm of the CDF difference.
    Cramer,
}

impl DistanceKind {
    pub fn distance(self, p: &[f64], q: &[f64]) -> Result<f64> {
        match self {
            DistanceKind::W2 => w2_exact(p, q),
            DistanceKind::Cramer => cramer_l2(p, q),
        }
    }
}

/// Log, once per process, that the two matrix metrics are different
/// quantities: W2 couples quantiles, Cramér integrates the squared CDF gap.
pub fn log_distance_kind_note(kind: DistanceKind) {
    static NOTE: std::sync::Once = std::sync::Once::new();
    NOTE.call_once(|| {
        log::info!(
            "using {kind}: exact W2 (monotone quantile coupling) and the CDF-L2 (Cramér) \
             distance are distinct; select with --metric"
        );
    });
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceKind::W2 => "w2",
            DistanceKind::Cramer => "cramer",
        })
    }
}

impl FromStr for DistanceKind {
    type Err = AtdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "w2" => Ok(DistanceKind::W2),
            "cramer" => Ok(DistanceKind::Cramer),
            other => Err(AtdError::Invalid(format!("unknown distance kind {other:?}"))),
        }
    }
}

pub(crate) fn check_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(AtdError::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if p.is_empty() {
        return Err(AtdError::EmptyDistribution);
    }
    check_distribution(p)?;
    check_distribution(q)
}

pub(crate) fn check_distribution(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) || (sum - 1.0).abs() > MASS_TOLERANCE {
        return Err(AtdError::NotNormalized { sum });
    }
    Ok(())
}
