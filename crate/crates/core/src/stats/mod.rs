//! Rank tests, effect sizes and controlled word-order comparisons.

mod mann_whitney;
mod registry;
mod wordorder;

pub use mann_whitney::{
    arrangement_counts, exact_p, mann_whitney_u, normal_p, tie_term, MannWhitney, PMethod, Sided,
    EXACT_MAX_TOTAL,
};
pub use registry::{ExcludedLanguage, ExclusionReason, ExclusionRule, LanguageInfo, Registry, REGISTRY_ENV};
pub use wordorder::{
    build_groups, parse_wordorder_report, word_order_compare, write_wordorder_report, Group,
    GroupComparison, WordOrderGroups,
};

use crate::error::{AtdError, Result};

pub(crate) fn mean_of(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// `(mean_a − mean_b) / s_pooled` with `(n_a − 1, n_b − 1)` weights.
/// `Ok(None)` when the pooled variance is zero.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(AtdError::SampleTooSmall { len: s.len(), min: 2 });
        }
    }
    let (ma, mb) = (mean_of(a), mean_of(b));
    let ss = |x: &[f64], m: f64| x.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    let pooled = (ss(a, ma) + ss(b, mb)) / (a.len() + b.len() - 2) as f64;
    if pooled <= 0.0 {
        return Ok(None);
    }
    Ok(Some((ma - mb) / pooled.sqrt()))
}
