use super::check_pair;
use crate::error::Result;

/// Cramér distance `(Σ_t (F_P(t) − F_Q(t))²)^½` over the shared grid.
pub fn cramer_l2(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    let (mut fp, mut fq, mut acc) = (0.0, 0.0, 0.0);
    for (a, b) in p.iter().zip(q) {
        fp += a;
        fq += b;
        let d = fp - fq;
        acc += d * d;
    }
    Ok(acc.sqrt())
}
