use super::check_pair;
use crate::error::Result;

/// Exact Wasserstein-2 distance between two distributions on the index grid
/// `1..=n` with ground cost `(t - t')²`.
///
/// On the line the monotone (quantile) coupling is optimal for convex costs,
/// so the two cumulative mass profiles are merge-walked and each matched mass
/// increment pays its squared index displacement.
pub fn w2_exact(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    Ok(monotone_cost(p, q).sqrt())
}

/// Squared W2 of the monotone coupling (inputs already checked).
pub(crate) fn monotone_cost(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len();
    let (mut i, mut j) = (0usize, 0usize);
    let (mut ri, mut rj) = (p[0], q[0]);
    let mut cost = 0.0;
    loop {
        let moved = ri.min(rj);
        if moved > 0.0 {
            let d = i as f64 - j as f64;
            cost += moved * d * d;
        }
        ri -= moved;
        rj -= moved;
        // Advance whichever side has run dry; on a tie advance both.
        if ri <= 0.0 {
            i += 1;
            if i == n {
                break;
            }
            ri = p[i];
        }
        if rj <= 0.0 {
            j += 1;
            if j == n {
                break;
            }
            rj = q[j];
        }
    }
    cost
}
