//! Reference solver for the discrete transportation problem.
//!
//! A dense two-phase simplex with Bland's rule over the `n²` coupling
//! variables. It shares nothing with the monotone-coupling route in
//! [`super::w2_exact`] and exists to cross-check it; support sizes above
//! [`ORACLE_MAX_SUPPORT`] are refused.

use super::check_pair;
use crate::error::{AtdError, Result};

pub const ORACLE_MAX_SUPPORT: usize = 16;

const EPS: f64 = 1e-12;

/// A feasible coupling between two distributions and its transport cost
/// `Σ γ(t, t') (t − t')²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub n: usize,
    /// Row-major `n × n` masses.
    pub coupling: Vec<f64>,
    pub cost: f64,
}

impl TransportPlan {
    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.n + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.coupling.chunks(self.n).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.mass(i, j)).sum())
            .collect()
    }
}

/// Solve `min_γ Σ γ(t,t') (t−t')²` over all couplings of `p` and `q` and
/// return `(√cost, plan)`.
pub fn w2_lp_oracle(p: &[f64], q: &[f64]) -> Result<(f64, TransportPlan)> {
    if p.len() > ORACLE_MAX_SUPPORT || q.len() > ORACLE_MAX_SUPPORT {
        return Err(AtdError::OracleTooLarge {
            n: p.len().max(q.len()),
            max: ORACLE_MAX_SUPPORT,
        });
    }
    check_pair(p, q)?;
    let n = p.len();
    let vars = n * n;
    // Row-sum constraints for every i, column-sum constraints for all but the
    // last j (the dropped one is implied by total mass).
    let rows = 2 * n - 1;
    let mut a = vec![vec![0.0; vars]; rows];
    let mut b = vec![0.0; rows];
    for i in 0..n {
        for j in 0..n {
            a[i][i * n + j] = 1.0;
        }
        b[i] = p[i];
    }
    for j in 0..n - 1 {
        for i in 0..n {
            a[n + j][i * n + j] = 1.0;
        }
        b[n + j] = q[j];
    }
    let c: Vec<f64> = (0..vars)
        .map(|v| {
            let d = (v / n) as f64 - (v % n) as f64;
            d * d
        })
        .collect();
    let x = simplex(a, b, &c)
        .ok_or_else(|| AtdError::Invalid("transportation LP is infeasible".into()))?;
    let coupling: Vec<f64> = x.into_iter().map(|v| v.max(0.0)).collect();
    let cost: f64 = coupling.iter().zip(&c).map(|(x, c)| x * c).sum();
    Ok((
        cost.max(0.0).sqrt(),
        TransportPlan { n, coupling, cost },
    ))
}

struct Tableau {
    /// `m` rows of `[columns | rhs]`.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let pv = self.t[r][col];
        for v in self.t[r].iter_mut() {
            *v /= pv;
        }
        let pivot_row = self.t[r].clone();
        for (k, row) in self.t.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, pr) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
            }
        }
        self.basis[r] = col;
    }

    /// Minimize `cost · x` over allowed entering columns. Returns false if
    /// unbounded.
    fn run(&mut self, cost: &[f64], allowed: usize) -> bool {
        let m = self.t.len();
        let rhs = self.cols;
        loop {
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j];
                for r in 0..m {
                    d -= cost[self.basis[r]] * self.t[r][j];
                }
                if d < -EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = self.t[r][j];
                if a > EPS {
                    let ratio = self.t[r][rhs] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, best)) => {
                            if ratio < best - EPS
                                || ((ratio - best).abs() <= EPS && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return false;
            };
            self.pivot(r, j);
        }
    }
}

/// Two-phase simplex for `min c·x, Ax = b, x ≥ 0` with `b ≥ 0`.
fn simplex(a: Vec<Vec<f64>>, b: Vec<f64>, c: &[f64]) -> Option<Vec<f64>> {
    let m = a.len();
    let nvars = c.len();
    let cols = nvars + m;
    let t = a
        .into_iter()
        .zip(&b)
        .enumerate()
        .map(|(r, (mut row, &rhs))| {
            row.resize(cols, 0.0);
            row[nvars + r] = 1.0;
            row.push(rhs);
            row
        })
        .collect();
    let mut tab = Tableau {
        t,
        basis: (nvars..cols).collect(),
        cols,
    };

    let mut phase1 = vec![0.0; cols];
    phase1[nvars..].iter_mut().for_each(|v| *v = 1.0);
    if !tab.run(&phase1, cols) {
        return None;
    }
    let infeasibility: f64 = (0..m)
        .filter(|&r| tab.basis[r] >= nvars)
        .map(|r| tab.t[r][cols])
        .sum();
    if infeasibility > 1e-9 {
        return None;
    }
    // Drive zero-level artificials out of the basis where possible; rows
    // where that fails are redundant and keep their artificial at zero.
    for r in 0..m {
        if tab.basis[r] >= nvars {
            if let Some(j) = (0..nvars).find(|&j| !tab.basis.contains(&j) && tab.t[r][j].abs() > EPS) {
                tab.pivot(r, j);
            }
        }
    }

    let mut phase2 = c.to_vec();
    phase2.resize(cols, 0.0);
    if !tab.run(&phase2, nvars) {
        return None;
    }
    let mut x = vec![0.0; nvars];
    for r in 0..m {
        if tab.basis[r] < nvars {
            x[tab.basis[r]] = tab.t[r][cols];
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_masses_plan() {
        let (w, plan) = w2_lp_oracle(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).unwrap();
        assert!((w - 2.0).abs() < 1e-12);
        assert!((plan.mass(0, 2) - 1.0).abs() < 1e-12);
        assert!((plan.cost - 4.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_is_diagonal() {
        let n = 5;
        let p = vec![1.0 / n as f64; n];
        let (w, plan) = w2_lp_oracle(&p, &p).unwrap();
        assert!(w.abs() < 1e-12);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 / n as f64 } else { 0.0 };
                assert!((plan.mass(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn plan_is_feasible() {
        let p = [0.1, 0.4, 0.2, 0.3];
        let q = [0.25, 0.25, 0.3, 0.2];
        let (_, plan) = w2_lp_oracle(&p, &q).unwrap();
        for (a, b) in plan.row_sums().iter().zip(&p) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in plan.col_sums().iter().zip(&q) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(plan.coupling.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn half_shift_matches_hand_value() {
        let (w, _) = w2_lp_oracle(&[0.5, 0.5, 0.0], &[0.0, 0.5, 0.5]).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oversized_refused() {
        let p = vec![1.0 / 17.0; 17];
        assert!(matches!(
            w2_lp_oracle(&p, &p),
            Err(AtdError::OracleTooLarge { n: 17, .. })
        ));
    }
}
