use super::check_pair;
use crate::error::{AtdError, Result};

/// Entropic transport settings. `blur` is the length scale σ on the unit
/// grid; the entropic regularization is `ε = σ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornConfig {
    pub blur: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Geometric factor for the blur annealing schedule, in (0, 1).
    pub scaling: f64,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            blur: 0.05,
            max_iterations: 500,
            tolerance: 1e-10,
            scaling: 0.5,
        }
    }
}

impl SinkhornConfig {
    pub fn with_blur(blur: f64) -> Self {
        Self {
            blur,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.blur > 0.0 && self.blur.is_finite()) {
            return Err(AtdError::SinkhornConfig("blur must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(AtdError::SinkhornConfig("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(AtdError::SinkhornConfig("max_iterations must be >= 1".into()));
        }
        if !(self.scaling > 0.0 && self.scaling < 1.0) {
            return Err(AtdError::SinkhornConfig("scaling must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornResult {
    pub divergence: f64,
    /// False when `max_iterations` ran out before the marginals matched.
    pub converged: bool,
    pub iterations: usize,
}

/// Weighted support of a distribution on the unit grid.
struct Support {
    x: Vec<f64>,
    log_w: Vec<f64>,
    w: Vec<f64>,
}

impl Support {
    fn new(p: &[f64]) -> Self {
        let n = p.len();
        let step = if n > 1 { 1.0 / (n - 1) as f64 } else { 0.0 };
        let mut s = Support {
            x: Vec::new(),
            log_w: Vec::new(),
            w: Vec::new(),
        };
        for (i, &m) in p.iter().enumerate() {
            if m > 0.0 {
                s.x.push(i as f64 * step);
                s.log_w.push(m.ln());
                s.w.push(m);
            }
        }
        s
    }

    fn dot(&self, pot: &[f64]) -> f64 {
        self.w.iter().zip(pot).map(|(w, f)| w * f).sum()
    }
}

/// `out_i = −ε log Σ_j w_j exp((pot_j − |x_i − y_j|²)/ε)`.
fn softmin(eps: f64, at: &[f64], other: &Support, pot: &[f64]) -> Vec<f64> {
    let mut terms = vec![0.0; other.x.len()];
    at.iter()
        .map(|&xi| {
            let mut hi = f64::NEG_INFINITY;
            for (k, t) in terms.iter_mut().enumerate() {
                let d = xi - other.x[k];
                *t = other.log_w[k] + (pot[k] - d * d) / eps;
                hi = hi.max(*t);
            }
            let s: f64 = terms.iter().map(|t| (t - hi).exp()).sum();
            -eps * (hi + s.ln())
        })
        .collect()
}

fn eps_schedule(cfg: &SinkhornConfig) -> Vec<f64> {
    let target = cfg.blur * cfg.blur;
    let mut out = Vec::new();
    let mut blur = 1.0f64;
    while blur > cfg.blur {
        out.push(blur * blur);
        blur *= cfg.scaling;
    }
    out.push(target);
    out
}

struct Solved {
    value: f64,
    converged: bool,
    iterations: usize,
}

/// State of the semi-dual `H(g) = <a, f(g)> + <b, g>` where `f` is the
/// soft c-transform of `g`.
struct Eval {
    value: f64,
    /// `b − πᵀ1`, the column-marginal violation of the induced plan.
    grad: Vec<f64>,
    /// Row-normalized plan `P_ij = π_ij / a_i`, row-major.
    plan: Vec<f64>,
}

fn evaluate(eps: f64, a: &Support, b: &Support, g: &[f64]) -> Eval {
    let f = softmin(eps, &a.x, b, g);
    let n = b.x.len();
    let mut plan = vec![0.0; a.x.len() * n];
    let mut grad = b.w.clone();
    for (i, (&xi, &fi)) in a.x.iter().zip(&f).enumerate() {
        for j in 0..n {
            let d = xi - b.x[j];
            let pij = (b.log_w[j] + (fi + g[j] - d * d) / eps).exp();
            plan[i * n + j] = pij;
            grad[j] -= a.w[i] * pij;
        }
    }
    Eval {
        value: a.dot(&f) + b.dot(g),
        grad,
        plan,
    }
}

/// Largest `|v|`; non-finite entries count as infinite.
fn violation_of(grad: &[f64]) -> f64 {
    grad.iter().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY })
}

/// Solve `A x = r` for symmetric positive definite `A` (row-major, `k × k`).
fn cholesky_solve(mut m: Vec<f64>, k: usize, r: &[f64]) -> Option<Vec<f64>> {
    for j in 0..k {
        let mut d = m[j * k + j];
        for p in 0..j {
            d -= m[j * k + p] * m[j * k + p];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        m[j * k + j] = d;
        for i in j + 1..k {
            let mut v = m[i * k + j];
            for p in 0..j {
                v -= m[i * k + p] * m[j * k + p];
            }
            m[i * k + j] = v / d;
        }
    }
    let mut y = r.to_vec();
    for i in 0..k {
        for p in 0..i {
            y[i] -= m[i * k + p] * y[p];
        }
        y[i] /= m[i * k + i];
    }
    for i in (0..k).rev() {
        for p in i + 1..k {
            y[i] -= m[p * k + i] * y[p];
        }
        y[i] /= m[i * k + i];
    }
    Some(y)
}

/// Newton ascent on the semi-dual at fixed `eps`, starting from `g`.
/// The last potential is pinned to remove the additive gauge.
fn newton(eps: f64, a: &Support, b: &Support, g: &mut [f64], tol: f64, budget: &mut usize) -> (Eval, bool) {
    let n = b.x.len();
    let k = n - 1;
    let mut cur = evaluate(eps, a, b, g);
    loop {
        let violation = violation_of(&cur.grad);
        if violation < tol {
            return (cur, true);
        }
        if *budget == 0 || k == 0 {
            return (cur, k == 0);
        }
        *budget -= 1;
        // negative Hessian (1/ε)(diag(s) − Σ_i a_i P_i P_iᵀ) on the free block
        let mut h = vec![0.0; k * k];
        for (i, &ai) in a.w.iter().enumerate() {
            let row = &cur.plan[i * n..i * n + k];
            for j in 0..k {
                let w = ai * row[j];
                if w == 0.0 {
                    continue;
                }
                h[j * k + j] += w;
                for l in 0..k {
                    h[j * k + l] -= w * row[l];
                }
            }
        }
        let scale = h.iter().step_by(k + 1).fold(0.0f64, |m, &v| m.max(v));
        h.iter_mut().for_each(|v| *v /= eps);
        let mut lambda = 1e-12 * scale.max(f64::MIN_POSITIVE) / eps;
        let dir = loop {
            let mut reg = h.clone();
            for j in 0..k {
                reg[j * k + j] += lambda;
            }
            if let Some(d) = cholesky_solve(reg, k, &cur.grad[..k]) {
                break d;
            }
            lambda = (lambda * 100.0).max(1e-300);
        };
        // potentials live on the unit cost scale; a near-singular Hessian
        // (almost deterministic plan) must not throw them out of range
        let mut dir = dir;
        let longest = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if longest > 1.0 {
            dir.iter_mut().for_each(|d| *d /= longest);
        }
        let slope: f64 = dir.iter().zip(&cur.grad).map(|(d, r)| d * r).sum();
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = g
                .iter()
                .enumerate()
                .map(|(j, &v)| if j < k { v + t * dir[j] } else { v })
                .collect();
            let next = evaluate(eps, a, b, &trial);
            let next_violation = violation_of(&next.grad);
            if !next.value.is_finite() || !next_violation.is_finite() {
                t *= 0.5;
                continue;
            }
            // near the optimum the value gain drops below rounding, so a
            // smaller marginal violation also counts as progress, as long as
            // the value has not actually fallen
            let flat = next.value >= cur.value - 1e-12 * cur.value.abs().max(1.0);
            if next.value >= cur.value + 1e-4 * t * slope || (flat && next_violation < 0.5 * violation) {
                g.copy_from_slice(&trial);
                cur = next;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            // no ascent left at working precision
            return (cur, false);
        }
    }
}

/// `OT_ε(a, b)`, annealing the regularization from the unit scale down to
/// the configured blur.
fn entropic_ot(a: &Support, b: &Support, cfg: &SinkhornConfig) -> Solved {
    let schedule = eps_schedule(cfg);
    let mut g = vec![0.0; b.x.len()];
    let mut budget = cfg.max_iterations;
    let last = schedule.len() - 1;
    let mut out = None;
    for (step, &eps) in schedule.iter().enumerate() {
        let tol = if step == last { cfg.tolerance } else { cfg.tolerance.max(1e-6) };
        let (eval, ok) = newton(eps, a, b, &mut g, tol, &mut budget);
        if step == last {
            out = Some((eval.value, ok));
        }
    }
    let (value, converged) = out.expect("non-empty schedule");
    Solved {
        value,
        converged,
        iterations: cfg.max_iterations - budget,
    }
}

/// Debiased Sinkhorn divergence
/// `S(P,Q) = OT_ε(P,Q) − ½ OT_ε(P,P) − ½ OT_ε(Q,Q)` with squared Euclidean
/// cost on token positions rescaled to `[0, 1]`.
///
/// Each `OT_ε` term is solved by Newton ascent on the semi-dual with a
/// backtracking line search; `tolerance` bounds the marginal violation of
/// the final plan and `max_iterations` the Newton steps per term.
/// Non-convergence is reported through [`SinkhornResult::converged`], not as
/// an error.
pub fn sinkhorn_divergence(p: &[f64], q: &[f64], cfg: &SinkhornConfig) -> Result<SinkhornResult> {
    cfg.validate()?;
    check_pair(p, q)?;
    let a = Support::new(p);
    let b = Support::new(q);
    let ab = entropic_ot(&a, &b, cfg);
    let aa = entropic_ot(&a, &a, cfg);
    let bb = entropic_ot(&b, &b, cfg);
    Ok(SinkhornResult {
        divergence: ab.value - 0.5 * aa.value - 0.5 * bb.value,
        converged: ab.converged && aa.converged && bb.converged,
        iterations: ab.iterations.max(aa.iterations).max(bb.iterations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::w2_exact;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    }

    #[test]
    fn self_divergence_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2, 5, 12] {
            let p = random_dist(&mut rng, n);
            let r = sinkhorn_divergence(&p, &p, &SinkhornConfig::default()).unwrap();
            assert!(r.converged);
            assert!(r.divergence.abs() <= 1e-9, "n={n}: {}", r.divergence);
        }
    }

    #[test]
    fn symmetric_and_non_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = rng.random_range(2..10);
            let p = random_dist(&mut rng, n);
            let q = random_dist(&mut rng, n);
            let cfg = SinkhornConfig::default();
            let a = sinkhorn_divergence(&p, &q, &cfg).unwrap();
            let b = sinkhorn_divergence(&q, &p, &cfg).unwrap();
            assert!(a.converged && b.converged);
            assert!((a.divergence - b.divergence).abs() <= 1e-9);
            assert!(a.divergence >= -1e-9);
        }
    }

    #[test]
    fn point_masses_give_squared_displacement() {
        // single-atom supports: the only coupling is the product measure
        let p = [1.0, 0.0, 0.0];
        let q = [0.0, 0.0, 1.0];
        for blur in [0.2, 0.1, 0.05, 0.01] {
            let r = sinkhorn_divergence(&p, &q, &SinkhornConfig::with_blur(blur)).unwrap();
            assert!((r.divergence - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn approaches_w2_squared_as_blur_shrinks() {
        let p = [0.3, 0.4, 0.2, 0.1, 0.0, 0.0];
        let q = [0.0, 0.1, 0.1, 0.3, 0.3, 0.2];
        let step = 1.0 / 5.0;
        let w2 = w2_exact(&p, &q).unwrap() * step;
        let target = w2 * w2;
        let mut last = f64::INFINITY;
        for blur in [0.2, 0.1, 0.05, 0.01] {
            let r = sinkhorn_divergence(&p, &q, &SinkhornConfig::with_blur(blur)).unwrap();
            assert!(r.converged, "blur {blur}");
            let gap = (r.divergence - target).abs();
            assert!(gap <= last + 1e-12, "blur {blur}: gap {gap} after {last}");
            last = gap;
        }
        assert!(last < 1e-3, "final gap {last}");
    }

    #[test]
    fn non_convergence_is_flagged() {
        let p = [0.5, 0.0, 0.5];
        let q = [0.0, 1.0, 0.0];
        let cfg = SinkhornConfig {
            max_iterations: 2,
            blur: 0.01,
            ..SinkhornConfig::default()
        };
        let r = sinkhorn_divergence(&[0.2, 0.3, 0.5], &[0.6, 0.2, 0.2], &cfg).unwrap();
        assert!(!r.converged);
        assert!(sinkhorn_divergence(&p, &q, &cfg).is_ok());
    }

    #[test]
    fn rejects_bad_config() {
        let p = [1.0];
        assert!(sinkhorn_divergence(&p, &p, &SinkhornConfig::with_blur(0.0)).is_err());
        let cfg = SinkhornConfig {
            tolerance: 0.0,
            ..SinkhornConfig::default()
        };
        assert!(sinkhorn_divergence(&p, &p, &cfg).is_err());
    }

    /// Textbook scaling iterations `u = a / Kv`, `v = b / Kᵀu` in the linear
    /// domain; fine at a coarse blur where the kernel does not underflow.
    fn plain_ot(a: &[f64], b: &[f64], eps: f64) -> f64 {
        let n = a.len();
        let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let k: Vec<Vec<f64>> = x.iter().map(|xi| x.iter().map(|yj| (-(xi - yj) * (xi - yj) / eps).exp()).collect()).collect();
        let mut u = vec![1.0; n];
        let mut v = vec![1.0; n];
        for _ in 0..200_000 {
            for i in 0..n {
                u[i] = a[i] / (0..n).map(|j| k[i][j] * v[j]).sum::<f64>();
            }
            for j in 0..n {
                v[j] = b[j] / (0..n).map(|i| k[i][j] * u[i]).sum::<f64>();
            }
        }
        (0..n).map(|i| a[i] * eps * u[i].ln() + b[i] * eps * v[i].ln()).sum()
    }

    #[test]
    fn agrees_with_plain_scaling_at_coarse_blur() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let n = rng.random_range(2..7);
            let p = random_dist(&mut rng, n);
            let q = random_dist(&mut rng, n);
            let eps = 0.3f64 * 0.3;
            let expect = plain_ot(&p, &q, eps) - 0.5 * plain_ot(&p, &p, eps) - 0.5 * plain_ot(&q, &q, eps);
            let r = sinkhorn_divergence(&p, &q, &SinkhornConfig::with_blur(0.3)).unwrap();
            assert!(r.converged);
            assert!((r.divergence - expect).abs() < 1e-9, "{} vs {expect}", r.divergence);
        }
    }

    #[test]
    fn converges_at_small_blur() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.random_range(2..13);
            let p = random_dist(&mut rng, n);
            let q = random_dist(&mut rng, n);
            let r = sinkhorn_divergence(&p, &q, &SinkhornConfig::with_blur(0.01)).unwrap();
            assert!(r.converged, "n={n} after {} steps", r.iterations);
            assert!(r.divergence >= -1e-9);
        }
    }

    #[test]
    fn two_point_argument_order_agrees() {
        // the Newton step used to bounce between two potentials here
        let p = [0.16738074456043547, 0.8326192554395645];
        let q = [0.05487831587826686, 0.945121684121733];
        let cfg = SinkhornConfig::default();
        let pq = sinkhorn_divergence(&p, &q, &cfg).unwrap();
        let qp = sinkhorn_divergence(&q, &p, &cfg).unwrap();
        assert!(pq.converged && qp.converged);
        assert!((pq.divergence - qp.divergence).abs() < 1e-9);
    }
}
