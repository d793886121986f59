use crate::error::{AtdError, Result};
use crate::phylo::average_ranks;
use statrs::distribution::{ContinuousCDF, Normal};
use std::fmt;
use std::str::FromStr;

/// Largest `n_a + n_b` for which tie-free samples get the exact p value.
pub const EXACT_MAX_TOTAL: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sided {
    #[default]
    Two,
    /// Alternative: `a` tends to be smaller than `b`.
    Less,
    /// Alternative: `a` tends to be larger than `b`.
    Greater,
}

impl FromStr for Sided {
    type Err = AtdError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two" | "two-sided" => Ok(Self::Two),
            "less" => Ok(Self::Less),
            "greater" => Ok(Self::Greater),
            _ => Err(AtdError::Invalid(format!("sidedness must be two, less or greater, got {s:?}"))),
        }
    }
}

impl fmt::Display for Sided {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Two => "two",
            Self::Less => "less",
            Self::Greater => "greater",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PMethod {
    Exact,
    Normal,
}

impl fmt::Display for PMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::Normal => "normal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// `U_a`: rank sum of `a` minus `n_a(n_a+1)/2`.
    pub u: f64,
    pub p: f64,
    pub sided: Sided,
    pub method: PMethod,
}

/// Number of orderings of `m` a-items and `n` b-items with `U_a = u`, for
/// `u = 0..=m·n`.
pub fn arrangement_counts(m: usize, n: usize) -> Vec<u64> {
    // f[i][j][u]: rolling over i with a table on (j, u)
    let max_u = m * n;
    let mut prev: Vec<Vec<u64>> = (0..=n)
        .map(|_| {
            let mut v = vec![0u64; max_u + 1];
            v[0] = 1;
            v
        })
        .collect();
    for i in 1..=m {
        let mut cur: Vec<Vec<u64>> = vec![vec![0u64; max_u + 1]; n + 1];
        cur[0][0] = 1;
        for j in 1..=n {
            for u in 0..=i * j {
                // largest element from a beats all j b-items; from b, beats none
                let from_a = if u >= j { prev[j][u - j] } else { 0 };
                cur[j][u] = from_a + cur[j - 1][u];
            }
        }
        prev = cur;
    }
    prev[n].clone()
}

fn combine(lower: f64, upper: f64, sided: Sided) -> f64 {
    match sided {
        Sided::Two => (2.0 * lower.min(upper)).min(1.0),
        Sided::Less => lower.min(1.0),
        Sided::Greater => upper.min(1.0),
    }
}

/// Exact p for an integer `U_a` from the arrangement counts.
pub fn exact_p(u: usize, m: usize, n: usize, sided: Sided) -> f64 {
    let counts = arrangement_counts(m, n);
    let total: u64 = counts.iter().sum();
    let le: u64 = counts[..=u.min(m * n)].iter().sum();
    let ge: u64 = counts[u.min(m * n)..].iter().sum();
    combine(le as f64 / total as f64, ge as f64 / total as f64, sided)
}

/// `Σ (t³ − t)` over tie groups of the pooled sample.
pub fn tie_term(pooled: &[f64]) -> f64 {
    let mut v = pooled.to_vec();
    v.sort_by(f64::total_cmp);
    let mut acc = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        acc += t * t * t - t;
        i = j + 1;
    }
    acc
}

/// Normal approximation with tie-corrected variance and a 0.5 continuity
/// correction.
pub fn normal_p(u: f64, m: usize, n: usize, ties: f64, sided: Sided) -> f64 {
    let (mf, nf) = (m as f64, n as f64);
    let total = mf + nf;
    let mu = mf * nf / 2.0;
    let var = mf * nf / 12.0 * ((total + 1.0) - ties / (total * (total - 1.0)));
    if !(var > 0.0) {
        return 1.0;
    }
    let sd = var.sqrt();
    let z = Normal::standard();
    let lower = z.cdf((u - mu + 0.5) / sd);
    let upper = z.cdf((mu - u + 0.5) / sd);
    combine(lower, upper, sided)
}

/// Mann-Whitney U of `a` against `b`.
///
/// Exact when there are no ties and `n_a + n_b ≤ 12`, normal approximation
/// otherwise.
pub fn mann_whitney_u(a: &[f64], b: &[f64], sided: Sided) -> Result<MannWhitney> {
    for s in [a, b] {
        if s.is_empty() {
            return Err(AtdError::SampleTooSmall { len: 0, min: 1 });
        }
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(AtdError::Invalid("samples must be finite".into()));
    }
    let (m, n) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = average_ranks(&pooled);
    let ra: f64 = ranks[..m].iter().sum();
    let u = ra - (m * (m + 1)) as f64 / 2.0;
    let ties = tie_term(&pooled);
    let (p, method) = if ties == 0.0 && m + n <= EXACT_MAX_TOTAL {
        (exact_p(u.round() as usize, m, n, sided), PMethod::Exact)
    } else {
        (normal_p(u, m, n, ties, sided), PMethod::Normal)
    };
    Ok(MannWhitney { u, p, sided, method })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binom(n: u64, k: u64) -> u64 {
        (1..=k).fold(1, |acc, i| acc * (n - k + i) / i)
    }

    #[test]
    fn two_by_two_hand_value() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0], Sided::Two).unwrap();
        assert_eq!(r.u, 0.0);
        assert_eq!(r.method, PMethod::Exact);
        assert!((r.p - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(arrangement_counts(2, 2), vec![1, 1, 2, 1, 1]);
    }

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 2.0, 5.0];
        let r = mann_whitney_u(&a, &a, Sided::Two).unwrap();
        assert_eq!(r.u, 8.0);
        assert_eq!(r.method, PMethod::Normal);
        assert!((r.p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_samples_use_normal() {
        let a: Vec<f64> = (0..10).map(f64::from).collect();
        let b: Vec<f64> = (10..20).map(f64::from).collect();
        let r = mann_whitney_u(&a, &b, Sided::Less).unwrap();
        assert_eq!(r.method, PMethod::Normal);
        assert!(r.p < 1e-3);
    }

    #[test]
    fn counts_sum_to_binomial() {
        for m in 0..=7 {
            for n in 0..=7 {
                let c = arrangement_counts(m, n);
                assert_eq!(c.len(), m * n + 1);
                assert_eq!(c.iter().sum::<u64>(), binom((m + n) as u64, m as u64));
                // symmetric around m*n/2
                assert!(c.iter().eq(c.iter().rev()));
            }
        }
    }

    #[test]
    fn rejects_empty() {
        assert!(mann_whitney_u(&[], &[1.0], Sided::Two).is_err());
    }

    proptest! {
        #[test]
        fn swapping_roles(a in proptest::collection::vec(-5.0f64..5.0, 1..8),
                          b in proptest::collection::vec(-5.0f64..5.0, 1..8),
                          shift in -10.0f64..10.0) {
            let ab = mann_whitney_u(&a, &b, Sided::Two).unwrap();
            let ba = mann_whitney_u(&b, &a, Sided::Two).unwrap();
            prop_assert!((ab.u + ba.u - (a.len() * b.len()) as f64).abs() < 1e-9);
            prop_assert!((ab.p - ba.p).abs() < 1e-12);
            let sa: Vec<f64> = a.iter().map(|x| x + shift).collect();
            let sb: Vec<f64> = b.iter().map(|x| x + shift).collect();
            let shifted = mann_whitney_u(&sa, &sb, Sided::Two).unwrap();
            // a shift can merge or split float ties; compare only when it did not
            if tie_term(&[&sa[..], &sb[..]].concat()) == tie_term(&[&a[..], &b[..]].concat()) {
                prop_assert_eq!(shifted.u, ab.u);
                prop_assert!((shifted.p - ab.p).abs() < 1e-12);
            }
        }
    }
}
