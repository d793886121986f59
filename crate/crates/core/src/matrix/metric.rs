use super::DistanceMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub max_symmetry_violation: f64,
    pub min_off_diagonal: f64,
    /// Unordered triples `{i, j, k}` where some side exceeds the sum of the
    /// other two by more than the tolerance.
    pub triangle_violations: usize,
    /// Largest excess `D[i][k] − D[i][j] − D[j][k]` seen, with its triple.
    pub worst_triangle: Option<(usize, usize, usize, f64)>,
}

impl MetricReport {
    pub fn is_metric(&self) -> bool {
        self.max_symmetry_violation == 0.0 && self.triangle_violations == 0
    }
}

pub fn check_metric(d: &DistanceMatrix, tol: f64) -> MetricReport {
    let n = d.len();
    let mut sym = 0.0f64;
    let mut min_off = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            sym = sym.max((d.get(i, j) - d.get(j, i)).abs());
            if i != j {
                min_off = min_off.min(d.get(i, j));
            }
        }
    }
    let mut violations = 0;
    let mut worst: Option<(usize, usize, usize, f64)> = None;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (ij, jk, ik) = (d.get(i, j), d.get(j, k), d.get(i, k));
                // (long side, endpoints of long side, middle vertex)
                let sides = [(ik - ij - jk, i, j, k), (ij - ik - jk, i, k, j), (jk - ij - ik, j, i, k)];
                let mut hit = false;
                for &(excess, a, mid, b) in &sides {
                    if excess > tol {
                        hit = true;
                    }
                    if worst.is_none_or(|w| excess > w.3) {
                        worst = Some((a, mid, b, excess));
                    }
                }
                if hit {
                    violations += 1;
                }
            }
        }
    }
    MetricReport {
        max_symmetry_violation: sym,
        min_off_diagonal: if n > 1 { min_off } else { 0.0 },
        triangle_violations: violations,
        worst_triangle: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_violation() {
        let labels = vec!["a".to_string(), "b".into(), "c".into()];
        let rows = vec![vec![0.0, 1.0, 10.0], vec![1.0, 0.0, 1.0], vec![10.0, 1.0, 0.0]];
        let d = DistanceMatrix::from_rows(labels, &rows).unwrap();
        let r = check_metric(&d, 1e-9);
        assert_eq!(r.triangle_violations, 1);
        assert_eq!(r.max_symmetry_violation, 0.0);
        assert_eq!(r.min_off_diagonal, 1.0);
        let (a, mid, b, excess) = r.worst_triangle.unwrap();
        assert_eq!((a, mid, b), (0, 1, 2));
        assert_eq!(excess, 8.0);
        assert!(!r.is_metric());
    }

    #[test]
    fn line_metric_is_clean() {
        let labels: Vec<String> = (0..6).map(|i| format!("p{i}")).collect();
        let d = DistanceMatrix::from_fn(labels, |i, j| (j - i) as f64).unwrap();
        assert!(check_metric(&d, 1e-9).is_metric());
    }
}
