use super::PhyloTree;
use crate::error::{AtdError, Result};
use crate::matrix::DistanceMatrix;

/// Neighbor-Joining.
///
/// Each step joins the active pair minimizing
/// `Q(i,j) = (m−2) D(i,j) − R(i) − R(j)`, ties going to the first pair in
/// `(i, j)` order over the current active list. The new node is appended to
/// the end of that list. Branch lengths are clamped at zero; the last two
/// active nodes are joined by a single edge.
///
/// Leaves are nodes `0..n` in matrix order, internal nodes follow as `u1`,
/// `u2`, ... in creation order.
pub fn nj_build(d: &DistanceMatrix) -> Result<PhyloTree> {
    let n = d.len();
    if n < 3 {
        return Err(AtdError::TooFewTaxa(n));
    }
    let mut tree = PhyloTree::empty();
    for l in d.labels() {
        tree.push_node(l.clone());
    }
    // active[k] is a tree node; dist is indexed by active position
    let mut active: Vec<usize> = (0..n).collect();
    let mut dist: Vec<Vec<f64>> = d.rows();

    while active.len() > 2 {
        let m = active.len();
        let r: Vec<f64> = dist.iter().map(|row| row.iter().sum()).collect();
        let mut best = (0, 1);
        let mut best_q = f64::INFINITY;
        for i in 0..m {
            for j in i + 1..m {
                let q = (m - 2) as f64 * dist[i][j] - r[i] - r[j];
                if q < best_q {
                    best_q = q;
                    best = (i, j);
                }
            }
        }
        let (i, j) = best;
        let dij = dist[i][j];
        let fi = 0.5 * dij + (r[i] - r[j]) / (2.0 * (m - 2) as f64);
        let fj = dij - fi;
        let u = tree.push_node(format!("u{}", tree.node_count() - n + 1));
        tree.push_edge(u, active[i], fi.max(0.0));
        tree.push_edge(u, active[j], fj.max(0.0));

        let du: Vec<f64> = (0..m)
            .filter(|&k| k != i && k != j)
            .map(|k| 0.5 * (dist[i][k] + dist[j][k] - dij))
            .collect();
        let keep: Vec<usize> = (0..m).filter(|&k| k != i && k != j).collect();
        let mut next: Vec<Vec<f64>> = keep
            .iter()
            .map(|&a| keep.iter().map(|&b| dist[a][b]).collect())
            .collect();
        for (row, &v) in next.iter_mut().zip(&du) {
            row.push(v);
        }
        let mut last = du;
        last.push(0.0);
        next.push(last);
        dist = next;
        active = keep.iter().map(|&k| active[k]).chain(std::iter::once(u)).collect();
    }
    tree.push_edge(active[1], active[0], dist[0][1].max(0.0));
    tree.check()?;
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phylo::{patristic_matrix, to_newick};

    fn matrix(labels: &[&str], upper: &[f64]) -> DistanceMatrix {
        let mut it = upper.iter();
        DistanceMatrix::from_fn(labels.iter().map(|s| s.to_string()).collect(), |_, _| {
            *it.next().unwrap()
        })
        .unwrap()
    }

    #[test]
    fn three_point_star() {
        let d = matrix(&["a", "b", "c"], &[2.0, 4.0, 4.0]);
        let t = nj_build(&d).unwrap();
        // a + b = 2, a + c = 4, b + c = 4
        assert_eq!(t.edge_length(0, 3), Some(1.0));
        assert_eq!(t.edge_length(1, 3), Some(1.0));
        assert_eq!(t.edge_length(2, 3), Some(3.0));
        assert_eq!(to_newick(&t), "(a:1,b:1,c:3);");
    }

    #[test]
    fn four_leaf_additive() {
        // ((A:1,B:2):1,(C:3,D:4))
        let d = matrix(&["A", "B", "C", "D"], &[3.0, 5.0, 6.0, 6.0, 7.0, 7.0]);
        let t = nj_build(&d).unwrap();
        let p = patristic_matrix(&t).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((p.get(i, j) - d.get(i, j)).abs() < 1e-12);
            }
        }
        assert_eq!(t.edge_length(0, 4), Some(1.0));
        assert_eq!(t.edge_length(1, 4), Some(2.0));
        let s = crate::phylo::splits(&t);
        assert!(s.contains(&vec!["A".to_string(), "B".to_string()]));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn equilateral_ties() {
        let d = matrix(&["a", "b", "c", "d"], &[2.0; 6]);
        let t = nj_build(&d).unwrap();
        for leaf in t.leaves() {
            assert_eq!(t.neighbors(leaf)[0].1, 1.0);
        }
        assert_eq!(t.edge_length(4, 5), Some(0.0));
        // first pair in index order wins the tie
        assert_eq!(t.neighbors(4)[..2], [(0, 1.0), (1, 1.0)]);
    }

    #[test]
    fn noisy_lengths_clamped() {
        let d = matrix(&["a", "b", "c", "d"], &[1.0, 9.0, 1.0, 1.0, 9.0, 1.0]);
        let t = nj_build(&d).unwrap();
        assert!(t.edges().iter().all(|e| e.length >= 0.0));
    }

    #[test]
    fn too_few_taxa() {
        let d = matrix(&["a", "b"], &[1.0]);
        assert!(matches!(nj_build(&d), Err(AtdError::TooFewTaxa(2))));
    }
}
