use super::PhyloTree;
use crate::error::{AtdError, Result};
use crate::matrix::DistanceMatrix;
use std::collections::BTreeSet;

/// Leaf-to-leaf path lengths, labeled in leaf order.
pub fn patristic_matrix(tree: &PhyloTree) -> Result<DistanceMatrix> {
    let leaves = tree.leaves();
    let rows: Vec<Vec<f64>> = leaves
        .iter()
        .map(|&l| {
            let d = tree.distances_from(l);
            leaves.iter().map(|&k| d[k]).collect()
        })
        .collect();
    DistanceMatrix::from_fn(tree.leaf_labels(), |i, j| rows[i][j])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopheneticReport {
    /// `None` when either side has zero variance.
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub pairs: usize,
}

/// Correlation between the matrix entries and the tree's patristic
/// distances over all unordered leaf pairs. Spearman uses average ranks.
pub fn cophenetic(d: &DistanceMatrix, tree: &PhyloTree) -> Result<CopheneticReport> {
    let p = patristic_matrix(tree)?;
    same_labels(d.labels(), p.labels())?;
    let order: Vec<usize> = d
        .labels()
        .iter()
        .map(|l| p.index_of(l).expect("label sets checked"))
        .collect();
    let n = d.len();
    let mut x = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    let mut y = Vec::with_capacity(x.capacity());
    for i in 0..n {
        for j in i + 1..n {
            x.push(d.get(i, j));
            y.push(p.get(order[i], order[j]));
        }
    }
    Ok(CopheneticReport {
        pearson: pearson(&x, &y),
        spearman: pearson(&average_ranks(&x), &average_ranks(&y)),
        pairs: x.len(),
    })
}

pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks, ties sharing the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn same_labels(a: &[String], b: &[String]) -> Result<()> {
    let sa: BTreeSet<&String> = a.iter().collect();
    let sb: BTreeSet<&String> = b.iter().collect();
    if sa != sb {
        let diff: Vec<&str> = sa.symmetric_difference(&sb).map(|s| s.as_str()).collect();
        return Err(AtdError::LabelMismatch(diff.join(", ")));
    }
    Ok(())
}

/// Non-trivial bipartitions of the leaf set. Each split is written as the
/// sorted side containing the smallest leaf label.
pub fn splits(tree: &PhyloTree) -> BTreeSet<Vec<String>> {
    let leaves = tree.leaves();
    let mut names: Vec<&str> = leaves.iter().map(|&l| tree.label(l)).collect();
    names.sort_unstable();
    let n = leaves.len();
    let rank = |node: usize| names.binary_search(&tree.label(node)).expect("leaf label");

    // iterative post-order from an arbitrary root
    let root = 0;
    let mut parent = vec![usize::MAX; tree.node_count()];
    let mut order = Vec::with_capacity(tree.node_count());
    let mut stack = vec![root];
    parent[root] = root;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(w, _) in tree.neighbors(v) {
            if parent[w] == usize::MAX {
                parent[w] = v;
                stack.push(w);
            }
        }
    }
    let mut below: Vec<Vec<bool>> = vec![Vec::new(); tree.node_count()];
    let mut out = BTreeSet::new();
    for &v in order.iter().rev() {
        let mut set = vec![false; n];
        if tree.is_leaf(v) {
            set[rank(v)] = true;
        }
        for &(w, _) in tree.neighbors(v) {
            if w != v && parent[w] == v {
                for (s, &b) in set.iter_mut().zip(&below[w]) {
                    *s |= b;
                }
            }
        }
        let size = set.iter().filter(|&&b| b).count();
        if v != root && size >= 2 && size <= n - 2 {
            let side = set[0];
            let split: Vec<String> = (0..n)
                .filter(|&k| set[k] == side)
                .map(|k| names[k].to_string())
                .collect();
            out.insert(split);
        }
        below[v] = set;
    }
    out
}

/// Symmetric difference of the two trees' split sets.
pub fn robinson_foulds(a: &PhyloTree, b: &PhyloTree) -> Result<usize> {
    same_labels(&a.leaf_labels(), &b.leaf_labels())?;
    let (sa, sb) = (splits(a), splits(b));
    Ok(sa.symmetric_difference(&sb).count())
}
