//! Unrooted trees from distance matrices.

mod compare;
mod newick;
mod nj;

pub use compare::{average_ranks, cophenetic, patristic_matrix, robinson_foulds, splits, CopheneticReport};
pub use newick::{from_newick, parse_newick, to_newick, to_newick_with_comment};
pub use nj::nj_build;

use crate::error::{AtdError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

/// An unrooted tree with labeled nodes and non-negative edge lengths.
///
/// Leaves are the nodes of degree one. Internal nodes carry generated names
/// (`u1`, `u2`, ... in creation order) unless a parsed file named them.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyloTree {
    labels: Vec<String>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl PhyloTree {
    /// Build and validate a tree from node labels and edges.
    pub fn from_parts(labels: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let mut t = Self::empty();
        for l in labels {
            t.push_node(l);
        }
        for e in edges {
            if e.a >= t.node_count() || e.b >= t.node_count() {
                return Err(AtdError::InvalidTree(format!(
                    "edge ({}, {}) refers to a missing node",
                    e.a, e.b
                )));
            }
            t.push_edge(e.a, e.b, e.length);
        }
        t.check()?;
        Ok(t)
    }

    pub(crate) fn empty() -> Self {
        Self {
            labels: Vec::new(),
            edges: Vec::new(),
            adj: Vec::new(),
        }
    }

    pub(crate) fn push_node(&mut self, label: String) -> usize {
        self.labels.push(label);
        self.adj.push(Vec::new());
        self.labels.len() - 1
    }

    pub(crate) fn push_edge(&mut self, a: usize, b: usize, length: f64) {
        self.edges.push(Edge { a, b, length });
        self.adj[a].push((b, length));
        self.adj[b].push((a, length));
    }

    pub(crate) fn check(&self) -> Result<()> {
        let n = self.node_count();
        if self.leaves().len() < 2 {
            return Err(AtdError::InvalidTree("a tree needs at least two leaves".into()));
        }
        if self.edges.len() + 1 != n {
            return Err(AtdError::InvalidTree(format!(
                "{n} nodes need {} edges, got {}",
                n - 1,
                self.edges.len()
            )));
        }
        if let Some(e) = self.edges.iter().find(|e| !(e.length >= 0.0 && e.length.is_finite())) {
            return Err(AtdError::InvalidTree(format!(
                "edge ({}, {}) has length {}",
                e.a, e.b, e.length
            )));
        }
        if self.edges.iter().any(|e| e.a == e.b) {
            return Err(AtdError::InvalidTree("self loop".into()));
        }
        // n - 1 edges and connected implies acyclic
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.contains(&false) {
            return Err(AtdError::InvalidTree("tree is not connected".into()));
        }
        let mut leaf_labels: Vec<&str> = self.leaves().iter().map(|&i| self.label(i)).collect();
        if leaf_labels.iter().any(|l| l.is_empty()) {
            return Err(AtdError::InvalidTree("unlabeled leaf".into()));
        }
        leaf_labels.sort_unstable();
        if let Some(w) = leaf_labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(AtdError::InvalidTree(format!("duplicate leaf label {}", w[0])));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors with edge lengths, in insertion order.
    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adj[node]
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.adj[node].len() <= 1
    }

    /// Leaf node indices in node order.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.is_leaf(i)).collect()
    }

    pub fn leaf_labels(&self) -> Vec<String> {
        self.leaves().into_iter().map(|i| self.labels[i].clone()).collect()
    }

    pub fn leaf_index(&self, label: &str) -> Option<usize> {
        (0..self.node_count()).find(|&i| self.is_leaf(i) && self.labels[i] == label)
    }

    /// Path length from `from` to every node.
    pub fn distances_from(&self, from: usize) -> Vec<f64> {
        let mut dist = vec![f64::NAN; self.node_count()];
        dist[from] = 0.0;
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            for &(w, len) in &self.adj[v] {
                if dist[w].is_nan() {
                    dist[w] = dist[v] + len;
                    stack.push(w);
                }
            }
        }
        dist
    }

    /// Nodes on the path from `a` to `b`, both ends included.
    pub fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.node_count()];
        parent[a] = a;
        let mut stack = vec![a];
        while let Some(v) = stack.pop() {
            if v == b {
                break;
            }
            for &(w, _) in &self.adj[v] {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    stack.push(w);
                }
            }
        }
        let mut out = vec![b];
        let mut v = b;
        while v != a {
            v = parent[v];
            out.push(v);
        }
        out.reverse();
        out
    }

    pub fn edge_length(&self, a: usize, b: usize) -> Option<f64> {
        self.adj[a].iter().find(|&&(w, _)| w == b).map(|&(_, l)| l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(a: usize, b: usize, length: f64) -> Edge {
        Edge { a, b, length }
    }

    #[test]
    fn validation() {
        let labels = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert!(PhyloTree::from_parts(labels(&["a", "b"]), vec![e(0, 1, 2.0)]).is_ok());
        assert!(PhyloTree::from_parts(labels(&["a", "b"]), vec![e(0, 1, -1.0)]).is_err());
        assert!(PhyloTree::from_parts(labels(&["a", "a", "u"]), vec![e(0, 2, 1.0), e(1, 2, 1.0)]).is_err());
        assert!(PhyloTree::from_parts(labels(&["a", "b", "c"]), vec![e(0, 1, 1.0)]).is_err());
        let cyc = vec![e(0, 1, 1.0), e(1, 2, 1.0), e(2, 0, 1.0)];
        assert!(PhyloTree::from_parts(labels(&["a", "b", "c", "d"]), cyc).is_err());
    }

    #[test]
    fn paths() {
        let labels = ["a", "b", "c", "u1"].iter().map(|s| s.to_string()).collect();
        let t = PhyloTree::from_parts(labels, vec![e(0, 3, 1.0), e(1, 3, 2.0), e(2, 3, 3.0)]).unwrap();
        assert_eq!(t.leaves(), vec![0, 1, 2]);
        assert_eq!(t.path(0, 2), vec![0, 3, 2]);
        assert_eq!(t.distances_from(1), vec![3.0, 0.0, 5.0, 2.0]);
    }
}
