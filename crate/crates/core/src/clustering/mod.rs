//! Rooting and depth-threshold clustering of NJ trees.

mod cut;
mod table;

pub use cut::{bisection_cut, cut_at_depth, distinct_depths, subcluster, ClusterAssignment, LeafAssignment};
pub use table::{parse_cluster_table, read_cluster_table, write_cluster_table};

use crate::error::{AtdError, Result};
use crate::phylo::PhyloTree;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum RootStrategy {
    /// Midpoint of the longest leaf-to-leaf path.
    #[default]
    Midpoint,
    /// Midpoint of the edge above the named leaf.
    Outgroup(String),
}

impl FromStr for RootStrategy {
    type Err = AtdError;
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "midpoint" => Ok(Self::Midpoint),
            Some(("outgroup", label)) if !label.is_empty() => Ok(Self::Outgroup(label.into())),
            _ => Err(AtdError::Invalid(format!(
                "rooting must be `midpoint` or `outgroup:<label>`, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for RootStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Midpoint => f.write_str("midpoint"),
            Self::Outgroup(l) => write!(f, "outgroup:{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootedNode {
    /// Leaf label; `None` for internal nodes.
    pub label: Option<String>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Length of the edge to the parent (0 at the root).
    pub length: f64,
    pub depth: f64,
}

/// A tree with a designated root and cumulative depths.
///
/// Children are ordered by their sorted leaf-label sets, smallest first, so
/// depth-first order is independent of how the input tree was stored.
#[derive(Debug, Clone, PartialEq)]
pub struct RootedTree {
    nodes: Vec<RootedNode>,
    root: usize,
}

impl RootedTree {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[RootedNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &RootedNode {
        &self.nodes[i]
    }

    pub fn max_depth(&self) -> f64 {
        self.nodes.iter().map(|n| n.depth).fold(0.0, f64::max)
    }

    /// Leaf node indices in depth-first order.
    pub fn leaves_under(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            let n = &self.nodes[u];
            if n.children.is_empty() {
                out.push(u);
            }
            stack.extend(n.children.iter().rev());
        }
        out
    }

    pub fn leaf_labels(&self) -> Vec<String> {
        self.leaves_under(self.root)
            .into_iter()
            .map(|i| self.nodes[i].label.clone().unwrap_or_default())
            .collect()
    }

    /// The subtree below `v` as its own rooted tree, depths measured from `v`.
    pub fn subtree(&self, v: usize) -> RootedTree {
        let mut nodes = Vec::new();
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            map[u] = nodes.len();
            let src = &self.nodes[u];
            nodes.push(RootedNode {
                label: src.label.clone(),
                parent: src.parent.filter(|_| u != v),
                children: src.children.clone(),
                length: if u == v { 0.0 } else { src.length },
                depth: src.depth - self.nodes[v].depth,
            });
            stack.extend(src.children.iter().rev());
        }
        for n in &mut nodes {
            n.parent = n.parent.map(|p| map[p]);
            for c in &mut n.children {
                *c = map[*c];
            }
        }
        RootedTree { nodes, root: 0 }
    }

    /// Build from parent links over a `PhyloTree`'s nodes plus an optional
    /// split edge, then order children and compute depths.
    fn assemble(tree: &PhyloTree, root: Root) -> RootedTree {
        let n = tree.node_count();
        let mut nodes: Vec<RootedNode> = (0..n)
            .map(|i| RootedNode {
                label: tree.is_leaf(i).then(|| tree.label(i).to_string()),
                parent: None,
                children: Vec::new(),
                length: 0.0,
                depth: 0.0,
            })
            .collect();
        let (root_id, seeds): (usize, Vec<(usize, f64)>) = match root {
            Root::Node(r) => (r, tree.neighbors(r).to_vec()),
            Root::Edge { a, b, from_a } => {
                let len = tree.edge_length(a, b).expect("edge exists");
                nodes.push(RootedNode {
                    label: None,
                    parent: None,
                    children: Vec::new(),
                    length: 0.0,
                    depth: 0.0,
                });
                (n, vec![(a, from_a), (b, len - from_a)])
            }
        };
        let mut visited = vec![false; nodes.len()];
        visited[root_id] = true;
        for &(c, _) in &seeds {
            visited[c] = true;
        }
        let mut stack = Vec::new();
        for (c, len) in seeds {
            nodes[c].parent = Some(root_id);
            nodes[c].length = len.max(0.0);
            nodes[root_id].children.push(c);
            stack.push(c);
        }
        while let Some(v) = stack.pop() {
            for &(w, len) in tree.neighbors(v) {
                if visited[w] {
                    continue;
                }
                visited[w] = true;
                nodes[w].parent = Some(v);
                nodes[w].length = len;
                nodes[v].children.push(w);
                stack.push(w);
            }
        }
        let mut t = RootedTree { nodes, root: root_id };
        t.finish();
        t
    }

    fn finish(&mut self) {
        // post-order leaf-set keys for child ordering
        let order = self.preorder();
        let mut keys: Vec<Vec<String>> = vec![Vec::new(); self.nodes.len()];
        for &v in order.iter().rev() {
            let mut k: Vec<String> = self.nodes[v].label.iter().cloned().collect();
            for &c in &self.nodes[v].children {
                k.extend(keys[c].iter().cloned());
            }
            k.sort();
            keys[v] = k;
        }
        for v in 0..self.nodes.len() {
            let mut ch = std::mem::take(&mut self.nodes[v].children);
            ch.sort_by(|a, b| keys[*a].cmp(&keys[*b]));
            self.nodes[v].children = ch;
        }
        self.nodes[self.root].depth = 0.0;
        for v in self.preorder() {
            if let Some(p) = self.nodes[v].parent {
                self.nodes[v].depth = self.nodes[p].depth + self.nodes[v].length;
            }
        }
    }

    fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.nodes[v].children.iter().rev());
        }
        out
    }
}

enum Root {
    Node(usize),
    /// A new node on edge `a`–`b` at distance `from_a` from `a`.
    Edge { a: usize, b: usize, from_a: f64 },
}

/// Place a root on an unrooted tree.
pub fn root_tree(tree: &PhyloTree, strategy: &RootStrategy) -> Result<RootedTree> {
    match strategy {
        RootStrategy::Midpoint => Ok(RootedTree::assemble(tree, midpoint(tree))),
        RootStrategy::Outgroup(label) => {
            let leaf = tree
                .leaf_index(label)
                .ok_or_else(|| AtdError::UnknownLabel(label.clone()))?;
            let (parent, len) = tree.neighbors(leaf)[0];
            Ok(RootedTree::assemble(
                tree,
                Root::Edge {
                    a: leaf,
                    b: parent,
                    from_a: len / 2.0,
                },
            ))
        }
    }
}

fn midpoint(tree: &PhyloTree) -> Root {
    let leaves = tree.leaves();
    let mut best = (0.0, leaves[0], leaves[1]);
    let mut first = true;
    for (k, &a) in leaves.iter().enumerate() {
        let d = tree.distances_from(a);
        for &b in &leaves[k + 1..] {
            if first || d[b] > best.0 {
                best = (d[b], a, b);
                first = false;
            }
        }
    }
    let (total, a, b) = best;
    let half = total / 2.0;
    let path = tree.path(a, b);
    let mut acc = 0.0;
    let tol = 1e-12 * total.max(1.0);
    for w in path.windows(2) {
        if (acc - half).abs() <= tol {
            return Root::Node(w[0]);
        }
        let len = tree.edge_length(w[0], w[1]).expect("path edge");
        if acc + len > half + tol {
            return Root::Edge {
                a: w[0],
                b: w[1],
                from_a: half - acc,
            };
        }
        acc += len;
    }
    Root::Node(*path.last().expect("non-empty path"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phylo::{from_newick, Edge};

    fn depth_of(t: &RootedTree, label: &str) -> f64 {
        t.nodes()
            .iter()
            .find(|n| n.label.as_deref() == Some(label))
            .unwrap()
            .depth
    }

    #[test]
    fn two_leaf_path_midpoint() {
        let t = PhyloTree::from_parts(vec!["a".into(), "b".into()], vec![Edge { a: 0, b: 1, length: 2.0 }]).unwrap();
        let r = root_tree(&t, &RootStrategy::Midpoint).unwrap();
        assert_eq!(depth_of(&r, "a"), 1.0);
        assert_eq!(depth_of(&r, "b"), 1.0);
    }

    #[test]
    fn four_leaf_midpoint_balances() {
        // longest path B..D = 2 + 1 + 4 = 7, midpoint 3.5 from B lies on the internal edge
        let t = from_newick("((A:1,B:2):1,C:3,D:4);").unwrap();
        let r = root_tree(&t, &RootStrategy::Midpoint).unwrap();
        let root = r.node(r.root());
        assert_eq!(root.children.len(), 2);
        let maxd = |v: usize| {
            r.leaves_under(v).iter().map(|&l| r.node(l).depth).fold(0.0, f64::max)
        };
        let (l, rr) = (maxd(root.children[0]), maxd(root.children[1]));
        assert!((l - 3.5).abs() < 1e-12 && (rr - 3.5).abs() < 1e-12);
        assert!(r.label_set_ok());
        assert_eq!(r.leaf_labels(), vec!["A", "B", "C", "D"]);
    }

    #[test]
    fn outgroup_splits_parent_edge() {
        let t = from_newick("((a:1,b:1):1,c:4,d:1);").unwrap();
        let r = root_tree(&t, &RootStrategy::Outgroup("c".into())).unwrap();
        assert_eq!(depth_of(&r, "c"), 2.0);
        assert_eq!(depth_of(&r, "d"), 3.0);
        assert_eq!(depth_of(&r, "a"), 4.0);
        assert!(root_tree(&t, &RootStrategy::Outgroup("zz".into())).is_err());
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("midpoint".parse::<RootStrategy>().unwrap(), RootStrategy::Midpoint);
        assert_eq!(
            "outgroup:ja".parse::<RootStrategy>().unwrap(),
            RootStrategy::Outgroup("ja".into())
        );
        assert!("outgroup:".parse::<RootStrategy>().is_err());
        assert!("centroid".parse::<RootStrategy>().is_err());
    }

    impl RootedTree {
        fn label_set_ok(&self) -> bool {
            self.nodes.iter().enumerate().all(|(i, n)| {
                n.children.iter().all(|&c| self.nodes[c].parent == Some(i))
                    && n.children.iter().all(|&c| self.nodes[c].depth >= n.depth)
            })
        }
    }
}
