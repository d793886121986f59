use super::RootedTree;
use crate::error::{AtdError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LeafAssignment {
    pub label: String,
    pub major: usize,
    pub minor: Option<usize>,
}

impl LeafAssignment {
    /// `"major.minor"`, or just the major id before sub-clustering.
    pub fn display_label(&self) -> String {
        match self.minor {
            Some(m) => format!("{}.{m}", self.major),
            None => self.major.to_string(),
        }
    }
}

/// Leaves in depth-first order with 1-based cluster ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub leaves: Vec<LeafAssignment>,
    pub cut_depth: f64,
    pub k: usize,
    /// Bisection steps taken (0 for a direct cut).
    pub iterations: usize,
    /// Top node of each major cluster, indexed by `major - 1`.
    pub tops: Vec<usize>,
}

impl ClusterAssignment {
    /// Leaf labels grouped by major id.
    pub fn majors(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.k];
        for l in &self.leaves {
            out[l.major - 1].push(l.label.clone());
        }
        out
    }

    pub fn get(&self, label: &str) -> Option<&LeafAssignment> {
        self.leaves.iter().find(|l| l.label == label)
    }
}

/// Clusters are the leaf sets under each highest node deeper than `d`;
/// leaves not below such a node are singletons.
pub fn cut_at_depth(rooted: &RootedTree, d: f64) -> ClusterAssignment {
    let mut leaves = Vec::new();
    let mut tops = Vec::new();
    let mut stack = vec![rooted.root()];
    while let Some(v) = stack.pop() {
        let node = rooted.node(v);
        if node.depth > d || node.children.is_empty() {
            tops.push(v);
            let major = tops.len();
            for l in rooted.leaves_under(v) {
                leaves.push(LeafAssignment {
                    label: rooted.node(l).label.clone().unwrap_or_default(),
                    major,
                    minor: None,
                });
            }
        } else {
            stack.extend(node.children.iter().rev());
        }
    }
    ClusterAssignment {
        k: tops.len(),
        leaves,
        cut_depth: d,
        iterations: 0,
        tops,
    }
}

/// Sorted distinct node depths. Between consecutive values the cut is
/// constant, so these are the only cut positions worth scanning.
pub fn distinct_depths(rooted: &RootedTree) -> Vec<f64> {
    let mut v: Vec<f64> = rooted.nodes().iter().map(|n| n.depth).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn better(k: usize, d: f64, best: &ClusterAssignment, target: usize) -> bool {
    let key = |k: usize| k.abs_diff(target);
    (key(k), k, d) < (key(best.k), best.k, best.cut_depth)
}

/// Bisect the cut depth over `[0, max depth]` toward `k_target` clusters.
///
/// Both endpoints are evaluated first; each step then halves the bracket.
/// Returns the visited cut closest to `k_target`, ties going to smaller `k`
/// and then smaller depth.
pub fn bisection_cut(rooted: &RootedTree, k_target: usize, max_iter: usize) -> Result<ClusterAssignment> {
    best_cut(rooted, k_target, max_iter, usize::MAX)
        .map(|c| c.expect("unbounded search always has a candidate"))
}

fn best_cut(
    rooted: &RootedTree,
    k_target: usize,
    max_iter: usize,
    k_cap: usize,
) -> Result<Option<ClusterAssignment>> {
    if k_target < 2 {
        return Err(AtdError::Invalid(format!("k_target must be >= 2, got {k_target}")));
    }
    let mut best: Option<ClusterAssignment> = None;
    let consider = |c: ClusterAssignment, best: &mut Option<ClusterAssignment>| {
        if c.k <= k_cap && best.as_ref().is_none_or(|b| better(c.k, c.cut_depth, b, k_target)) {
            *best = Some(c);
        }
    };
    let (mut lo, mut hi) = (0.0, rooted.max_depth());
    let at_lo = cut_at_depth(rooted, lo);
    let done = at_lo.k >= k_target;
    consider(at_lo, &mut best);
    let mut iterations = 0;
    if !done {
        let at_hi = cut_at_depth(rooted, hi);
        let done = at_hi.k <= k_target;
        consider(at_hi, &mut best);
        while !done && iterations < max_iter {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            iterations += 1;
            let c = cut_at_depth(rooted, mid);
            let k = c.k;
            consider(c, &mut best);
            match k.cmp(&k_target) {
                std::cmp::Ordering::Equal => break,
                std::cmp::Ordering::Less => lo = mid,
                std::cmp::Ordering::Greater => hi = mid,
            }
        }
    }
    Ok(best.map(|mut b| {
        b.iterations = iterations;
        b
    }))
}

/// Split each major cluster into at most `max_minor` minors by running the
/// same bisection inside its subtree. Majors that are single leaves, or
/// whose subtree cannot be cut into 2..=`max_minor` parts, get one minor.
pub fn subcluster(
    rooted: &RootedTree,
    majors: &ClusterAssignment,
    max_minor: usize,
    max_iter: usize,
) -> Result<ClusterAssignment> {
    if max_minor < 1 {
        return Err(AtdError::Invalid("max_minor must be >= 1".into()));
    }
    let mut out = majors.clone();
    let mut pos = 0;
    for (idx, &top) in majors.tops.iter().enumerate() {
        let sub = rooted.subtree(top);
        let size = rooted.leaves_under(top).len();
        let minors: Vec<usize> = if size < 2 || max_minor < 2 {
            vec![1; size]
        } else {
            match best_cut(&sub, max_minor, max_iter, max_minor)? {
                Some(c) => c.leaves.iter().map(|l| l.major).collect(),
                None => vec![1; size],
            }
        };
        for m in minors {
            debug_assert_eq!(out.leaves[pos].major, idx + 1);
            out.leaves[pos].minor = Some(m);
            pos += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{root_tree, RootStrategy};
    use crate::phylo::from_newick;

    fn rooted(newick: &str) -> RootedTree {
        // trees here are written with a bifurcating root; take the parsed
        // root (last internal node) as given via its degree-2 midpoint
        let t = from_newick(newick).unwrap();
        root_tree(&t, &RootStrategy::Midpoint).unwrap()
    }

    #[test]
    fn boundaries() {
        let r = rooted("((a:1,b:1):1,(c:1,d:1):1);");
        let at0 = cut_at_depth(&r, 0.0);
        assert_eq!(at0.k, 2);
        assert_eq!(at0.majors(), vec![vec!["a", "b"], vec!["c", "d"]]);
        assert_eq!(cut_at_depth(&r, r.max_depth()).k, 4);
        assert_eq!(cut_at_depth(&r, 10.0).k, 4);
    }

    #[test]
    fn perfect_binary_four() {
        let r = rooted("(((a:1,b:1):1,(c:1,d:1):1):1,((e:1,f:1):1,(g:1,h:1):1):1);");
        let c = bisection_cut(&r, 4, 50).unwrap();
        assert_eq!(c.k, 4);
        assert!(c.cut_depth >= 1.0 && c.cut_depth < 2.0);
    }

    #[test]
    fn star_takes_closest() {
        let leaves: Vec<String> = (0..10).map(|i| format!("l{i}:1")).collect();
        let t = from_newick(&format!("({});", leaves.join(","))).unwrap();
        let r = root_tree(&t, &RootStrategy::Outgroup("l0".into())).unwrap();
        // rooting on l0's edge: k(d) goes 2 (d < 0.5) then 10
        let c = bisection_cut(&r, 7, 50).unwrap();
        assert_eq!(c.k, 10);
        let c = bisection_cut(&r, 5, 50).unwrap();
        assert_eq!(c.k, 2);
    }

    #[test]
    fn subclusters_capped() {
        let r = rooted("(((a:0.1,b:0.1):1,(c:0.1,d:0.1):1,(e:0.1,f:0.1):1):5,(x:1,y:1,z:1,w:1):5);");
        let majors = bisection_cut(&r, 2, 50).unwrap();
        assert_eq!(majors.k, 2);
        let s = subcluster(&r, &majors, 3, 50).unwrap();
        let labels: Vec<String> = s.leaves.iter().map(|l| l.display_label()).collect();
        assert_eq!(labels, ["1.1", "1.1", "1.2", "1.2", "1.3", "1.3", "2.1", "2.1", "2.1", "2.1"]);
    }

    #[test]
    fn singleton_major_gets_minor_one() {
        let r = rooted("((a:1,b:1):3,c:4);");
        let majors = cut_at_depth(&r, 0.5);
        let s = subcluster(&r, &majors, 3, 50).unwrap();
        assert!(s.leaves.iter().all(|l| l.minor.is_some()));
        assert_eq!(s.get("a").unwrap().display_label(), "1.1");
        assert_eq!(s.get("c").unwrap().display_label(), "2.1");
    }
}
