#![allow(dead_code)]

use atd_core::matrix::DistanceMatrix;
use atd_core::phylo::{Edge, PhyloTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability vector; roughly a third of the entries are zero.
pub fn random_dist(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() })
            .collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            return w.into_iter().map(|v| v / s).collect();
        }
    }
}

/// Unrooted binary tree grown by repeatedly splitting a random edge and
/// hanging a new leaf off the split point. Leaves are `t0..`, internal
/// nodes `x0..`.
pub struct RandomTree {
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize, f64)>,
    pub leaves: Vec<usize>,
}

impl RandomTree {
    pub fn new<R: Rng>(rng: &mut R, n_leaves: usize, lo: f64, hi: f64) -> Self {
        assert!(n_leaves >= 3);
        let len = |r: &mut R| lo + (hi - lo) * r.random::<f64>();
        let mut labels = vec!["x0".to_string()];
        let mut edges = Vec::new();
        let mut leaves = Vec::new();
        for i in 0..3 {
            labels.push(format!("t{i}"));
            leaves.push(i + 1);
            edges.push((0, i + 1, len(rng)));
        }
        let mut internal = 1;
        for i in 3..n_leaves {
            let e = rng.random_range(0..edges.len());
            let (a, b, _) = edges[e];
            let mid = labels.len();
            labels.push(format!("x{internal}"));
            internal += 1;
            let leaf = labels.len();
            labels.push(format!("t{i}"));
            leaves.push(leaf);
            edges[e] = (a, mid, len(rng));
            edges.push((mid, b, len(rng)));
            edges.push((mid, leaf, len(rng)));
        }
        Self { labels, edges, leaves }
    }

    pub fn leaf_labels(&self) -> Vec<String> {
        self.leaves.iter().map(|&l| self.labels[l].clone()).collect()
    }

    pub fn to_phylo(&self) -> PhyloTree {
        let edges = self
            .edges
            .iter()
            .map(|&(a, b, length)| Edge { a, b, length })
            .collect();
        PhyloTree::from_parts(self.labels.clone(), edges).unwrap()
    }

    /// Leaf-to-leaf path lengths by depth-first accumulation over this
    /// struct's own edge list.
    pub fn path_lengths(&self) -> Vec<Vec<f64>> {
        let n = self.labels.len();
        let mut adj = vec![Vec::new(); n];
        for &(a, b, l) in &self.edges {
            adj[a].push((b, l));
            adj[b].push((a, l));
        }
        self.leaves
            .iter()
            .map(|&src| {
                let mut dist = vec![f64::NAN; n];
                dist[src] = 0.0;
                let mut stack = vec![src];
                while let Some(v) = stack.pop() {
                    for &(w, l) in &adj[v] {
                        if dist[w].is_nan() {
                            dist[w] = dist[v] + l;
                            stack.push(w);
                        }
                    }
                }
                self.leaves.iter().map(|&t| dist[t]).collect()
            })
            .collect()
    }

    pub fn additive_matrix(&self) -> DistanceMatrix {
        let p = self.path_lengths();
        DistanceMatrix::from_fn(self.leaf_labels(), |i, j| p[i][j]).unwrap()
    }
}

/// Pearson correlation, written out directly.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Ranks by counting: rank = #smaller + (#equal + 1) / 2.
pub fn count_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&w| w < v).count() as f64;
            let eq = x.iter().filter(|&&w| w == v).count() as f64;
            less + (eq + 1.0) / 2.0
        })
        .collect()
}

pub fn upper_triangle(d: &DistanceMatrix) -> Vec<f64> {
    let n = d.len();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| d.get(i, j))
        .collect()
}

/// Discretized Gaussian bump on `0..t`, normalized.
pub fn bump(t: usize, center: f64, width: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..t)
        .map(|i| {
            let z = (i as f64 - center) / width;
            (-0.5 * z * z).exp() + 1e-6
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Planted corpus: each group draws its own bump center per
/// (sentence, layer) cell; members shift it slightly and broaden it by a
/// few percent. Returns the dump and the group membership.
pub fn planted_dump(
    groups: usize,
    per_group: usize,
    sentences: u32,
    layers: u32,
    seed: u64,
) -> (atd_core::ingest::Dump, Vec<Vec<String>>) {
    use atd_core::ingest::{Dump, Flavor, Manifest, ReducedRecord};
    let mut r = rng(seed);
    let members: Vec<Vec<String>> = (0..groups)
        .map(|g| (0..per_group).map(|m| format!("g{g}m{m}")).collect())
        .collect();
    let languages: Vec<String> = members.iter().flatten().cloned().collect();
    let jitter: Vec<(f64, f64)> = (0..groups * per_group)
        .map(|_| (r.random_range(-0.3..0.3), r.random_range(0.95..1.05)))
        .collect();
    let mut records = Vec::new();
    for s in 1..=sentences {
        let t = 24 + (s as usize % 7);
        for layer in 0..layers {
            let centers: Vec<f64> = (0..groups).map(|_| r.random_range(2.0..(t as f64 - 3.0))).collect();
            for (g, names) in members.iter().enumerate() {
                let width = 0.8 + 0.25 * g as f64;
                for (m, name) in names.iter().enumerate() {
                    let (shift, broaden) = jitter[g * per_group + m];
                    records.push(ReducedRecord {
                        sentence_id: s,
                        language: name.clone(),
                        layer,
                        probs: bump(t, centers[g] + shift, width * broaden),
                    });
                }
            }
        }
    }
    let manifest = Manifest::new(Flavor::Reduced, "synthetic", "planted", sentences, languages, layers);
    (Dump::reduced(manifest, records), members)
}
