use super::MANIFEST_TAG;
use crate::clustering::ClusterAssignment;
use crate::error::{AtdError, Result};
use crate::matrix::DistanceMatrix;
use std::collections::BTreeSet;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockLevel {
    Major,
    Minor,
}

/// A run of rows sharing a cluster id, `start..end` in the ordered matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub level: BlockLevel,
    pub label: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub matrix: DistanceMatrix,
    pub blocks: Vec<Block>,
    /// Mean over pairs inside one major block; `None` without such pairs.
    pub within_mean: Option<f64>,
    pub between_mean: Option<f64>,
}

/// Reorder `d` by (major, minor, leaf order) and mark block boundaries.
pub fn export_heatmap(d: &DistanceMatrix, clusters: &ClusterAssignment) -> Result<Heatmap> {
    let in_d: BTreeSet<&str> = d.labels().iter().map(String::as_str).collect();
    let in_c: BTreeSet<&str> = clusters.leaves.iter().map(|l| l.label.as_str()).collect();
    if in_d != in_c || in_c.len() != clusters.leaves.len() {
        let diff: Vec<&str> = in_d.symmetric_difference(&in_c).copied().collect();
        return Err(AtdError::LabelMismatch(if diff.is_empty() {
            "cluster table repeats a language".into()
        } else {
            diff.join(", ")
        }));
    }
    let mut rows: Vec<(usize, usize, usize)> = clusters
        .leaves
        .iter()
        .enumerate()
        .map(|(pos, l)| (l.major, l.minor.unwrap_or(0), pos))
        .collect();
    rows.sort_unstable();
    let order: Vec<usize> = rows
        .iter()
        .map(|&(_, _, pos)| d.index_of(&clusters.leaves[pos].label).expect("checked above"))
        .collect();
    let matrix = d.permuted(&order)?;

    let mut blocks = Vec::new();
    let mut push_runs = |level: BlockLevel, key: &dyn Fn(usize) -> (usize, usize)| {
        let mut start = 0;
        for i in 1..=rows.len() {
            if i == rows.len() || key(i) != key(start) {
                let leaf = &clusters.leaves[rows[start].2];
                let label = match level {
                    BlockLevel::Major => leaf.major.to_string(),
                    BlockLevel::Minor => leaf.display_label(),
                };
                blocks.push(Block { level, label, start, end: i });
                start = i;
            }
        }
    };
    push_runs(BlockLevel::Major, &|i| (rows[i].0, 0));
    if clusters.leaves.iter().any(|l| l.minor.is_some()) {
        push_runs(BlockLevel::Minor, &|i| (rows[i].0, rows[i].1));
    }

    let (mut within, mut between) = ((0.0, 0usize), (0.0, 0usize));
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let slot = if rows[i].0 == rows[j].0 { &mut within } else { &mut between };
            slot.0 += matrix.get(i, j);
            slot.1 += 1;
        }
    }
    let avg = |(s, n): (f64, usize)| (n > 0).then(|| s / n as f64);
    Ok(Heatmap {
        matrix,
        blocks,
        within_mean: avg(within),
        between_mean: avg(between),
    })
}

/// Block sidecar: `level label start end` with 0-based, end-exclusive rows.
pub fn write_blocks<W: Write>(mut w: W, h: &Heatmap, digest: Option<&str>) -> Result<()> {
    if let Some(d) = digest {
        writeln!(w, "# {MANIFEST_TAG} sha256={d}")?;
    }
    let show = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), crate::matrix::fmt_value);
    writeln!(w, "# within_mean={} between_mean={}", show(h.within_mean), show(h.between_mean))?;
    writeln!(w, "level\tlabel\tstart\tend")?;
    for b in &h.blocks {
        let level = match b.level {
            BlockLevel::Major => "major",
            BlockLevel::Minor => "minor",
        };
        writeln!(w, "{level}\t{}\t{}\t{}", b.label, b.start, b.end)?;
    }
    w.flush()?;
    Ok(())
}
