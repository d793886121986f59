//! Cluster table: `language major minor label cut_depth`, one row per leaf
//! in depth-first order.

use super::{ClusterAssignment, LeafAssignment};
use crate::error::{AtdError, Result};
use crate::report::MANIFEST_TAG;
use std::io::Write;
use std::path::Path;

pub fn write_cluster_table<W: Write>(mut w: W, c: &ClusterAssignment, digest: Option<&str>) -> Result<()> {
    if let Some(d) = digest {
        writeln!(w, "# {MANIFEST_TAG} sha256={d}")?;
    }
    writeln!(w, "# k={} iterations={}", c.k, c.iterations)?;
    writeln!(w, "language\tmajor\tminor\tlabel\tcut_depth")?;
    for l in &c.leaves {
        let minor = l.minor.map_or_else(|| "-".to_string(), |m| m.to_string());
        writeln!(
            w,
            "{}\t{}\t{minor}\t{}\t{}",
            l.label,
            l.major,
            l.display_label(),
            c.cut_depth
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a cluster table. The result has no `tops` (those refer to tree
/// nodes) and `iterations` is read back from the comment when present.
pub fn parse_cluster_table(text: &str) -> Result<(ClusterAssignment, Option<String>)> {
    let mut digest = None;
    let mut iterations = 0;
    let mut leaves = Vec::new();
    let mut cut_depth = 0.0;
    let mut header = false;
    let mut offset = 0;
    for (idx, raw) in text.lines().enumerate() {
        let (line_no, line_offset) = (idx + 1, offset);
        offset += raw.len() + 1;
        let line = raw.trim_end();
        let err = |message: String| AtdError::Parse {
            line: line_no,
            offset: line_offset,
            message,
        };
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            let c = c.trim();
            if let Some(rest) = c.strip_prefix(MANIFEST_TAG) {
                digest = rest.trim().strip_prefix("sha256=").map(str::to_string);
            } else if let Some(it) = c.split_whitespace().find_map(|t| t.strip_prefix("iterations=")) {
                iterations = it.parse().map_err(|_| err(format!("bad iterations {it:?}")))?;
            }
            continue;
        }
        if !header {
            if line != "language\tmajor\tminor\tlabel\tcut_depth" {
                return Err(err("expected cluster table header".into()));
            }
            header = true;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(err(format!("expected 5 columns, got {}", cols.len())));
        }
        let major: usize = cols[1]
            .parse()
            .ok()
            .filter(|&m| m >= 1)
            .ok_or_else(|| err(format!("bad major id {:?}", cols[1])))?;
        let minor = match cols[2] {
            "-" => None,
            m => Some(
                m.parse::<usize>()
                    .ok()
                    .filter(|&m| m >= 1)
                    .ok_or_else(|| err(format!("bad minor id {m:?}")))?,
            ),
        };
        cut_depth = cols[4]
            .parse()
            .map_err(|_| err(format!("bad cut depth {:?}", cols[4])))?;
        leaves.push(LeafAssignment {
            label: cols[0].to_string(),
            major,
            minor,
        });
    }
    if leaves.is_empty() {
        return Err(AtdError::Parse {
            line: 1,
            offset: 0,
            message: "cluster table has no rows".into(),
        });
    }
    let k = leaves.iter().map(|l| l.major).max().unwrap_or(0);
    Ok((
        ClusterAssignment {
            leaves,
            cut_depth,
            k,
            iterations,
            tops: Vec::new(),
        },
        digest,
    ))
}

pub fn read_cluster_table(path: impl AsRef<Path>) -> Result<(ClusterAssignment, Option<String>)> {
    parse_cluster_table(&std::fs::read_to_string(path)?)
}
