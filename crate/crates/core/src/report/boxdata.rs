use crate::error::{AtdError, Result};
use crate::stats::GroupComparison;
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxRow {
    pub focal: String,
    pub group: String,
    pub language: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSummary {
    pub focal: String,
    pub group: String,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoxData {
    pub rows: Vec<BoxRow>,
    pub summaries: Vec<BoxSummary>,
}

/// Quantile by linear interpolation between order statistics at
/// `(n − 1)·q`.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn export_boxdata(comparisons: &[GroupComparison]) -> Result<BoxData> {
    if comparisons.is_empty() {
        return Err(AtdError::Invalid("no comparisons to export".into()));
    }
    let mut out = BoxData::default();
    for c in comparisons {
        for (name, g) in [("same", &c.same), ("different", &c.different)] {
            if g.distances.is_empty() {
                return Err(AtdError::SampleTooSmall { len: 0, min: 1 });
            }
            for (code, &d) in g.codes.iter().zip(&g.distances) {
                out.rows.push(BoxRow {
                    focal: c.focal.clone(),
                    group: name.into(),
                    language: code.clone(),
                    distance: d,
                });
            }
            let mut s = g.distances.clone();
            s.sort_by(f64::total_cmp);
            out.summaries.push(BoxSummary {
                focal: c.focal.clone(),
                group: name.into(),
                n: s.len(),
                mean: crate::stats::mean_of(&s),
                median: quantile(&s, 0.5),
                q1: quantile(&s, 0.25),
                q3: quantile(&s, 0.75),
                min: s[0],
                max: s[s.len() - 1],
            });
        }
    }
    Ok(out)
}

pub fn write_boxdata<W: Write>(mut w: W, b: &BoxData, digest: Option<&str>) -> Result<()> {
    let f = crate::matrix::fmt_value;
    if let Some(d) = digest {
        writeln!(w, "# {} sha256={d}", super::MANIFEST_TAG)?;
    }
    writeln!(w, "#rows")?;
    writeln!(w, "focal\tgroup\tlanguage\tdistance")?;
    for r in &b.rows {
        writeln!(w, "{}\t{}\t{}\t{}", r.focal, r.group, r.language, f(r.distance))?;
    }
    writeln!(w, "#summary")?;
    writeln!(w, "focal\tgroup\tn\tmean\tmedian\tq1\tq3\tmin\tmax")?;
    for s in &b.summaries {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.focal,
            s.group,
            s.n,
            f(s.mean),
            f(s.median),
            f(s.q1),
            f(s.q3),
            f(s.min),
            f(s.max)
        )?;
    }
    w.flush()?;
    Ok(())
}
