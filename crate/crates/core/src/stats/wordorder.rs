//! Same-order vs different-order comparisons of one language's ATD row.

use super::{cohens_d, mann_whitney_u, mean_of, PMethod, Registry, Sided};
use crate::error::{AtdError, Result};
use crate::matrix::DistanceMatrix;
use crate::report::MANIFEST_TAG;
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct WordOrderGroups {
    pub focal: String,
    pub focal_order: String,
    pub same: Vec<String>,
    pub different: Vec<String>,
    /// Excluded languages that were present among the labels.
    pub excluded: Vec<String>,
}

/// Split `labels` (minus the focal language and its exclusions) by whether
/// their dominant order equals the focal language's.
pub fn build_groups(labels: &[String], focal: &str, registry: &Registry) -> Result<WordOrderGroups> {
    if !labels.iter().any(|l| l == focal) {
        return Err(AtdError::UnknownLabel(focal.into()));
    }
    let order_of = |code: &str| {
        registry
            .get(code)
            .and_then(|l| l.word_order.clone())
            .ok_or_else(|| AtdError::UnknownWordOrder(code.into()))
    };
    let focal_order = order_of(focal)?;
    let rules = registry.exclusions_for(focal);
    let mut g = WordOrderGroups {
        focal: focal.into(),
        focal_order: focal_order.clone(),
        same: Vec::new(),
        different: Vec::new(),
        excluded: Vec::new(),
    };
    for l in labels.iter().filter(|l| *l != focal) {
        if rules.iter().any(|r| &r.code == l) {
            g.excluded.push(l.clone());
        } else if order_of(l)? == focal_order {
            g.same.push(l.clone());
        } else {
            g.different.push(l.clone());
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub codes: Vec<String>,
    /// Distance from the focal language, aligned with `codes`.
    pub distances: Vec<f64>,
    pub mean: f64,
}

impl Group {
    fn new(codes: Vec<String>, distances: Vec<f64>) -> Self {
        let mean = if distances.is_empty() { f64::NAN } else { mean_of(&distances) };
        Self { codes, distances, mean }
    }

    pub fn n(&self) -> usize {
        self.codes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupComparison {
    pub focal: String,
    pub focal_order: String,
    pub same: Group,
    pub different: Group,
    pub excluded: Vec<String>,
    /// `U` of the same-order group against the different-order group.
    pub u: f64,
    pub sided: Sided,
    /// p under `sided`; the three variants are kept alongside.
    pub p: f64,
    pub p_two: f64,
    pub p_less: f64,
    pub p_greater: f64,
    pub method: PMethod,
    /// Same minus different, in pooled standard deviations.
    pub cohens_d: Option<f64>,
}

pub fn word_order_compare(
    d: &DistanceMatrix,
    focal: &str,
    registry: &Registry,
    sided: Sided,
) -> Result<GroupComparison> {
    let g = build_groups(d.labels(), focal, registry)?;
    let row = |codes: &[String]| -> Result<Vec<f64>> {
        codes.iter().map(|c| d.get_by_label(focal, c)).collect()
    };
    let same = Group::new(g.same.clone(), row(&g.same)?);
    let different = Group::new(g.different.clone(), row(&g.different)?);
    let test = |s| mann_whitney_u(&same.distances, &different.distances, s);
    let main = test(sided)?;
    let effect = match cohens_d(&same.distances, &different.distances) {
        Ok(v) => v,
        Err(AtdError::SampleTooSmall { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(GroupComparison {
        focal: g.focal,
        focal_order: g.focal_order,
        excluded: g.excluded,
        u: main.u,
        sided,
        p: main.p,
        p_two: test(Sided::Two)?.p,
        p_less: test(Sided::Less)?.p,
        p_greater: test(Sided::Greater)?.p,
        method: main.method,
        cohens_d: effect,
        same,
        different,
    })
}

fn fmt(v: f64) -> String {
    crate::matrix::fmt_value(v)
}

/// Key/value block followed by the per-language scatter rows.
pub fn write_wordorder_report<W: Write>(mut w: W, c: &GroupComparison, digest: Option<&str>) -> Result<()> {
    if let Some(d) = digest {
        writeln!(w, "# {MANIFEST_TAG} sha256={d}")?;
    }
    writeln!(w, "field\tvalue")?;
    let rows: Vec<(&str, String)> = vec![
        ("focal", c.focal.clone()),
        ("focal_order", c.focal_order.clone()),
        ("sided", c.sided.to_string()),
        ("same_n", c.same.n().to_string()),
        ("same_mean", fmt(c.same.mean)),
        ("same_codes", c.same.codes.join(",")),
        ("different_n", c.different.n().to_string()),
        ("different_mean", fmt(c.different.mean)),
        ("different_codes", c.different.codes.join(",")),
        ("excluded", c.excluded.join(",")),
        ("u", fmt(c.u)),
        ("p", fmt(c.p)),
        ("p_two", fmt(c.p_two)),
        ("p_less", fmt(c.p_less)),
        ("p_greater", fmt(c.p_greater)),
        ("p_method", c.method.to_string()),
        ("cohens_d", c.cohens_d.map_or_else(|| "NA".into(), fmt)),
    ];
    for (k, v) in rows {
        writeln!(w, "{k}\t{v}")?;
    }
    writeln!(w, "#scatter")?;
    writeln!(w, "focal\tgroup\tlanguage\tdistance")?;
    for (name, g) in [("same", &c.same), ("different", &c.different)] {
        for (code, dist) in g.codes.iter().zip(&g.distances) {
            writeln!(w, "{}\t{name}\t{code}\t{}", c.focal, fmt(*dist))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn parse_wordorder_report(text: &str) -> Result<(GroupComparison, Option<String>)> {
    let mut digest = None;
    let mut fields = std::collections::BTreeMap::new();
    let mut scatter: Vec<(String, String, f64)> = Vec::new();
    let mut in_scatter = false;
    let mut offset = 0;
    for (idx, raw) in text.lines().enumerate() {
        let (line_no, line_offset) = (idx + 1, offset);
        offset += raw.len() + 1;
        let err = |message: String| AtdError::Parse {
            line: line_no,
            offset: line_offset,
            message,
        };
        let line = raw.trim_end_matches('\r');
        if line.is_empty() || line == "field\tvalue" || line == "focal\tgroup\tlanguage\tdistance" {
            continue;
        }
        if line == "#scatter" {
            in_scatter = true;
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            if let Some(rest) = c.trim().strip_prefix(MANIFEST_TAG) {
                digest = rest.trim().strip_prefix("sha256=").map(str::to_string);
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if in_scatter {
            if cols.len() != 4 {
                return Err(err("scatter rows need 4 columns".into()));
            }
            let v = cols[3].parse().map_err(|_| err(format!("bad distance {:?}", cols[3])))?;
            scatter.push((cols[1].to_string(), cols[2].to_string(), v));
        } else {
            if cols.len() != 2 {
                return Err(err("field rows need 2 columns".into()));
            }
            fields.insert(cols[0].to_string(), (cols[1].to_string(), line_no, line_offset));
        }
    }
    let get = |k: &str| -> Result<&str> {
        fields.get(k).map(|(v, _, _)| v.as_str()).ok_or_else(|| AtdError::Parse {
            line: 0,
            offset: 0,
            message: format!("missing field {k}"),
        })
    };
    let num = |k: &str| -> Result<f64> {
        let v = get(k)?;
        v.parse().map_err(|_| {
            let (_, line, offset) = fields[k];
            AtdError::Parse {
                line,
                offset,
                message: format!("bad number for {k}: {v:?}"),
            }
        })
    };
    let group = |name: &str| -> Group {
        let (codes, dists) = scatter
            .iter()
            .filter(|(g, _, _)| g == name)
            .map(|(_, c, d)| (c.clone(), *d))
            .unzip();
        Group::new(codes, dists)
    };
    let list = |s: &str| -> Vec<String> {
        s.split(',').filter(|x| !x.is_empty()).map(str::to_string).collect()
    };
    let same = group("same");
    let different = group("different");
    if same.codes != list(get("same_codes")?) || different.codes != list(get("different_codes")?) {
        return Err(AtdError::Parse {
            line: 0,
            offset: 0,
            message: "scatter rows disagree with the group code lists".into(),
        });
    }
    let method = match get("p_method")? {
        "exact" => PMethod::Exact,
        "normal" => PMethod::Normal,
        m => return Err(AtdError::Invalid(format!("unknown p_method {m:?}"))),
    };
    let c = GroupComparison {
        focal: get("focal")?.into(),
        focal_order: get("focal_order")?.into(),
        excluded: list(get("excluded")?),
        u: num("u")?,
        sided: get("sided")?.parse()?,
        p: num("p")?,
        p_two: num("p_two")?,
        p_less: num("p_less")?,
        p_greater: num("p_greater")?,
        method,
        cohens_d: match get("cohens_d")? {
            "NA" => None,
            _ => Some(num("cohens_d")?),
        },
        same,
        different,
    };
    Ok((c, digest))
}
