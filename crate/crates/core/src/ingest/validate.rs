//! Invariant checks over ADIST dumps.

use super::adist::{read_dump_path, Dump, DumpRecords, Flavor};
use super::ROW_SUM_TOLERANCE;
use crate::error::Result;
use crate::stats::Registry;
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordKey {
    pub sentence_id: u32,
    pub language: String,
    pub layer: u32,
    pub head: Option<u32>,
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sentence={} language={} layer={}",
            self.sentence_id, self.language, self.layer
        )?;
        if let Some(h) = self.head {
            write!(f, " head={h}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Site {
    Manifest { language: Option<String> },
    Record(RecordKey),
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Manifest { language: None } => write!(f, "manifest"),
            Site::Manifest { language: Some(l) } => write!(f, "manifest language={l}"),
            Site::Record(k) => k.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    NegativeWeight { count: usize, min: f64 },
    NonFinite { count: usize },
    RowSumDrift { rows: usize, worst_sum: f64 },
    ShapeMismatch(String),
    MissingRecord,
    DuplicateRecord { line: usize },
    UnexpectedRecord(String),
    UnregisteredLanguage,
}

impl ViolationKind {
    fn rank(&self) -> u8 {
        match self {
            ViolationKind::NegativeWeight { .. } => 0,
            ViolationKind::NonFinite { .. } => 1,
            ViolationKind::RowSumDrift { .. } => 2,
            ViolationKind::ShapeMismatch(_) => 3,
            ViolationKind::MissingRecord => 4,
            ViolationKind::DuplicateRecord { .. } => 5,
            ViolationKind::UnexpectedRecord(_) => 6,
            ViolationKind::UnregisteredLanguage => 7,
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::NegativeWeight { count, min } => {
                write!(f, "{count} negative weight(s), min {min}")
            }
            ViolationKind::NonFinite { count } => write!(f, "{count} non-finite value(s)"),
            ViolationKind::RowSumDrift { rows, worst_sum } => {
                write!(f, "{rows} row(s) off unit sum, worst {worst_sum}")
            }
            ViolationKind::ShapeMismatch(s) => write!(f, "shape mismatch: {s}"),
            ViolationKind::MissingRecord => write!(f, "missing record"),
            ViolationKind::DuplicateRecord { line } => write!(f, "duplicate record at line {line}"),
            ViolationKind::UnexpectedRecord(s) => write!(f, "unexpected record: {s}"),
            ViolationKind::UnregisteredLanguage => write!(f, "language not in registry"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub site: Site,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.site, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub records: usize,
    /// Sorted by site, then violation kind.
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        let status = if self.is_ok() { "PASS" } else { "FAIL" };
        writeln!(
            f,
            "{status}: {} record(s), {} violation(s)",
            self.records,
            self.violations.len()
        )
    }
}

/// Non-negativity, finiteness and unit row sums for one record.
fn value_checks(rows: &[&[f64]]) -> Vec<ViolationKind> {
    let mut neg = 0usize;
    let mut min = f64::INFINITY;
    let mut nonfinite = 0usize;
    let mut drift = 0usize;
    let mut worst = 1.0f64;
    for row in rows {
        let mut sum = 0.0;
        for &w in *row {
            if !w.is_finite() {
                nonfinite += 1;
                continue;
            }
            if w < 0.0 {
                neg += 1;
                min = min.min(w);
            }
            sum += w;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            drift += 1;
            if (sum - 1.0).abs() > (worst - 1.0).abs() {
                worst = sum;
            }
        }
    }
    let mut out = Vec::new();
    if neg > 0 {
        out.push(ViolationKind::NegativeWeight { count: neg, min });
    }
    if nonfinite > 0 {
        out.push(ViolationKind::NonFinite { count: nonfinite });
    }
    if drift > 0 {
        out.push(ViolationKind::RowSumDrift {
            rows: drift,
            worst_sum: worst,
        });
    }
    out
}

struct Shape {
    key: RecordKey,
    line: usize,
    t_out: Option<usize>,
    t_in: Option<usize>,
    ragged: bool,
}

/// Check a parsed dump against its manifest (and optionally a language
/// registry). Value checks run in parallel; the report order is fixed.
pub fn validate_dump(dump: &Dump, registry: Option<&Registry>) -> ValidationReport {
    let m = &dump.manifest;
    let layers: BTreeSet<u32> = m.layers().into_iter().collect();
    let languages: BTreeSet<&str> = m.languages.iter().map(String::as_str).collect();
    let heads = m.heads.unwrap_or(1);

    let (shapes, mut violations): (Vec<Shape>, Vec<Violation>) = match &dump.records {
        DumpRecords::Reduced(records) => {
            let per: Vec<(Shape, Vec<Violation>)> = records
                .par_iter()
                .zip(dump.lines.par_iter())
                .map(|(r, &line)| {
                    let key = RecordKey {
                        sentence_id: r.sentence_id,
                        language: r.language.clone(),
                        layer: r.layer,
                        head: None,
                    };
                    let v = value_checks(&[&r.probs])
                        .into_iter()
                        .map(|kind| Violation {
                            site: Site::Record(key.clone()),
                            kind,
                        })
                        .collect();
                    let shape = Shape {
                        key,
                        line,
                        t_out: None,
                        t_in: Some(r.probs.len()),
                        ragged: r.probs.is_empty(),
                    };
                    (shape, v)
                })
                .collect();
            unzip_flat(per)
        }
        DumpRecords::Raw(records) => {
            let per: Vec<(Shape, Vec<Violation>)> = records
                .par_iter()
                .zip(dump.lines.par_iter())
                .map(|(r, &line)| {
                    let key = RecordKey {
                        sentence_id: r.sentence_id,
                        language: r.language.clone(),
                        layer: r.layer,
                        head: Some(r.head),
                    };
                    let rows: Vec<&[f64]> = r.rows.iter().map(Vec::as_slice).collect();
                    let v = value_checks(&rows)
                        .into_iter()
                        .map(|kind| Violation {
                            site: Site::Record(key.clone()),
                            kind,
                        })
                        .collect();
                    let t_in = r.rows.first().map(Vec::len);
                    let ragged = r.rows.is_empty()
                        || t_in == Some(0)
                        || r.rows.iter().any(|row| Some(row.len()) != t_in);
                    let shape = Shape {
                        key,
                        line,
                        t_out: Some(r.rows.len()),
                        t_in,
                        ragged,
                    };
                    (shape, v)
                })
                .collect();
            unzip_flat(per)
        }
    };

    // Structural checks in record-key order.
    let mut order: Vec<&Shape> = shapes.iter().collect();
    order.sort_by(|a, b| (&a.key, a.line).cmp(&(&b.key, b.line)));
    let mut seen: BTreeSet<&RecordKey> = BTreeSet::new();
    let mut t_in_ref: BTreeMap<u32, usize> = BTreeMap::new();
    let mut t_out_ref: BTreeMap<(u32, &str), usize> = BTreeMap::new();
    for s in &order {
        let site = || Site::Record(s.key.clone());
        if !seen.insert(&s.key) {
            violations.push(Violation {
                site: site(),
                kind: ViolationKind::DuplicateRecord { line: s.line },
            });
            continue;
        }
        let k = &s.key;
        if !(1..=m.sentence_count).contains(&k.sentence_id) {
            violations.push(Violation {
                site: site(),
                kind: ViolationKind::UnexpectedRecord(format!(
                    "sentence id outside 1..={}",
                    m.sentence_count
                )),
            });
        }
        if !languages.contains(k.language.as_str()) {
            violations.push(Violation {
                site: site(),
                kind: ViolationKind::UnexpectedRecord("language not declared in manifest".into()),
            });
        }
        if !layers.contains(&k.layer) {
            violations.push(Violation {
                site: site(),
                kind: ViolationKind::UnexpectedRecord("layer outside layer policy".into()),
            });
        }
        if let Some(h) = k.head {
            if h >= heads {
                violations.push(Violation {
                    site: site(),
                    kind: ViolationKind::UnexpectedRecord(format!("head outside 0..{heads}")),
                });
            }
        }
        if s.ragged {
            violations.push(Violation {
                site: site(),
                kind: ViolationKind::ShapeMismatch("empty or ragged rows".into()),
            });
            continue;
        }
        if let Some(t_in) = s.t_in {
            let r = *t_in_ref.entry(k.sentence_id).or_insert(t_in);
            if r != t_in {
                violations.push(Violation {
                    site: site(),
                    kind: ViolationKind::ShapeMismatch(format!(
                        "T_in {t_in} differs from {r} for this sentence"
                    )),
                });
            }
        }
        if let Some(t_out) = s.t_out {
            let r = *t_out_ref
                .entry((k.sentence_id, k.language.as_str()))
                .or_insert(t_out);
            if r != t_out {
                violations.push(Violation {
                    site: site(),
                    kind: ViolationKind::ShapeMismatch(format!(
                        "T_out {t_out} differs from {r} for this translation"
                    )),
                });
            }
        }
    }

    // Every manifest cell must be present exactly once.
    for sentence_id in m.sentence_ids() {
        for language in &m.languages {
            for &layer in &layers {
                let head_ids: Vec<Option<u32>> = match m.flavor {
                    Flavor::Reduced => vec![None],
                    Flavor::Raw => (0..heads).map(Some).collect(),
                };
                for head in head_ids {
                    let key = RecordKey {
                        sentence_id,
                        language: language.clone(),
                        layer,
                        head,
                    };
                    if !seen.contains(&key) {
                        violations.push(Violation {
                            site: Site::Record(key),
                            kind: ViolationKind::MissingRecord,
                        });
                    }
                }
            }
        }
    }

    if let Some(reg) = registry {
        for language in &m.languages {
            if reg.get(language).is_none() {
                violations.push(Violation {
                    site: Site::Manifest {
                        language: Some(language.clone()),
                    },
                    kind: ViolationKind::UnregisteredLanguage,
                });
            }
        }
    }

    violations.sort_by(|a, b| a.site.cmp(&b.site).then(a.kind.rank().cmp(&b.kind.rank())));
    ValidationReport {
        records: dump.records.len(),
        violations,
    }
}

fn unzip_flat(per: Vec<(Shape, Vec<Violation>)>) -> (Vec<Shape>, Vec<Violation>) {
    let mut shapes = Vec::with_capacity(per.len());
    let mut violations = Vec::new();
    for (s, v) in per {
        shapes.push(s);
        violations.extend(v);
    }
    (shapes, violations)
}

/// Parse and validate a dump file. Parse failures are returned as errors.
pub fn validate_path(path: impl AsRef<Path>, registry: Option<&Registry>) -> Result<ValidationReport> {
    let dump = read_dump_path(path)?;
    Ok(validate_dump(&dump, registry))
}
