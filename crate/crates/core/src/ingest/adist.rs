//! ADIST v1 attention dumps.
//!
//! Line-delimited JSON: the first non-blank line is the [`Manifest`], every
//! following line is one data record. REDUCED records carry a per-layer
//! head-consensus distribution, RAW records one `t_out × t_in` matrix per
//! (layer, head).

use super::{head_consensus, normalize, AttentionTensor, SourceDistribution, ROW_SUM_TOLERANCE};
use crate::error::{AtdError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

pub const FORMAT_NAME: &str = "ADIST";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Raw,
    Reduced,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerPolicy {
    All,
    Subset(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub flavor: Flavor,
    pub model_id: String,
    pub source_corpus_id: String,
    pub sentence_count: u32,
    pub languages: Vec<String>,
    /// Number of layers in the model.
    pub layer_count: u32,
    pub layer_policy: LayerPolicy,
    /// Heads per layer; required for RAW dumps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heads: Option<u32>,
}

impl Manifest {
    pub fn new(
        flavor: Flavor,
        model_id: impl Into<String>,
        source_corpus_id: impl Into<String>,
        sentence_count: u32,
        languages: Vec<String>,
        layer_count: u32,
    ) -> Self {
        Self {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            flavor,
            model_id: model_id.into(),
            source_corpus_id: source_corpus_id.into(),
            sentence_count,
            languages,
            layer_count,
            layer_policy: LayerPolicy::All,
            heads: None,
        }
    }

    /// Model layer indices retained by the layer policy, ascending.
    pub fn layers(&self) -> Vec<u32> {
        match &self.layer_policy {
            LayerPolicy::All => (0..self.layer_count).collect(),
            LayerPolicy::Subset(s) => {
                let mut s = s.clone();
                s.sort_unstable();
                s.dedup();
                s
            }
        }
    }

    pub fn sentence_ids(&self) -> std::ops::RangeInclusive<u32> {
        1..=self.sentence_count
    }

    pub fn layer_policy_label(&self) -> String {
        match &self.layer_policy {
            LayerPolicy::All => format!("all({})", self.layer_count),
            LayerPolicy::Subset(s) => {
                let ids: Vec<String> = s.iter().map(u32::to_string).collect();
                format!("subset({})", ids.join(","))
            }
        }
    }

    fn check_header(&self) -> std::result::Result<(), String> {
        if self.format != FORMAT_NAME {
            return Err(format!("expected format \"{FORMAT_NAME}\", got {:?}", self.format));
        }
        if self.version != FORMAT_VERSION {
            return Err(format!("unsupported ADIST version {}", self.version));
        }
        if self.flavor == Flavor::Raw && self.heads.is_none() {
            return Err("RAW manifest must declare `heads`".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedRecord {
    pub sentence_id: u32,
    pub language: String,
    pub layer: u32,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub sentence_id: u32,
    pub language: String,
    pub layer: u32,
    pub head: u32,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DumpRecords {
    Reduced(Vec<ReducedRecord>),
    Raw(Vec<RawRecord>),
}

impl DumpRecords {
    pub fn len(&self) -> usize {
        match self {
            DumpRecords::Reduced(r) => r.len(),
            DumpRecords::Raw(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub manifest: Manifest,
    pub records: DumpRecords,
    /// 1-based source line of each record, parallel to `records`.
    pub lines: Vec<usize>,
}

impl Dump {
    pub fn reduced(manifest: Manifest, records: Vec<ReducedRecord>) -> Self {
        let lines = (2..records.len() + 2).collect();
        Self {
            manifest,
            records: DumpRecords::Reduced(records),
            lines,
        }
    }

    pub fn raw(manifest: Manifest, records: Vec<RawRecord>) -> Self {
        let lines = (2..records.len() + 2).collect();
        Self {
            manifest,
            records: DumpRecords::Raw(records),
            lines,
        }
    }

    /// Reduce every (sentence, language, layer) to a [`SourceDistribution`].
    ///
    /// REDUCED records are taken as-is, renormalized only when widened
    /// 32-bit values drift from unit mass. RAW records are grouped into
    /// tensors and passed through [`head_consensus`]. Records are returned
    /// sorted by (language, sentence, layer).
    pub fn distributions(&self) -> Result<Vec<SourceDistribution>> {
        let mut out = match &self.records {
            DumpRecords::Reduced(records) => records
                .iter()
                .map(reduced_to_distribution)
                .collect::<Result<Vec<_>>>()?,
            DumpRecords::Raw(records) => self.reduce_raw(records)?,
        };
        out.sort_by(|a, b| {
            (&a.language, a.sentence_id, a.layer).cmp(&(&b.language, b.sentence_id, b.layer))
        });
        Ok(out)
    }

    fn reduce_raw(&self, records: &[RawRecord]) -> Result<Vec<SourceDistribution>> {
        let heads = self.manifest.heads.unwrap_or(0) as usize;
        let layers = self.manifest.layers();
        let mut grouped: BTreeMap<(&str, u32), BTreeMap<(u32, u32), &RawRecord>> = BTreeMap::new();
        for r in records {
            grouped
                .entry((r.language.as_str(), r.sentence_id))
                .or_default()
                .insert((r.layer, r.head), r);
        }
        let mut out = Vec::new();
        for ((language, sentence_id), cells) in grouped {
            let first = cells.values().next().expect("non-empty group");
            let t_out = first.rows.len();
            let t_in = first.rows.first().map_or(0, Vec::len);
            let mut weights = Vec::with_capacity(layers.len() * heads * t_out * t_in);
            for &layer in &layers {
                for head in 0..heads as u32 {
                    let rec = cells.get(&(layer, head)).ok_or_else(|| {
                        AtdError::Shape(format!(
                            "missing RAW record for sentence {sentence_id}, language {language}, layer {layer}, head {head}"
                        ))
                    })?;
                    if rec.rows.len() != t_out || rec.rows.iter().any(|r| r.len() != t_in) {
                        return Err(AtdError::Shape(format!(
                            "sentence {sentence_id}, language {language}, layer {layer}, head {head}: expected {t_out}x{t_in} rows"
                        )));
                    }
                    weights.extend(rec.rows.iter().flatten().copied());
                }
            }
            let tensor = AttentionTensor::new(
                sentence_id,
                language,
                layers.clone(),
                heads,
                t_out,
                t_in,
                weights,
            )?;
            for slot in 0..tensor.layers() {
                out.push(head_consensus(&tensor, slot)?);
            }
        }
        Ok(out)
    }
}

fn reduced_to_distribution(r: &ReducedRecord) -> Result<SourceDistribution> {
    let sum: f64 = r.probs.iter().sum();
    if r.probs.is_empty()
        || r.probs.iter().any(|p| !p.is_finite() || *p < 0.0)
        || (sum - 1.0).abs() > ROW_SUM_TOLERANCE
    {
        return Err(AtdError::NotNormalized { sum });
    }
    let probs = if (sum - 1.0).abs() > 1e-12 {
        normalize(&r.probs).ok_or(AtdError::NotNormalized { sum })?
    } else {
        r.probs.clone()
    };
    Ok(SourceDistribution {
        sentence_id: r.sentence_id,
        language: r.language.clone(),
        layer: r.layer,
        probs,
    })
}

/// Parse an ADIST v1 dump. Any unparseable line aborts with its line number
/// and byte offset.
pub fn read_dump<R: BufRead>(reader: R) -> Result<Dump> {
    let mut manifest: Option<Manifest> = None;
    let mut reduced = Vec::new();
    let mut raw = Vec::new();
    let mut lines = Vec::new();
    let mut offset = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line_offset = offset;
        offset += line.len() + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| AtdError::Parse {
            line: line_no,
            offset: line_offset + e.column().saturating_sub(1),
            message: e.to_string(),
        };
        match &manifest {
            None => {
                let m: Manifest = serde_json::from_str(text).map_err(parse_err)?;
                m.check_header().map_err(|message| AtdError::Parse {
                    line: line_no,
                    offset: line_offset,
                    message,
                })?;
                manifest = Some(m);
            }
            Some(m) => {
                match m.flavor {
                    Flavor::Reduced => reduced.push(serde_json::from_str(text).map_err(parse_err)?),
                    Flavor::Raw => raw.push(serde_json::from_str(text).map_err(parse_err)?),
                }
                lines.push(line_no);
            }
        }
    }
    let manifest = manifest.ok_or(AtdError::Parse {
        line: 1,
        offset: 0,
        message: "missing manifest record".into(),
    })?;
    let records = match manifest.flavor {
        Flavor::Reduced => DumpRecords::Reduced(reduced),
        Flavor::Raw => DumpRecords::Raw(raw),
    };
    Ok(Dump {
        manifest,
        records,
        lines,
    })
}

pub fn read_dump_path(path: impl AsRef<std::path::Path>) -> Result<Dump> {
    let file = std::fs::File::open(path)?;
    read_dump(std::io::BufReader::new(file))
}

pub fn write_dump<W: Write>(mut w: W, dump: &Dump) -> Result<()> {
    serde_json::to_writer(&mut w, &dump.manifest)?;
    w.write_all(b"\n")?;
    match &dump.records {
        DumpRecords::Reduced(records) => {
            for r in records {
                serde_json::to_writer(&mut w, r)?;
                w.write_all(b"\n")?;
            }
        }
        DumpRecords::Raw(records) => {
            for r in records {
                serde_json::to_writer(&mut w, r)?;
                w.write_all(b"\n")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
