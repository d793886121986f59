use super::{DistanceMatrix, PairCount, Provenance};
use crate::error::{AtdError, Result};
use crate::ingest::{Dump, SourceDistribution};
use crate::transport::DistanceKind;
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};

/// Distributions of one language keyed by (sentence id, layer).
pub type LayerMap = BTreeMap<(u32, u32), Vec<f64>>;

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// All reduced distributions of a dump, grouped by language.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub model_id: String,
    pub layer_policy: String,
    pub sentence_ids: Vec<u32>,
    pub layers: Vec<u32>,
    pub languages: Vec<String>,
    pub distributions: BTreeMap<String, LayerMap>,
}

impl Corpus {
    pub fn from_dump(dump: &Dump) -> Result<Self> {
        let m = &dump.manifest;
        Ok(Self::from_distributions(
            m.model_id.clone(),
            m.layer_policy_label(),
            m.sentence_ids().collect(),
            m.layers(),
            m.languages.clone(),
            dump.distributions()?,
        ))
    }

    pub fn from_distributions(
        model_id: String,
        layer_policy: String,
        sentence_ids: Vec<u32>,
        layers: Vec<u32>,
        languages: Vec<String>,
        dists: Vec<SourceDistribution>,
    ) -> Self {
        let mut distributions: BTreeMap<String, LayerMap> =
            languages.iter().map(|l| (l.clone(), LayerMap::new())).collect();
        for d in dists {
            distributions
                .entry(d.language)
                .or_default()
                .insert((d.sentence_id, d.layer), d.probs);
        }
        Self {
            model_id,
            layer_policy,
            sentence_ids,
            layers,
            languages,
            distributions,
        }
    }

    fn missing_cells(&self, language: &str, sentences: &[u32]) -> usize {
        let map = self.distributions.get(language);
        sentences
            .iter()
            .flat_map(|&s| self.layers.iter().map(move |&l| (s, l)))
            .filter(|k| map.is_none_or(|m| !m.contains_key(k)))
            .count()
    }
}

/// Mean per-(sentence, layer) distance between two languages. Both maps must
/// cover the same keys; the sum runs in key order (sentence, then layer).
pub fn atd_pair(a: &LayerMap, b: &LayerMap, kind: DistanceKind) -> Result<f64> {
    let missing: Vec<String> = a
        .keys()
        .filter(|k| !b.contains_key(k))
        .chain(b.keys().filter(|k| !a.contains_key(k)))
        .map(|(s, l)| format!("(sentence {s}, layer {l})"))
        .collect();
    if !missing.is_empty() {
        return Err(AtdError::KeyMismatch { missing });
    }
    if a.is_empty() {
        return Err(AtdError::Invalid("no (sentence, layer) cells to compare".into()));
    }
    mean_over(a.keys().copied(), a, b, kind)
}

fn mean_over(
    keys: impl Iterator<Item = (u32, u32)>,
    a: &LayerMap,
    b: &LayerMap,
    kind: DistanceKind,
) -> Result<f64> {
    let mut acc = KahanSum::default();
    let mut count = 0usize;
    for k in keys {
        let (p, q) = match (a.get(&k), b.get(&k)) {
            (Some(p), Some(q)) => (p, q),
            _ => {
                return Err(AtdError::KeyMismatch {
                    missing: vec![format!("(sentence {}, layer {})", k.0, k.1)],
                })
            }
        };
        acc.add(kind.distance(p, q)?);
        count += 1;
    }
    if count == 0 {
        return Err(AtdError::Invalid("no (sentence, layer) cells to compare".into()));
    }
    Ok(acc.value() / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    #[default]
    Strict,
    Drop,
}

#[derive(Debug, Clone, Default)]
pub struct MatrixConfig {
    pub kind: DistanceKind,
    pub missing: MissingPolicy,
    /// Languages to keep (e.g. from a quality filter); `None` keeps all.
    pub languages: Option<Vec<String>>,
    /// Per-language selected sentence ids; pairs use the intersection.
    pub selected_sentences: Option<BTreeMap<String, BTreeSet<u32>>>,
}

#[derive(Debug, Clone)]
pub struct MatrixBuild {
    pub matrix: DistanceMatrix,
    pub dropped: Vec<String>,
    pub warnings: Vec<String>,
}

/// Average transport distances over shared (sentence, layer) cells for every
/// language pair. Pairs are evaluated in parallel; each pair's sum runs in a
/// fixed order, so the result does not depend on the thread count.
pub fn build_matrix(corpus: &Corpus, cfg: &MatrixConfig) -> Result<MatrixBuild> {
    crate::transport::log_distance_kind_note(cfg.kind);
    let mut candidates: Vec<String> = match &cfg.languages {
        Some(keep) => {
            let keep: BTreeSet<&str> = keep.iter().map(String::as_str).collect();
            corpus
                .languages
                .iter()
                .filter(|l| keep.contains(l.as_str()))
                .cloned()
                .collect()
        }
        None => corpus.languages.clone(),
    };

    let sentences_of = |lang: &str| -> Vec<u32> {
        match cfg.selected_sentences.as_ref().and_then(|s| s.get(lang)) {
            Some(sel) => sel.iter().copied().collect(),
            None => corpus.sentence_ids.clone(),
        }
    };

    let mut dropped = Vec::new();
    let mut warnings = Vec::new();
    let mut kept = Vec::with_capacity(candidates.len());
    for lang in candidates.drain(..) {
        let missing = corpus.missing_cells(&lang, &sentences_of(&lang));
        if missing == 0 {
            kept.push(lang);
            continue;
        }
        match cfg.missing {
            MissingPolicy::Strict => {
                return Err(AtdError::MissingRecords {
                    language: lang,
                    count: missing,
                })
            }
            MissingPolicy::Drop => {
                warnings.push(format!("dropped {lang}: {missing} missing record(s)"));
                dropped.push(lang);
            }
        }
    }

    let n = kept.len();
    let selections: Vec<Vec<u32>> = kept.iter().map(|l| sentences_of(l)).collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let empty = LayerMap::new();
    let cells: Vec<(f64, usize)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let shared: Vec<u32> = intersect(&selections[i], &selections[j]);
            if shared.is_empty() {
                return Err(AtdError::Invalid(format!(
                    "languages {} and {} share no selected sentences",
                    kept[i], kept[j]
                )));
            }
            let a = corpus.distributions.get(&kept[i]).unwrap_or(&empty);
            let b = corpus.distributions.get(&kept[j]).unwrap_or(&empty);
            let keys = shared
                .iter()
                .flat_map(|&s| corpus.layers.iter().map(move |&l| (s, l)));
            Ok((mean_over(keys, a, b, cfg.kind)?, shared.len()))
        })
        .collect::<Result<_>>()?;

    let mut values = BTreeMap::new();
    let mut pair_sentences = Vec::with_capacity(pairs.len());
    for (&(i, j), &(v, s)) in pairs.iter().zip(&cells) {
        values.insert((i, j), v);
        pair_sentences.push(PairCount {
            a: kept[i].clone(),
            b: kept[j].clone(),
            sentences: s,
        });
    }
    let mut matrix = DistanceMatrix::from_fn(kept, |i, j| values[&(i, j)])?;
    matrix.provenance = Provenance {
        model_id: corpus.model_id.clone(),
        sentence_count: selections.iter().map(Vec::len).max().unwrap_or(0),
        layer_policy: corpus.layer_policy.clone(),
        distance_kind: cfg.kind,
        pair_sentences,
    };
    Ok(MatrixBuild {
        matrix,
        dropped,
        warnings,
    })
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let b: BTreeSet<u32> = b.iter().copied().collect();
    a.iter().copied().filter(|s| b.contains(s)).collect()
}
