//! Per-language translation quality and the retention threshold.
//!
//! Text layout (tab-separated, `#` lines are comments):
//!
//! ```text
//! language    mean    retained
//! fr          0.95    true
//! #sentences
//! sentence_id language score selected
//! 1           fr       1     true
//! ```

use crate::error::{AtdError, Result};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageQuality {
    pub language: String,
    pub mean: f64,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceScore {
    pub sentence_id: u32,
    pub language: String,
    pub score: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QualityTable {
    pub threshold: Option<f64>,
    pub languages: Vec<LanguageQuality>,
    pub sentences: Vec<SentenceScore>,
}

/// Languages whose mean score strictly exceeds `threshold`, in table order.
pub fn filter_languages(q: &QualityTable, threshold: f64) -> Vec<String> {
    q.languages
        .iter()
        .filter(|l| l.mean > threshold)
        .map(|l| l.language.clone())
        .collect()
}

impl QualityTable {
    pub fn validate(&self) -> Result<()> {
        for l in &self.languages {
            if !(0.0..=1.0).contains(&l.mean) {
                return Err(AtdError::Quality(format!(
                    "mean {} for {} outside [0, 1]",
                    l.mean, l.language
                )));
            }
        }
        for s in &self.sentences {
            if ![0.0, 0.5, 1.0].contains(&s.score) {
                return Err(AtdError::Quality(format!(
                    "score {} for sentence {} ({}) not in {{0, 0.5, 1}}",
                    s.score, s.sentence_id, s.language
                )));
            }
        }
        Ok(())
    }

    /// Selected sentence ids per language, if the table lists sentences.
    pub fn selected_sentences(&self) -> Option<BTreeMap<String, BTreeSet<u32>>> {
        if self.sentences.is_empty() {
            return None;
        }
        let mut out: BTreeMap<String, BTreeSet<u32>> = BTreeMap::new();
        for s in self.sentences.iter().filter(|s| s.selected) {
            out.entry(s.language.clone()).or_default().insert(s.sentence_id);
        }
        Some(out)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = QualityTable::default();
        let mut in_sentences = false;
        let mut header_seen = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if comment == "sentences" {
                    in_sentences = true;
                    header_seen = false;
                } else if let Some(t) = comment.strip_prefix("threshold") {
                    table.threshold = Some(parse_num(t.trim(), line_no)?);
                }
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if !header_seen {
                header_seen = true;
                let expect: &[&str] = if in_sentences {
                    &["sentence_id", "language", "score", "selected"]
                } else {
                    &["language", "mean", "retained"]
                };
                if cols != expect {
                    return Err(AtdError::Parse {
                        line: line_no,
                        offset: 0,
                        message: format!("expected header {}", expect.join("\t")),
                    });
                }
                continue;
            }
            if in_sentences {
                if cols.len() != 4 {
                    return Err(bad_cols(line_no, 4));
                }
                table.sentences.push(SentenceScore {
                    sentence_id: cols[0].parse().map_err(|_| bad_value(line_no, cols[0]))?,
                    language: cols[1].to_string(),
                    score: parse_num(cols[2], line_no)?,
                    selected: parse_bool(cols[3], line_no)?,
                });
            } else {
                if cols.len() != 3 {
                    return Err(bad_cols(line_no, 3));
                }
                table.languages.push(LanguageQuality {
                    language: cols[0].to_string(),
                    mean: parse_num(cols[1], line_no)?,
                    retained: parse_bool(cols[2], line_no)?,
                });
            }
        }
        table.validate()?;
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(t) = self.threshold {
            let _ = writeln!(s, "#threshold {t}");
        }
        s.push_str("language\tmean\tretained\n");
        for l in &self.languages {
            let _ = writeln!(s, "{}\t{}\t{}", l.language, l.mean, l.retained);
        }
        if !self.sentences.is_empty() {
            s.push_str("#sentences\nsentence_id\tlanguage\tscore\tselected\n");
            for r in &self.sentences {
                let _ = writeln!(s, "{}\t{}\t{}\t{}", r.sentence_id, r.language, r.score, r.selected);
            }
        }
        s
    }
}

fn parse_num(s: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| bad_value(line, s))
}

fn parse_bool(s: &str, line: usize) -> Result<bool> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad_value(line, s)),
    }
}

fn bad_value(line: usize, s: &str) -> AtdError {
    AtdError::Parse {
        line,
        offset: 0,
        message: format!("bad value {s:?}"),
    }
}

fn bad_cols(line: usize, n: usize) -> AtdError {
    AtdError::Parse {
        line,
        offset: 0,
        message: format!("expected {n} tab-separated columns"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(means: &[(&str, f64)]) -> QualityTable {
        QualityTable {
            threshold: None,
            languages: means
                .iter()
                .map(|(l, m)| LanguageQuality {
                    language: l.to_string(),
                    mean: *m,
                    retained: false,
                })
                .collect(),
            sentences: vec![],
        }
    }

    #[test]
    fn all_perfect_retained() {
        let q = table(&[("a", 1.0), ("b", 1.0)]);
        assert_eq!(filter_languages(&q, 0.2), ["a", "b"]);
    }

    #[test]
    fn threshold_is_strict() {
        let q = table(&[("a", 0.1), ("b", 0.2), ("c", 0.3)]);
        assert_eq!(filter_languages(&q, 0.2), ["c"]);
    }

    #[test]
    fn text_round_trip() {
        let mut q = table(&[("fr", 0.75), ("am", 0.125)]);
        q.threshold = Some(0.2);
        q.sentences = vec![
            SentenceScore {
                sentence_id: 1,
                language: "fr".into(),
                score: 1.0,
                selected: true,
            },
            SentenceScore {
                sentence_id: 2,
                language: "fr".into(),
                score: 0.5,
                selected: false,
            },
        ];
        let back = QualityTable::parse(&q.to_text()).unwrap();
        assert_eq!(back, q);
        let sel = back.selected_sentences().unwrap();
        assert_eq!(sel["fr"], BTreeSet::from([1]));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(QualityTable::parse("language\tmean\tretained\nfr\t1.5\ttrue\n").is_err());
        let text = "language\tmean\tretained\n#sentences\nsentence_id\tlanguage\tscore\tselected\n1\tfr\t0.7\ttrue\n";
        assert!(matches!(QualityTable::parse(text), Err(AtdError::Quality(_))));
        assert!(QualityTable::parse("lang\tmean\n").is_err());
    }
}
