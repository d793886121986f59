//! Matrix text table and structured JSON file.
//!
//! The text table has a header row `language <code>...` followed by one row
//! per language with 17 significant digits per value. Lines starting with
//! `#` are comments; the run-manifest digest travels in one of them.

use super::{DistanceMatrix, Provenance};
use crate::error::{AtdError, Result};
use crate::report::MANIFEST_TAG;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub matrix: DistanceMatrix,
    pub manifest_digest: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonMatrix {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    manifest_digest: Option<String>,
    provenance: Provenance,
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
}

pub(crate) fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix_tsv<W: Write>(mut w: W, d: &DistanceMatrix, digest: Option<&str>) -> Result<()> {
    if let Some(digest) = digest {
        writeln!(w, "# {MANIFEST_TAG} sha256={digest}")?;
    }
    let p = &d.provenance;
    writeln!(
        w,
        "# model={} sentences={} layers={} distance={}",
        if p.model_id.is_empty() { "-" } else { &p.model_id },
        p.sentence_count,
        if p.layer_policy.is_empty() { "-" } else { &p.layer_policy },
        p.distance_kind
    )?;
    write!(w, "language")?;
    for l in d.labels() {
        write!(w, "\t{l}")?;
    }
    writeln!(w)?;
    for (i, l) in d.labels().iter().enumerate() {
        write!(w, "{l}")?;
        for &v in d.row(i) {
            write!(w, "\t{}", fmt_value(v))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_json<W: Write>(mut w: W, d: &DistanceMatrix, digest: Option<&str>) -> Result<()> {
    let doc = JsonMatrix {
        manifest_digest: digest.map(str::to_string),
        provenance: d.provenance.clone(),
        labels: d.labels().to_vec(),
        values: d.rows(),
    };
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    Ok(())
}

/// Parse either layout; JSON is recognized by a leading `{`.
pub fn parse_matrix(text: &str) -> Result<MatrixFile> {
    if text.trim_start().starts_with('{') {
        let doc: JsonMatrix = serde_json::from_str(text)?;
        let mut matrix = DistanceMatrix::from_rows(doc.labels, &doc.values)?;
        matrix.provenance = doc.provenance;
        return Ok(MatrixFile {
            matrix,
            manifest_digest: doc.manifest_digest,
        });
    }
    let mut digest = None;
    let mut labels: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    let mut offset = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line_offset = offset;
        offset += raw.len() + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            if let Some(rest) = c.trim().strip_prefix(MANIFEST_TAG) {
                digest = rest.trim().strip_prefix("sha256=").map(str::to_string);
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        match &labels {
            None => {
                if cols.first() != Some(&"language") {
                    return Err(AtdError::Parse {
                        line: line_no,
                        offset: line_offset,
                        message: "expected header row starting with `language`".into(),
                    });
                }
                labels = Some(cols[1..].iter().map(|s| s.to_string()).collect());
            }
            Some(ls) => {
                if cols.len() != ls.len() + 1 {
                    return Err(AtdError::Parse {
                        line: line_no,
                        offset: line_offset,
                        message: format!("expected {} columns, got {}", ls.len() + 1, cols.len()),
                    });
                }
                let expect = ls.get(rows.len()).map(String::as_str);
                if expect != Some(cols[0]) {
                    return Err(AtdError::Parse {
                        line: line_no,
                        offset: line_offset,
                        message: format!("row label {:?} does not match header order", cols[0]),
                    });
                }
                let row = cols[1..]
                    .iter()
                    .map(|s| {
                        s.trim().parse::<f64>().map_err(|_| AtdError::Parse {
                            line: line_no,
                            offset: line_offset,
                            message: format!("bad number {s:?}"),
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                rows.push(row);
            }
        }
    }
    let labels = labels.ok_or(AtdError::Parse {
        line: 1,
        offset: 0,
        message: "empty matrix file".into(),
    })?;
    Ok(MatrixFile {
        matrix: DistanceMatrix::from_rows(labels, &rows)?,
        manifest_digest: digest,
    })
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<MatrixFile> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn tsv_and_json_round_trip(vals in proptest::collection::vec(0.0f64..100.0, 10)) {
            let labels: Vec<String> = ["a", "b", "c", "d", "e"].iter().map(|s| s.to_string()).collect();
            let mut k = 0;
            let d = DistanceMatrix::from_fn(labels, |_, _| { k += 1; vals[k - 1] }).unwrap();
            let mut buf = Vec::new();
            write_matrix_tsv(&mut buf, &d, Some("abc")).unwrap();
            let back = parse_matrix(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back.manifest_digest.as_deref(), Some("abc"));
            prop_assert_eq!(back.matrix.rows(), d.rows());
            let mut buf = Vec::new();
            write_matrix_json(&mut buf, &d, None).unwrap();
            let back = parse_matrix(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back.matrix, d);
        }
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_value(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(fmt_value(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn malformed_tables() {
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("lang\ta\n").is_err());
        assert!(parse_matrix("language\ta\tb\nb\t0\t1\na\t1\t0\n").is_err());
        assert!(parse_matrix("language\ta\tb\na\t0\tx\nb\t1\t0\n").is_err());
    }
}
