//! Newick text. Comments in square brackets are skipped by the parser and
//! returned separately; missing branch lengths read as zero.

use super::PhyloTree;
use crate::error::{AtdError, Result};

/// Write rooted at the most recently created internal node. Internal labels
/// are not written.
pub fn to_newick(tree: &PhyloTree) -> String {
    let root = (0..tree.node_count())
        .rev()
        .find(|&i| !tree.is_leaf(i))
        .unwrap_or(0);
    let mut out = String::new();
    write_node(tree, root, usize::MAX, &mut out);
    out.push(';');
    out
}

/// Same as [`to_newick`] with a leading `[comment]`.
pub fn to_newick_with_comment(tree: &PhyloTree, comment: &str) -> String {
    format!("[{comment}]{}", to_newick(tree))
}

fn write_node(tree: &PhyloTree, v: usize, parent: usize, out: &mut String) {
    let children: Vec<(usize, f64)> = tree
        .neighbors(v)
        .iter()
        .copied()
        .filter(|&(w, _)| w != parent)
        .collect();
    if !children.is_empty() {
        out.push('(');
        for (k, (w, len)) in children.into_iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write_node(tree, w, v, out);
            out.push_str(&format!(":{len}"));
        }
        out.push(')');
    }
    if tree.is_leaf(v) {
        push_label(tree.label(v), out);
    }
}

fn push_label(label: &str, out: &mut String) {
    let plain = !label.is_empty()
        && !label
            .chars()
            .any(|c| c.is_whitespace() || "()[]':;,".contains(c));
    if plain {
        out.push_str(label);
    } else {
        out.push('\'');
        out.push_str(&label.replace('\'', "''"));
        out.push('\'');
    }
}

pub fn from_newick(text: &str) -> Result<PhyloTree> {
    parse_newick(text).map(|(t, _)| t)
}

/// Parse one tree and return it with the bracket comments found.
pub fn parse_newick(text: &str) -> Result<(PhyloTree, Vec<String>)> {
    let mut p = Parser {
        s: text.as_bytes(),
        text,
        pos: 0,
        tree: PhyloTree::empty(),
        comments: Vec::new(),
        internal: 0,
    };
    p.skip();
    if p.pos >= p.s.len() {
        return Err(p.err("empty input"));
    }
    let (root, _) = p.subtree(0)?;
    p.skip();
    if p.peek() != Some(b';') {
        return Err(p.err("expected `;`"));
    }
    p.pos += 1;
    p.skip();
    if p.pos < p.s.len() {
        return Err(p.err("trailing text after `;`"));
    }
    let _ = root;
    p.tree.check().map_err(|e| AtdError::Newick {
        pos: text.len(),
        message: e.to_string(),
    })?;
    Ok((p.tree, p.comments))
}

struct Parser<'a> {
    s: &'a [u8],
    text: &'a str,
    pos: usize,
    tree: PhyloTree,
    comments: Vec<String>,
    internal: usize,
}

const MAX_DEPTH: usize = 10_000;

impl Parser<'_> {
    fn err(&self, message: &str) -> AtdError {
        AtdError::Newick {
            pos: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    /// Skip whitespace and bracket comments.
    fn skip(&mut self) {
        loop {
            while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
                self.pos += 1;
            }
            if self.peek() != Some(b'[') {
                return;
            }
            let start = self.pos + 1;
            match self.text[start..].find(']') {
                Some(off) => {
                    self.comments.push(self.text[start..start + off].to_string());
                    self.pos = start + off + 1;
                }
                None => {
                    // leave pos at '[' so the caller reports it
                    return;
                }
            }
        }
    }

    fn subtree(&mut self, depth: usize) -> Result<(usize, f64)> {
        if depth > MAX_DEPTH {
            return Err(self.err("nesting too deep"));
        }
        self.skip();
        let mut children = Vec::new();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            loop {
                children.push(self.subtree(depth + 1)?);
                self.skip();
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.err("expected `,` or `)`")),
                }
            }
        }
        self.skip();
        let label = self.label()?;
        self.skip();
        let length = if self.peek() == Some(b':') {
            self.pos += 1;
            self.skip();
            self.number()?
        } else {
            0.0
        };
        let node = if children.is_empty() {
            if label.is_empty() {
                return Err(self.err("expected a label or `(`"));
            }
            self.tree.push_node(label)
        } else {
            self.internal += 1;
            let name = if label.is_empty() {
                format!("u{}", self.internal)
            } else {
                label
            };
            let v = self.tree.push_node(name);
            for (c, len) in children {
                self.tree.push_edge(v, c, len);
            }
            v
        };
        Ok((node, length))
    }

    fn label(&mut self) -> Result<String> {
        if self.peek() == Some(b'\'') {
            let start = self.pos;
            self.pos += 1;
            let mut out = String::new();
            loop {
                let rest = &self.text[self.pos..];
                let Some(off) = rest.find('\'') else {
                    self.pos = start;
                    return Err(self.err("unterminated quoted label"));
                };
                out.push_str(&rest[..off]);
                self.pos += off + 1;
                if self.peek() == Some(b'\'') {
                    out.push('\'');
                    self.pos += 1;
                } else {
                    return Ok(out);
                }
            }
        }
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() || b"()[]':;,".contains(&c) {
                break;
            }
            self.pos += 1;
        }
        Ok(self.text[start..self.pos].to_string())
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || b"+-.eE".contains(&c) || c.is_ascii_alphabetic() {
                self.pos += 1;
            } else {
                break;
            }
        }
        let tok = &self.text[start..self.pos];
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
            _ => {
                self.pos = start;
                Err(self.err(&format!("bad branch length {tok:?}")))
            }
        }
    }
}
