//! Plain-text model files.
//!
//! ```text
//! n=3
//! E: (1,2);(2,3);(3,1)
//! Prec:
//! ```
//!
//! The first line gives the vertex count; each following line lists one
//! predicate's tuples with 1-based vertices, separated by `;`. Serialization
//! prints every predicate of the signature in signature order and tuples in
//! lexicographic order, so printing a parsed canonical file reproduces it
//! byte for byte.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::relational::{Model, Signature};

pub fn to_text(m: &Model) -> String {
    let mut out = format!("n={}\n", m.n());
    for p in 0..m.signature().len() {
        let tuples: Vec<String> = m
            .tuples(p)
            .iter()
            .map(|t| {
                let vs: Vec<String> = t.iter().map(|v| (v + 1).to_string()).collect();
                format!("({})", vs.join(","))
            })
            .collect();
        if tuples.is_empty() {
            out.push_str(&format!("{}:\n", m.signature().name(p)));
        } else {
            out.push_str(&format!(
                "{}: {}\n",
                m.signature().name(p),
                tuples.join(";")
            ));
        }
    }
    out
}

fn syntax(pos: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        pos,
        msg: msg.into(),
    }
}

type RawLine = (usize, String, Vec<(usize, Vec<usize>)>);

fn parse_lines(text: &str) -> Result<(usize, Vec<RawLine>)> {
    let mut n = None;
    let mut lines = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let body = line.trim_end();
        if body.trim().is_empty() || body.trim_start().starts_with('#') {
            continue;
        }
        if n.is_none() {
            let value = body
                .trim()
                .strip_prefix("n=")
                .ok_or_else(|| syntax(start, "first line must be `n=<int>`"))?;
            n = Some(
                value
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| syntax(start + 2, "vertex count is not an integer"))?,
            );
            continue;
        }
        let colon = body
            .find(':')
            .ok_or_else(|| syntax(start, "expected `NAME: (a,b,...);...`"))?;
        let name = body[..colon].trim().to_string();
        let mut tuples = Vec::new();
        let rest = &body[colon + 1..];
        let mut pos = start + colon + 1;
        for chunk in rest.split(';') {
            let chunk_start = pos + (chunk.len() - chunk.trim_start().len());
            pos += chunk.len() + 1;
            let trimmed = chunk.trim();
            if trimmed.is_empty() {
                if rest.trim().is_empty() {
                    continue;
                }
                return Err(syntax(chunk_start, "empty tuple entry"));
            }
            let inner = trimmed
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| syntax(chunk_start, "tuples must be written `(a,b,...)`"))?;
            let vs = inner
                .split(',')
                .map(|v| v.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| syntax(chunk_start, "vertex is not an integer"))?;
            tuples.push((chunk_start, vs));
        }
        lines.push((start, name, tuples));
    }
    let n = n.ok_or_else(|| syntax(0, "missing `n=<int>` line"))?;
    Ok((n, lines))
}

/// Parses a model over a known signature. Predicates absent from the file
/// are empty.
pub fn parse_model(text: &str, sig: Arc<Signature>) -> Result<Model> {
    let (n, lines) = parse_lines(text)?;
    let mut m = Model::empty(sig.clone(), n);
    let mut seen = vec![false; sig.len()];
    for (start, name, tuples) in lines {
        let p = sig.lookup(&name)?;
        if std::mem::replace(&mut seen[p], true) {
            return Err(syntax(start, format!("predicate `{name}` listed twice")));
        }
        for (pos, t) in tuples {
            if t.iter().any(|&v| v == 0 || v > n) {
                return Err(syntax(pos, format!("vertex outside 1..{n}")));
            }
            let zero: Vec<usize> = t.iter().map(|v| v - 1).collect();
            m.insert(p, &zero).map_err(|e| syntax(pos, e.to_string()))?;
        }
    }
    Ok(m)
}

/// Parses a model and infers its signature from the file; every predicate
/// needs at least one tuple so its arity is known.
pub fn parse_model_infer(text: &str) -> Result<Model> {
    let (_, lines) = parse_lines(text)?;
    let mut preds = Vec::new();
    for (start, name, tuples) in &lines {
        let arity = tuples
            .first()
            .map(|(_, t)| t.len())
            .ok_or_else(|| syntax(*start, format!("cannot infer the arity of empty `{name}`")))?;
        preds.push((name.clone(), arity));
    }
    let sig = Arc::new(Signature::new(preds)?);
    parse_model(text, sig)
}
