//! Plain-text model files.
//!
//! ```text
//! fairnoise-model 1
//! dimension <d>
//! members <k>
//! <weight> <intercept> <coef_1> … <coef_d>     (k lines)
//! ```
//!
//! Numbers are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::FairClassifier;
use crate::error::{Error, Result};
use crate::scorer::LinearScorer;

const MAGIC: &str = "fairnoise-model 1";

pub fn write_model(model: &FairClassifier) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "dimension {}", model.dimension());
    let _ = writeln!(out, "members {}", model.members().len());
    for (w, s) in model.members() {
        let _ = write!(out, "{w:.16e} {:.16e}", s.intercept);
        for c in &s.weights {
            let _ = write!(out, " {c:.16e}");
        }
        out.push('\n');
    }
    out
}

fn schema(line: usize, message: impl Into<String>) -> Error {
    Error::Schema {
        row: Some(line),
        message: message.into(),
    }
}

fn header(lines: &mut std::iter::Enumerate<std::str::Lines<'_>>, key: &str) -> Result<usize> {
    let (i, line) = lines.next().ok_or_else(|| schema(0, format!("missing `{key}` line")))?;
    let value = line
        .strip_prefix(key)
        .and_then(|rest| rest.trim().parse::<usize>().ok())
        .ok_or_else(|| schema(i + 1, format!("expected `{key} <count>`")))?;
    Ok(value)
}

pub fn parse_model(text: &str) -> Result<FairClassifier> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => return Err(schema(1, "not a model file")),
    }
    let dim = header(&mut lines, "dimension")?;
    let k = header(&mut lines, "members")?;
    let mut members = Vec::with_capacity(k);
    for (i, line) in lines.by_ref().take(k) {
        let values = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| schema(i + 1, e.to_string()))?;
        if values.len() != dim + 2 {
            return Err(schema(
                i + 1,
                format!("expected {} numbers, found {}", dim + 2, values.len()),
            ));
        }
        members.push((values[0], LinearScorer::new(values[2..].to_vec(), values[1])));
    }
    if members.len() != k {
        return Err(schema(
            members.len() + 4,
            format!("expected {k} members, found {}", members.len()),
        ));
    }
    if let Some((i, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(schema(i + 1, format!("unexpected trailing content `{extra}`")));
    }
    FairClassifier::new(members)
}

pub fn save_model(path: &Path, model: &FairClassifier) -> Result<()> {
    std::fs::write(path, write_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<FairClassifier> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}
