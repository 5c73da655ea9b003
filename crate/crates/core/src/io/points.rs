//! Whitespace-delimited point lists: one point per line, `#` starts a
//! comment, blank lines are skipped. Every row must have the same arity.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

pub fn parse(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::format("point list", format!("line {}: bad number {tok:?}", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::format(
                    "point list",
                    format!(
                        "line {}: expected {} values, found {}",
                        lineno + 1,
                        first.len(),
                        row.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Formats with the shortest representation that parses back to the same `f64`.
pub fn format<P: AsRef<[f64]>>(points: &[P]) -> String {
    let mut out = String::new();
    for p in points {
        let mut first = true;
        for v in p.as_ref() {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn load(path: &Path) -> Result<Vec<Vec<f64>>> {
    parse(&super::read_to_string(path)?)
}

pub fn load_2d(path: &Path) -> Result<Vec<[f64; 2]>> {
    load(path)?
        .into_iter()
        .map(|r| {
            <[f64; 2]>::try_from(r.as_slice())
                .map_err(|_| Error::format("point list", format!("expected 2 columns, found {}", r.len())))
        })
        .collect()
}

pub fn save<P: AsRef<[f64]>>(path: &Path, points: &[P]) -> Result<()> {
    super::atomic_write(path, format(points).as_bytes())
}
