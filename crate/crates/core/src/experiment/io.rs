//! Displacement files and sweep CSV tables.
//!
//! A displacement file is
//!
//! ```text
//! displacement v1
//! nodes <N>
//! <ux> <uy>      (N lines, mesh node order)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = [
    "lambda",
    "converged",
    "iterations",
    "energy",
    "error_V_abs",
    "error_V_rel",
    "max_penetration",
    "eps_residual",
    "dist_to_K",
];

/// One penalty solve of the sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    pub energy: f64,
    #[serde(rename = "error_V_abs")]
    pub error_v_abs: f64,
    #[serde(rename = "error_V_rel")]
    pub error_v_rel: f64,
    pub max_penetration: f64,
    pub eps_residual: f64,
    #[serde(rename = "dist_to_K")]
    pub dist_to_k: f64,
}

pub fn displacement_to_text(field: &[[f64; 2]]) -> String {
    let mut s = String::from("displacement v1\n");
    let _ = writeln!(s, "nodes {}", field.len());
    for u in field {
        // `{:e}` prints the shortest representation that reads back exactly
        let _ = writeln!(s, "{:e} {:e}", u[0], u[1]);
    }
    s
}

pub fn displacement_from_text(text: &str) -> Result<Vec<[f64; 2]>> {
    let err = |msg: String| Error::parse("displacement file", msg);
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some("displacement v1") {
        return Err(err("missing `displacement v1` header".into()));
    }
    let count = lines
        .next()
        .and_then(|l| l.strip_prefix("nodes "))
        .and_then(|n| n.trim().parse::<usize>().ok())
        .ok_or_else(|| err("missing `nodes <N>` line".into()))?;
    let mut field = Vec::with_capacity(count);
    for line in lines.by_ref().take(count) {
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| err(format!("`{t}` is not a number"))))
            .collect::<Result<_>>()?;
        if v.len() != 2 {
            return Err(err(format!("line `{line}` needs two values")));
        }
        field.push([v[0], v[1]]);
    }
    if field.len() != count {
        return Err(err(format!("expected {count} nodes, found {}", field.len())));
    }
    if lines.next().is_some() {
        return Err(err("trailing data after the node list".into()));
    }
    Ok(field)
}

pub fn write_displacement(path: &Path, field: &[[f64; 2]]) -> Result<()> {
    std::fs::write(path, displacement_to_text(field)).map_err(|e| Error::io(path, e))
}

pub fn read_displacement(path: &Path) -> Result<Vec<[f64; 2]>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    displacement_from_text(&text)
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::parse("csv", e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::parse("csv", e.to_string()))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::parse("csv", format!("unexpected header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(lambda: f64) -> SweepRow {
        SweepRow {
            lambda,
            converged: lambda > 1e-3,
            iterations: 12,
            energy: -8.436882088440123,
            error_v_abs: 1.0 / 3.0,
            error_v_rel: 2e-300,
            max_penetration: -0.0,
            eps_residual: 0.0,
            dist_to_k: 0.1 + 0.2,
        }
    }

    #[test]
    fn csv_header_and_round_trip() {
        let rows = vec![row(1.0), row(10f64.powf(-3.5))];
        let text = rows_to_csv(&rows).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        let back = rows_from_csv(&text).unwrap();
        assert_eq!(back, rows);
        assert!(back[0].max_penetration.is_sign_negative());
    }

    #[test]
    fn empty_table_keeps_header() {
        let text = rows_to_csv(&[]).unwrap();
        assert_eq!(text.trim(), CSV_HEADER.join(","));
        assert!(rows_from_csv(&text).unwrap().is_empty());
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(rows_from_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn displacement_round_trip() {
        let field = vec![[0.0, -1.5e-3], [1.0 / 7.0, 2.0], [-0.0, 5e-324]];
        let text = displacement_to_text(&field);
        assert!(text.starts_with("displacement v1\nnodes 3\n"));
        assert_eq!(displacement_from_text(&text).unwrap(), field);
    }

    #[test]
    fn malformed_displacement_files() {
        assert!(displacement_from_text("displacement v2\nnodes 0\n").is_err());
        assert!(displacement_from_text("displacement v1\nnodes 2\n0 0\n").is_err());
        assert!(displacement_from_text("displacement v1\nnodes 1\n0\n").is_err());
        assert!(displacement_from_text("displacement v1\nnodes 1\n0 0\n1 1\n").is_err());
        assert!(displacement_from_text("displacement v1\nnodes 1\n0 x\n").is_err());
    }
}
