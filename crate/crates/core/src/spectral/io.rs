//! Matrix Market (coordinate) and plain CSV readers/writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use super::graph::Laplacian;
use crate::error::{Error, Result};

/// Sparse matrix as read from a Matrix Market coordinate file, zero-based.
#[derive(Clone, Debug, PartialEq)]
pub struct MmMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
    pub symmetric: bool,
    pub pattern: bool,
}

pub fn format_matrix_market(m: &MmMatrix) -> String {
    let field = if m.pattern { "pattern" } else { "real" };
    let sym = if m.symmetric { "symmetric" } else { "general" };
    let mut s = format!("%%MatrixMarket matrix coordinate {field} {sym}\n");
    let _ = writeln!(s, "{} {} {}", m.nrows, m.ncols, m.entries.len());
    for &(i, j, v) in &m.entries {
        if m.pattern {
            let _ = writeln!(s, "{} {}", i + 1, j + 1);
        } else {
            // {:e} with default precision round-trips f64 exactly
            let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
        }
    }
    s
}

pub fn parse_matrix_market(text: &str) -> Result<MmMatrix> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty Matrix Market file".into()))?;
    let h: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" || h[2] != "coordinate" {
        return Err(Error::Parse(format!("unsupported Matrix Market header: {header}")));
    }
    let pattern = match h[3].as_str() {
        "pattern" => true,
        "real" | "integer" => false,
        other => return Err(Error::Parse(format!("unsupported field type {other}"))),
    };
    let symmetric = match h[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(Error::Parse(format!("unsupported symmetry {other}"))),
    };
    let mut body = lines.filter(|l| !l.trim().is_empty() && !l.starts_with('%'));
    let size = body.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad size line: {size}"))))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(Error::Parse(format!("bad size line: {size}")));
    }
    let (nrows, ncols, nnz) = (dims[0], dims[1], dims[2]);
    let mut entries = Vec::with_capacity(nnz);
    for line in body {
        let t: Vec<&str> = line.split_whitespace().collect();
        let want = if pattern { 2 } else { 3 };
        if t.len() < want {
            return Err(Error::Parse(format!("bad entry line: {line}")));
        }
        let idx = |s: &str, bound: usize| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| Error::Parse(format!("bad index in: {line}")))?;
            if v == 0 || v > bound {
                return Err(Error::Parse(format!("index out of range in: {line}")));
            }
            Ok(v - 1)
        };
        let i = idx(t[0], nrows)?;
        let j = idx(t[1], ncols)?;
        let v = if pattern {
            1.0
        } else {
            t[2].parse().map_err(|_| Error::Parse(format!("bad value in: {line}")))?
        };
        entries.push((i, j, v));
    }
    if entries.len() != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {}", entries.len())));
    }
    Ok(MmMatrix { nrows, ncols, entries, symmetric, pattern })
}

pub fn write_matrix_market(path: &Path, m: &MmMatrix) -> Result<()> {
    fs::write(path, format_matrix_market(m))?;
    Ok(())
}

pub fn read_matrix_market(path: &Path) -> Result<MmMatrix> {
    parse_matrix_market(&fs::read_to_string(path)?)
}

/// Lower triangle (with diagonal) in symmetric Matrix Market form.
pub fn laplacian_to_mm(l: &Laplacian) -> MmMatrix {
    let mut entries: Vec<(usize, usize, f64)> = (0..l.dim()).map(|v| (v, v, l.diag()[v])).collect();
    entries.extend(l.upper_entries().map(|(a, b, v)| (b, a, v)));
    entries.sort_by_key(|&(i, j, _)| (j, i));
    MmMatrix { nrows: l.dim(), ncols: l.dim(), entries, symmetric: true, pattern: false }
}

/// Rebuild a Laplacian from its off-diagonal entries; the diagonal is re-derived.
pub fn laplacian_from_mm(m: &MmMatrix) -> Result<Laplacian> {
    if m.nrows != m.ncols || !m.symmetric {
        return Err(Error::Parse("Laplacian must be square symmetric".into()));
    }
    let pairs: Vec<_> = m
        .entries
        .iter()
        .filter(|&&(i, j, _)| i != j)
        .map(|&(i, j, v)| (i, j, -v))
        .collect();
    Laplacian::from_weighted_pairs(m.nrows, &pairs)
}

pub fn format_vector_csv(v: &[f64]) -> String {
    let mut s = String::new();
    for x in v {
        let _ = writeln!(s, "{x:e}");
    }
    s
}

pub fn parse_vector_csv(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number: {l}"))))
        .collect()
}

pub fn write_vector_csv(path: &Path, v: &[f64]) -> Result<()> {
    fs::write(path, format_vector_csv(v))?;
    Ok(())
}

pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    parse_vector_csv(&fs::read_to_string(path)?)
}

/// Dense matrix, one comma-separated row per line.
pub fn format_dense_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:e}", m[(r, c)])).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub fn parse_dense_csv(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number: {t}"))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse("ragged CSV matrix".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

pub fn write_dense_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, format_dense_csv(m))?;
    Ok(())
}

pub fn read_dense_csv(path: &Path) -> Result<DMatrix<f64>> {
    parse_dense_csv(&fs::read_to_string(path)?)
}
