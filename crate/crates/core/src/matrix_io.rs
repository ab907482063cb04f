//! Plain-text matrix input.
//!
//! Real matrices: one row per line, entries separated by whitespace or commas.
//! Complex matrices: entries separated by whitespace, each either `re` or
//! `re,im`. In both cases blank lines and `#` comments are skipped, and the
//! first line may hold the dimension `N` alone.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

fn data_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect()
}

/// Strips an optional leading `N` line and checks the row count against it.
fn split_header<'a>(lines: Vec<(usize, &'a str)>, is_header: impl Fn(&str) -> bool) -> Result<Vec<(usize, &'a str)>> {
    if lines.is_empty() {
        return Err(Error::Parse("no matrix rows".into()));
    }
    let (first_no, first) = lines[0];
    if lines.len() > 1 && is_header(first) {
        let n: usize = first
            .parse()
            .map_err(|_| Error::Parse(format!("line {first_no}: bad dimension `{first}`")))?;
        let rows = lines[1..].to_vec();
        if rows.len() != n {
            return Err(Error::Parse(format!("line {first_no}: header says {n} rows, found {}", rows.len())));
        }
        return Ok(rows);
    }
    Ok(lines)
}

fn parse_f64(token: &str, line: usize) -> Result<f64> {
    let x: f64 = token
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: cannot parse `{token}` as a number")))?;
    if !x.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite entry `{token}`")));
    }
    Ok(x)
}

fn assemble<T: nalgebra::Scalar + Copy>(rows: Vec<(usize, Vec<T>)>) -> Result<DMatrix<T>> {
    let ncols = rows[0].1.len();
    for (line, row) in &rows {
        if row.len() != ncols {
            return Err(Error::Parse(format!("line {line}: expected {ncols} entries, found {}", row.len())));
        }
    }
    let nrows = rows.len();
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i].1[j]))
}

fn is_single_integer(line: &str) -> bool {
    !line.contains([',', ' ', '\t', '.', 'e', 'E']) && line.parse::<usize>().is_ok()
}

pub fn parse_real_matrix(text: &str) -> Result<DMatrix<f64>> {
    let lines = split_header(data_lines(text), is_single_integer)?;
    let rows = lines
        .into_iter()
        .map(|(no, l)| {
            let row = l
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| parse_f64(t, no))
                .collect::<Result<Vec<_>>>()?;
            Ok((no, row))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(rows)
}

pub fn parse_complex_matrix(text: &str) -> Result<CMatrix> {
    let lines = split_header(data_lines(text), is_single_integer)?;
    let rows = lines
        .into_iter()
        .map(|(no, l)| {
            let row = l
                .split_whitespace()
                .map(|t| match t.split_once(',') {
                    Some((re, im)) => Ok(Complex64::new(parse_f64(re, no)?, parse_f64(im, no)?)),
                    None => Ok(Complex64::new(parse_f64(t, no)?, 0.0)),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((no, row))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(rows)
}

fn with_path<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T>) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_real_matrix(path: &Path) -> Result<DMatrix<f64>> {
    with_path(path, parse_real_matrix)
}

pub fn read_complex_matrix(path: &Path) -> Result<CMatrix> {
    with_path(path, parse_complex_matrix)
}

/// Writes a real matrix as CSV with full round-trip precision.
pub fn format_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
