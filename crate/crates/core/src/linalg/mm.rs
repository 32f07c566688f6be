//! Matrix Market reader and writer.
//!
//! Reads `coordinate` files (`real`, `integer` or `pattern`; `general`,
//! `symmetric` or `skew-symmetric`) into a [`CsrMatrix`] and `array` files
//! into a [`DenseMatrix`]. Vectors use a bare one-value-per-line format;
//! blank lines and `%` comments are skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{AnyMatrix, CsrMatrix, DenseMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Pattern,
}

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Data lines with their 1-based line numbers, comments and blanks removed.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('%'))
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing value"))?;
    let v: f64 = tok.parse().map_err(|_| parse_err(line, format!("bad number '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

fn parse_usize(tok: Option<&str>, line: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing integer"))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad integer '{tok}'")))
}

/// Parses Matrix Market text.
pub fn parse_matrix(text: &str) -> Result<AnyMatrix> {
    let header = text.lines().next().ok_or_else(|| parse_err(1, "empty file"))?;
    let h: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let field = match h[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    };
    let symmetry = match h[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };
    let mut lines = data_lines(text).skip_while(|(n, _)| *n == 1);
    let (size_line, size) = lines.next().ok_or_else(|| parse_err(1, "missing size line"))?;
    let mut toks = size.split_whitespace();
    let rows = parse_usize(toks.next(), size_line)?;
    let cols = parse_usize(toks.next(), size_line)?;
    match h[2].as_str() {
        "coordinate" => {
            let nnz = parse_usize(toks.next(), size_line)?;
            let mut trip = Vec::with_capacity(nnz * 2);
            let mut seen = 0;
            for (ln, l) in lines {
                let mut t = l.split_whitespace();
                let i = parse_usize(t.next(), ln)?;
                let j = parse_usize(t.next(), ln)?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(parse_err(ln, format!("index ({i}, {j}) out of range")));
                }
                let v = match field {
                    Field::Real => parse_f64(t.next(), ln)?,
                    Field::Pattern => 1.0,
                };
                let (i, j) = (i - 1, j - 1);
                trip.push((i, j, v));
                if i != j {
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => trip.push((j, i, v)),
                        Symmetry::Skew => trip.push((j, i, -v)),
                    }
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(size_line, format!("expected {nnz} entries, found {seen}")));
            }
            Ok(CsrMatrix::from_triplets(rows, cols, &trip)?.into())
        }
        "array" => {
            if symmetry != Symmetry::General && rows != cols {
                return Err(parse_err(size_line, "symmetric array must be square"));
            }
            if field == Field::Pattern {
                return Err(parse_err(1, "pattern field is not valid for array format"));
            }
            let mut m = DenseMatrix::zeros(rows, cols);
            // Column-major; symmetric variants store only the lower triangle.
            let mut slots = Vec::new();
            for j in 0..cols {
                let start = if symmetry == Symmetry::General {
                    0
                } else if symmetry == Symmetry::Skew {
                    j + 1
                } else {
                    j
                };
                for i in start..rows {
                    slots.push((i, j));
                }
            }
            let mut slot = slots.iter();
            for (ln, l) in lines {
                for tok in l.split_whitespace() {
                    let &(i, j) = slot.next().ok_or_else(|| parse_err(ln, "too many values"))?;
                    let v = parse_f64(Some(tok), ln)?;
                    m[(i, j)] = v;
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => m[(j, i)] = v,
                        Symmetry::Skew => m[(j, i)] = -v,
                    }
                }
            }
            if slot.next().is_some() {
                return Err(parse_err(size_line, "too few values"));
            }
            Ok(m.into())
        }
        other => Err(parse_err(1, format!("unsupported format '{other}'"))),
    }
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<AnyMatrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

/// Coordinate (general) text for a CSR matrix, 1-based indices.
pub fn format_csr(m: &CsrMatrix) -> String {
    let mut s = String::new();
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    s.push_str(&format!("{} {} {}\n", m.nrows(), m.ncols(), m.nnz()));
    for (i, j, v) in m.triplets() {
        s.push_str(&format!("{} {} {:e}\n", i + 1, j + 1, v));
    }
    s
}

/// Array (general, column-major) text for a dense matrix.
pub fn format_dense(m: &DenseMatrix) -> String {
    let mut s = String::new();
    s.push_str("%%MatrixMarket matrix array real general\n");
    s.push_str(&format!("{} {}\n", m.nrows(), m.ncols()));
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s.push_str(&format!("{:e}\n", m[(i, j)]));
        }
    }
    s
}

pub fn write_matrix(path: impl AsRef<Path>, m: &AnyMatrix) -> Result<()> {
    let text = match m {
        AnyMatrix::Csr(c) => format_csr(c),
        AnyMatrix::Dense(d) => format_dense(d),
    };
    fs::write(path, text)?;
    Ok(())
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    data_lines(text)
        .flat_map(|(ln, l)| l.split_whitespace().map(move |t| (ln, t)))
        .map(|(ln, t)| parse_f64(Some(t), ln))
        .collect()
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    parse_vector(&fs::read_to_string(path)?)
}

pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for x in v {
        writeln!(f, "{x:e}")?;
    }
    f.flush()?;
    Ok(())
}
