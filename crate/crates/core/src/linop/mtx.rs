//! Matrix Market (`.mtx`) and plain-text vector interchange.
//!
//! Reads `matrix coordinate real {general|symmetric}` and
//! `matrix array real general`; writes coordinate format for sparse matrices
//! and array format for dense ones. Values are written in shortest
//! round-trip scientific notation so a write/read cycle is lossless.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{CsrMatrix, DenseMatrix, LinearOperator};
use crate::error::{Error, Result};

/// A matrix as stored on disk.
#[derive(Debug, Clone)]
pub enum MtxMatrix {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

impl MtxMatrix {
    pub fn rows(&self) -> usize {
        match self {
            MtxMatrix::Dense(d) => d.rows(),
            MtxMatrix::Sparse(s) => s.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            MtxMatrix::Dense(d) => d.cols(),
            MtxMatrix::Sparse(s) => s.cols(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            MtxMatrix::Dense(d) => d.clone(),
            MtxMatrix::Sparse(s) => s.to_dense(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        match self {
            MtxMatrix::Dense(d) => write_dense(path, d),
            MtxMatrix::Sparse(s) => write_csr(path, s),
        }
    }
}

impl LinearOperator for MtxMatrix {
    fn rows(&self) -> usize {
        MtxMatrix::rows(self)
    }
    fn cols(&self) -> usize {
        MtxMatrix::cols(self)
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        match self {
            MtxMatrix::Dense(d) => d.apply_into(x, y),
            MtxMatrix::Sparse(s) => s.apply_into(x, y),
        }
    }
    fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]) {
        match self {
            MtxMatrix::Dense(d) => d.apply_transpose_into(y, x),
            MtxMatrix::Sparse(s) => s.apply_transpose_into(y, x),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what}")))
}

pub fn read_matrix_market(path: &Path) -> Result<MtxMatrix> {
    read_matrix_market_from(BufReader::new(File::open(path)?))
}

pub fn read_matrix_market_from<R: BufRead>(reader: R) -> Result<MtxMatrix> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?.to_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(1, "missing %%MatrixMarket matrix header"));
    }
    let format = fields[2];
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(parse_err(1, format!("unsupported field type {}", fields[3])));
    }
    let symmetric = match fields[4] {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(1, format!("unsupported symmetry {other}"))),
    };

    let mut data_lines = lines.filter_map(|(i, l)| match l {
        Ok(s) if s.trim_start().starts_with('%') || s.trim().is_empty() => None,
        Ok(s) => Some(Ok((i + 1, s))),
        Err(e) => Some(Err(e)),
    });
    let (size_line, size) = data_lines
        .next()
        .ok_or_else(|| parse_err(2, "missing size line"))??;
    let mut toks = size.split_whitespace();
    let rows: usize = parse_num(toks.next(), size_line, "row count")?;
    let cols: usize = parse_num(toks.next(), size_line, "column count")?;

    match format {
        "coordinate" => {
            let nnz: usize = parse_num(toks.next(), size_line, "entry count")?;
            let mut triplets = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
            for _ in 0..nnz {
                let (ln, l) = data_lines
                    .next()
                    .ok_or_else(|| parse_err(size_line, "fewer entries than declared"))??;
                let mut t = l.split_whitespace();
                let i: usize = parse_num(t.next(), ln, "row index")?;
                let j: usize = parse_num(t.next(), ln, "column index")?;
                let v: f64 = parse_num(t.next(), ln, "value")?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(parse_err(ln, format!("index ({i}, {j}) out of range")));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
            Ok(MtxMatrix::Sparse(CsrMatrix::from_triplets(rows, cols, &triplets)?))
        }
        "array" => {
            if symmetric {
                return Err(parse_err(1, "symmetric array format is not supported"));
            }
            // column-major on disk
            let mut dense = DenseMatrix::zeros(rows, cols);
            for k in 0..rows * cols {
                let (ln, l) = data_lines
                    .next()
                    .ok_or_else(|| parse_err(size_line, "fewer entries than declared"))??;
                let v: f64 = parse_num(l.split_whitespace().next(), ln, "value")?;
                dense.set(k % rows, k / rows, v);
            }
            Ok(MtxMatrix::Dense(dense))
        }
        other => Err(parse_err(1, format!("unsupported format {other}"))),
    }
}

pub fn write_csr(path: &Path, m: &CsrMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for (i, j, v) in m.triplets() {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dense(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            writeln!(w, "{:e}", m.get(i, j))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One value per line; blank lines and `#` comments are skipped.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(
            t.parse()
                .map_err(|_| parse_err(i + 1, format!("bad value {t:?}")))?,
        );
    }
    Ok(out)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for x in v {
        writeln!(w, "{x:e}")?;
    }
    w.flush()?;
    Ok(())
}
