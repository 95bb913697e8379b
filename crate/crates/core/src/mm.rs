//! Matrix Market coordinate I/O for symmetric matrices.
//!
//! Export writes the `symmetric` variant (lower triangle, 1-based). Import
//! accepts both `symmetric` and `general` real coordinate files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SymSparseMatrix;

pub fn write_matrix_market<W: Write>(m: &SymSparseMatrix, mut out: W) -> Result<()> {
    let lower: Vec<_> = m.triplets().filter(|&(i, j, _)| j <= i).collect();
    writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(out, "{} {} {}", m.n(), m.n(), lower.len())?;
    for (i, j, v) in lower {
        writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_matrix_market(m: &SymSparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_market(m, BufWriter::new(File::create(path)?))
}

pub fn read_matrix_market<R: Read>(input: R) -> Result<SymSparseMatrix> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| Error::MatrixMarket("empty input".into()))??;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::MatrixMarket(format!("bad header line: {header}")));
    }
    if tokens[2] != "coordinate" || tokens[3] != "real" {
        return Err(Error::MatrixMarket("only real coordinate matrices are supported".into()));
    }
    let symmetric = match tokens[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(Error::MatrixMarket(format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(Error::MatrixMarket(format!("bad size line: {line}")));
                }
                let rows = parse_usize(fields[0])?;
                let cols = parse_usize(fields[1])?;
                if rows != cols {
                    return Err(Error::MatrixMarket(format!("matrix is {rows}x{cols}, not square")));
                }
                size = Some((rows, parse_usize(fields[2])?));
            }
            Some((n, _)) => {
                if fields.len() != 3 {
                    return Err(Error::MatrixMarket(format!("bad entry line: {line}")));
                }
                let i = parse_usize(fields[0])?;
                let j = parse_usize(fields[1])?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(Error::MatrixMarket(format!("entry ({i}, {j}) out of range")));
                }
                let v: f64 =
                    fields[2].parse().map_err(|_| Error::MatrixMarket(format!("bad value '{}'", fields[2])))?;
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| Error::MatrixMarket("missing size line".into()))?;
    let stored = if symmetric { triplets.iter().filter(|&&(i, j, _)| j <= i).count() } else { triplets.len() };
    if stored != nnz {
        return Err(Error::MatrixMarket(format!("expected {nnz} entries, found {stored}")));
    }
    SymSparseMatrix::from_triplets(n, triplets)
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SymSparseMatrix> {
    read_matrix_market(File::open(path)?)
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::MatrixMarket(format!("bad integer '{s}'")))
}
