//! Matrix Market coordinate I/O, restricted to `real symmetric` matrices.
//!
//! Only the stored triangle is kept; 1-based file indices map to 0-based
//! internal indices. Explicit duplicate entries are kept in the entry list
//! and therefore sum at matvec time, following the format's convention.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{SparseEntry, SymmetricOperator};
use crate::error::MatrixError;

fn parse_err(line: usize, message: impl Into<String>) -> MatrixError {
    MatrixError::Parse {
        line,
        message: message.into(),
    }
}

/// Load a `matrix coordinate real symmetric` file.
///
/// `%`-comment lines are permitted, fields are whitespace-separated, and
/// scientific notation is accepted. Unsupported fields (`complex`, `pattern`,
/// `integer`) and symmetries (`general`, `skew-symmetric`, `hermitian`) are
/// rejected with the offending header token.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SymmetricOperator, MatrixError> {
    let file = File::open(path.as_ref())?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (first_no, first) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))
        .and_then(|(i, l)| Ok((i + 1, l?)))?;
    let header: Vec<String> = first.split_whitespace().map(|t| t.to_lowercase()).collect();
    if header.len() < 5 || header[0] != "%%matrixmarket" {
        return Err(parse_err(first_no, "missing %%MatrixMarket header"));
    }
    let unsupported = |token: &str, reason: &str| MatrixError::UnsupportedFormat {
        token: token.to_string(),
        reason: reason.to_string(),
    };
    if header[1] != "matrix" {
        return Err(unsupported(&header[1], "object must be `matrix`"));
    }
    if header[2] != "coordinate" {
        return Err(unsupported(&header[2], "format must be `coordinate`"));
    }
    if header[3] != "real" {
        return Err(unsupported(&header[3], "field must be `real`"));
    }
    if header[4] != "symmetric" {
        return Err(unsupported(&header[4], "symmetry must be `symmetric`"));
    }

    // Size line: first non-comment, non-blank line after the header.
    let mut size: Option<(usize, usize, usize, usize)> = None;
    for (i, line) in lines.by_ref() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(i + 1, "size line must be `rows cols nnz`"));
        }
        let rows: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad row count `{}`", toks[0])))?;
        let cols: usize = toks[1]
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad col count `{}`", toks[1])))?;
        let nnz: usize = toks[2]
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad entry count `{}`", toks[2])))?;
        if rows != cols {
            return Err(parse_err(i + 1, format!("symmetric matrix must be square, got {rows}x{cols}")));
        }
        if rows == 0 {
            return Err(parse_err(i + 1, "dimension must be >= 1"));
        }
        size = Some((rows, cols, nnz, i + 1));
        break;
    }
    let (n, _, nnz, _) = size.ok_or_else(|| parse_err(0, "missing size line"))?;

    let mut entries = Vec::with_capacity(nnz);
    for (i, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if entries.len() == nnz {
            return Err(parse_err(i + 1, format!("more than the declared {nnz} entries")));
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(i + 1, "entry line must be `row col value`"));
        }
        let r: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad row index `{}`", toks[0])))?;
        let c: usize = toks[1]
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad col index `{}`", toks[1])))?;
        let v: f64 = toks[2]
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad value `{}`", toks[2])))?;
        if r == 0 || r > n || c == 0 || c > n {
            return Err(parse_err(
                i + 1,
                format!("index ({r}, {c}) out of declared range 1..={n}"),
            ));
        }
        // Normalize to the lower triangle.
        let (row, col) = if r >= c { (r - 1, c - 1) } else { (c - 1, r - 1) };
        entries.push(SparseEntry { row, col, value: v });
    }
    if entries.len() != nnz {
        return Err(parse_err(
            0,
            format!("declared {nnz} entries but found {}", entries.len()),
        ));
    }
    Ok(SymmetricOperator::from_sparse_parts(n, entries))
}

/// Write a sparse operator back to Matrix Market coordinate format.
///
/// Values use the shortest representation that round-trips to the same f64,
/// so write-then-load reproduces the stored entries exactly.
pub fn write_matrix_market(
    op: &SymmetricOperator,
    path: impl AsRef<Path>,
) -> Result<(), MatrixError> {
    let entries = op.stored_entries().ok_or_else(|| MatrixError::UnsupportedFormat {
        token: format!("{:?}", op.kind()),
        reason: "only sparse operators serialize to matrix market".to_string(),
    })?;
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", op.n(), op.n(), entries.len())?;
    for e in entries {
        writeln!(w, "{} {} {}", e.row + 1, e.col + 1, e.value)?;
    }
    w.flush()?;
    Ok(())
}
