//! Matrix Market reader and writer for real symmetric matrices.
//!
//! Accepted headers (case-insensitive):
//!
//! * `coordinate real symmetric`: lower (or upper) triangle entries, mirrored
//! * `coordinate real general`: all entries; must be symmetric to `1e-12`
//! * `array real general`: column-major dense values; must be symmetric
//! * `array real symmetric`: column-major lower triangle
//!
//! `integer` is read as `real`. Pattern, complex, hermitian and skew-symmetric
//! files are rejected.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{LinearOperator, LinopError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<LinearOperator, LinopError> {
    let file = File::open(path)?;
    parse_matrix_market(BufReader::new(file))
}

pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<LinearOperator, LinopError> {
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(LinopError::MalformedHeader("empty file".into())),
    };
    let (layout, symmetry) = parse_header(&header)?;

    // size line: first non-comment, non-blank line
    let mut size: Option<(usize, Vec<usize>)> = None;
    for (idx, line) in lines.by_ref() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let dims = t
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| LinopError::Parse {
                line: idx + 1,
                msg: format!("bad size line: {e}"),
            })?;
        size = Some((idx + 1, dims));
        break;
    }
    let (size_line, dims) =
        size.ok_or_else(|| LinopError::MalformedHeader("missing size line".into()))?;
    let want = if layout == Layout::Coordinate { 3 } else { 2 };
    if dims.len() != want {
        return Err(LinopError::Parse {
            line: size_line,
            msg: format!("size line needs {want} integers, found {}", dims.len()),
        });
    }
    let (rows, cols) = (dims[0], dims[1]);
    if rows != cols {
        return Err(LinopError::NonSquare { rows, cols });
    }
    let n = rows;
    if n == 0 {
        return Err(LinopError::EmptyOperator);
    }

    let mut data_lines = lines.filter_map(|(idx, line)| match line {
        Ok(l) => {
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok((idx + 1, t.to_string())))
            }
        }
        Err(e) => Some(Err(e)),
    });

    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut triplets = Vec::with_capacity(nnz);
            for _ in 0..nnz {
                let (line_no, text) = data_lines.next().ok_or_else(|| LinopError::Parse {
                    line: 0,
                    msg: format!(
                        "expected {nnz} entries, file ended after {}",
                        triplets.len()
                    ),
                })??;
                let mut it = text.split_whitespace();
                let i = parse_index(it.next(), line_no)?;
                let j = parse_index(it.next(), line_no)?;
                let v = parse_value(it.next(), line_no)?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(LinopError::IndexOutOfRange { row: i, col: j, n });
                }
                triplets.push((i - 1, j - 1, v));
            }
            LinearOperator::csr_from_triplets(n, &triplets, symmetry == Symmetry::Symmetric)
        }
        Layout::Array => {
            let mut values = vec![0.0; n * n];
            let mut next_value = |count: usize| -> Result<f64, LinopError> {
                let (line_no, text) = data_lines.next().ok_or_else(|| LinopError::Parse {
                    line: 0,
                    msg: format!("file ended after {count} values"),
                })??;
                parse_value(text.split_whitespace().next(), line_no)
            };
            let mut count = 0;
            for j in 0..n {
                let start = if symmetry == Symmetry::Symmetric {
                    j
                } else {
                    0
                };
                for i in start..n {
                    let v = next_value(count)?;
                    count += 1;
                    values[i * n + j] = v;
                    if symmetry == Symmetry::Symmetric {
                        values[j * n + i] = v;
                    }
                }
            }
            LinearOperator::dense(n, values)
        }
    }
}

fn parse_header(line: &str) -> Result<(Layout, Symmetry), LinopError> {
    let tokens: Vec<String> = line.split_whitespace().map(|t| t.to_lowercase()).collect();
    if tokens.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(LinopError::MalformedHeader(
            "first line must start with %%MatrixMarket".into(),
        ));
    }
    if tokens.len() != 5 {
        return Err(LinopError::MalformedHeader(format!(
            "expected 5 header tokens, found {}",
            tokens.len()
        )));
    }
    if tokens[1] != "matrix" {
        return Err(LinopError::MalformedHeader(format!(
            "object must be 'matrix', found '{}'",
            tokens[1]
        )));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => {
            return Err(LinopError::MalformedHeader(format!(
                "unknown format '{other}'"
            )))
        }
    };
    match tokens[3].as_str() {
        "real" | "double" | "integer" => {}
        "pattern" | "complex" => {
            return Err(LinopError::Unsupported(format!("field '{}'", tokens[3])));
        }
        other => {
            return Err(LinopError::MalformedHeader(format!(
                "unknown field '{other}'"
            )))
        }
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" | "hermitian" => {
            return Err(LinopError::Unsupported(format!("symmetry '{}'", tokens[4])));
        }
        other => {
            return Err(LinopError::MalformedHeader(format!(
                "unknown symmetry '{other}'"
            )));
        }
    };
    Ok((layout, symmetry))
}

fn parse_index(tok: Option<&str>, line: usize) -> Result<usize, LinopError> {
    let tok = tok.ok_or_else(|| LinopError::Parse {
        line,
        msg: "missing index".into(),
    })?;
    tok.parse::<usize>().map_err(|e| LinopError::Parse {
        line,
        msg: format!("bad index '{tok}': {e}"),
    })
}

fn parse_value(tok: Option<&str>, line: usize) -> Result<f64, LinopError> {
    let tok = tok.ok_or_else(|| LinopError::Parse {
        line,
        msg: "missing value".into(),
    })?;
    tok.parse::<f64>().map_err(|e| LinopError::Parse {
        line,
        msg: format!("bad value '{tok}': {e}"),
    })
}

/// Writes the operator as `coordinate real symmetric` (lower triangle,
/// shortest round-trip decimal representation).
pub fn write_matrix_market(op: &LinearOperator, path: impl AsRef<Path>) -> Result<(), LinopError> {
    use super::Operator;
    let mut w = BufWriter::new(File::create(path)?);
    let entries = op.lower_triplets();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", op.dim(), op.dim(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}
