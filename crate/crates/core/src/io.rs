//! Matrix Market coordinate files and plain one-value-per-line vectors.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Writes `a` in Matrix Market coordinate format.
///
/// Bitwise symmetric matrices are written with `symmetric` storage (lower
/// triangle only); everything else as `general`.
pub fn write_matrix_market<W: Write>(a: &SparseMatrix, mut out: W) -> Result<()> {
    let symmetric = a.is_symmetric();
    let kind = if symmetric { "symmetric" } else { "general" };
    writeln!(out, "%%MatrixMarket matrix coordinate real {kind}")?;
    let entries: Vec<(usize, usize, f64)> = (0..a.n_rows())
        .flat_map(|i| {
            let (cols, vals) = a.row(i);
            cols.iter()
                .zip(vals)
                .map(move |(&j, &v)| (i, j, v))
                .collect::<Vec<_>>()
        })
        .filter(|&(i, j, _)| !symmetric || j <= i)
        .collect();
    writeln!(out, "{} {} {}", a.n_rows(), a.n_cols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read_matrix_market<R: BufRead>(input: R) -> Result<SparseMatrix> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let header = header?.to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            msg: "missing %%MatrixMarket matrix header".into(),
        });
    }
    if fields[2] != "coordinate" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported layout '{}'", fields[2]),
        });
    }
    let pattern = match fields[3] {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported field '{other}'"),
            })
        }
    };
    let symmetric = match fields[4] {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported symmetry '{other}'"),
            })
        }
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        let parse_usize = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })
        };
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "expected 'rows cols entries'".into(),
                    });
                }
                size = Some((
                    parse_usize(parts[0])?,
                    parse_usize(parts[1])?,
                    parse_usize(parts[2])?,
                ));
            }
            Some((rows, cols, _)) => {
                let need = if pattern { 2 } else { 3 };
                if parts.len() < need {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "truncated entry".into(),
                    });
                }
                let i = parse_usize(parts[0])?;
                let j = parse_usize(parts[1])?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("index ({i}, {j}) out of range"),
                    });
                }
                let v = if pattern {
                    1.0
                } else {
                    parts[2].parse::<f64>().map_err(|e| Error::Parse {
                        line: line_no,
                        msg: e.to_string(),
                    })?
                };
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (rows, cols, _) = size.ok_or(Error::Parse {
        line: 0,
        msg: "missing size line".into(),
    })?;
    SparseMatrix::from_triplets(rows, cols, &triplets)
}

pub fn write_vector<W: Write>(v: &[f64], mut out: W) -> Result<()> {
    for x in v {
        writeln!(out, "{x:e}")?;
    }
    Ok(())
}

pub fn read_vector<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut v = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        v.push(t.parse::<f64>().map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(v)
}
