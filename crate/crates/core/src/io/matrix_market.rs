//! MatrixMarket reader/writer for dense use: `array` and `coordinate`
//! real general files. Symmetric, pattern and complex variants are
//! rejected explicitly rather than expanded.

use super::{fmt_f64, io_err, IoError, IoResult};
use crate::matrix::DenseMatrix;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(PartialEq)]
enum MmFormat {
    Array,
    Coordinate,
}

pub fn read_matrix_market(path: &Path) -> IoResult<DenseMatrix> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let p = || path.display().to_string();

    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| IoError::Format {
        path: p(),
        message: "empty file".into(),
    })?;
    let header = header.map_err(|e| io_err(path, e))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(IoError::Parse {
            path: p(),
            line: 1,
            message: "bad header, expected '%%MatrixMarket matrix <format> <field> <symmetry>'"
                .into(),
        });
    }
    let format = match tokens[2].as_str() {
        "array" => MmFormat::Array,
        "coordinate" => MmFormat::Coordinate,
        other => {
            return Err(IoError::Parse {
                path: p(),
                line: 1,
                message: format!("unsupported format {other:?}"),
            })
        }
    };
    if tokens[3] != "real" {
        return Err(IoError::Parse {
            path: p(),
            line: 1,
            message: format!("unsupported field {:?}, only 'real' is accepted", tokens[3]),
        });
    }
    if tokens[4] != "general" {
        return Err(IoError::Parse {
            path: p(),
            line: 1,
            message: format!("unsupported symmetry {:?}", tokens[4]),
        });
    }

    // skip comments, find the size line
    let mut size_line = None;
    for (i, line) in lines.by_ref() {
        let line = line.map_err(|e| io_err(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        size_line = Some((i + 1, t.to_string()));
        break;
    }
    let (size_lineno, size_line) = size_line.ok_or_else(|| IoError::Format {
        path: p(),
        message: "missing size line".into(),
    })?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| IoError::Parse {
            path: p(),
            line: size_lineno,
            message: format!("bad size line {size_line:?}"),
        })?;

    match format {
        MmFormat::Array => {
            if sizes.len() != 2 {
                return Err(IoError::Parse {
                    path: p(),
                    line: size_lineno,
                    message: "array size line must be 'm n'".into(),
                });
            }
            let (m, n) = (sizes[0], sizes[1]);
            let mut values = Vec::with_capacity(m * n);
            for (i, line) in lines {
                let line = line.map_err(|e| io_err(path, e))?;
                let t = line.trim();
                if t.is_empty() || t.starts_with('%') {
                    continue;
                }
                for tok in t.split_whitespace() {
                    let v: f64 = tok.parse().map_err(|_| IoError::Parse {
                        path: p(),
                        line: i + 1,
                        message: format!("non-numeric value {tok:?}"),
                    })?;
                    if !v.is_finite() {
                        return Err(IoError::Parse {
                            path: p(),
                            line: i + 1,
                            message: format!("non-finite value {v}"),
                        });
                    }
                    values.push(v);
                }
            }
            if values.len() != m * n {
                return Err(IoError::Format {
                    path: p(),
                    message: format!("expected {} values, got {}", m * n, values.len()),
                });
            }
            // array files are column-major
            let mut a = DenseMatrix::zeros(m, n);
            for (idx, v) in values.into_iter().enumerate() {
                a.set(idx % m, idx / m, v);
            }
            Ok(a)
        }
        MmFormat::Coordinate => {
            if sizes.len() != 3 {
                return Err(IoError::Parse {
                    path: p(),
                    line: size_lineno,
                    message: "coordinate size line must be 'm n nnz'".into(),
                });
            }
            let (m, n, nnz) = (sizes[0], sizes[1], sizes[2]);
            if m == 0 || n == 0 {
                return Err(IoError::Format {
                    path: p(),
                    message: "dimensions must be positive".into(),
                });
            }
            let mut a = DenseMatrix::zeros(m, n);
            let mut filled = vec![false; m * n];
            let mut count = 0usize;
            for (i, line) in lines {
                let line = line.map_err(|e| io_err(path, e))?;
                let t = line.trim();
                if t.is_empty() || t.starts_with('%') {
                    continue;
                }
                let parts: Vec<&str> = t.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(IoError::Parse {
                        path: p(),
                        line: i + 1,
                        message: format!("expected 'i j value', got {t:?}"),
                    });
                }
                let row: usize = parts[0].parse().map_err(|_| IoError::Parse {
                    path: p(),
                    line: i + 1,
                    message: format!("bad row index {:?}", parts[0]),
                })?;
                let col: usize = parts[1].parse().map_err(|_| IoError::Parse {
                    path: p(),
                    line: i + 1,
                    message: format!("bad column index {:?}", parts[1]),
                })?;
                let v: f64 = parts[2].parse().map_err(|_| IoError::Parse {
                    path: p(),
                    line: i + 1,
                    message: format!("non-numeric value {:?}", parts[2]),
                })?;
                if !v.is_finite() {
                    return Err(IoError::Parse {
                        path: p(),
                        line: i + 1,
                        message: format!("non-finite value {v}"),
                    });
                }
                if row == 0 || row > m || col == 0 || col > n {
                    return Err(IoError::Parse {
                        path: p(),
                        line: i + 1,
                        message: format!("index ({row}, {col}) out of bounds for {m}x{n}"),
                    });
                }
                let flat = (row - 1) * n + (col - 1);
                if filled[flat] {
                    return Err(IoError::Parse {
                        path: p(),
                        line: i + 1,
                        message: format!("duplicate entry ({row}, {col})"),
                    });
                }
                filled[flat] = true;
                a.set(row - 1, col - 1, v);
                count += 1;
            }
            if count != nnz {
                return Err(IoError::Format {
                    path: p(),
                    message: format!("expected {nnz} entries, got {count}"),
                });
            }
            Ok(a)
        }
    }
}

/// Writes A as a dense `array real general` MatrixMarket file
/// (column-major values, as the format prescribes).
pub fn write_matrix_market(a: &DenseMatrix, path: &Path) -> IoResult<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "%%MatrixMarket matrix array real general").map_err(|e| io_err(path, e))?;
    writeln!(w, "{} {}", a.rows(), a.cols()).map_err(|e| io_err(path, e))?;
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            writeln!(w, "{}", fmt_f64(a.get(i, j))).map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn coordinate_single_entry() {
        let f = tmp("%%MatrixMarket matrix coordinate real general\n2 2 1\n2 1 5.0\n");
        let a = read_matrix_market(f.path()).unwrap();
        assert_eq!(a.data(), &[0.0, 0.0, 5.0, 0.0]);
    }

    #[test]
    fn array_is_column_major() {
        let f = tmp("%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n");
        let a = read_matrix_market(f.path()).unwrap();
        assert_eq!(a.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn symmetric_flag_rejected() {
        let f = tmp("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 5.0\n");
        let err = read_matrix_market(f.path()).unwrap_err();
        assert!(err.to_string().contains("unsupported symmetry"));
    }

    #[test]
    fn out_of_bounds_and_duplicates_rejected() {
        let f = tmp("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 5.0\n");
        assert!(read_matrix_market(f.path()).is_err());
        let f = tmp("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 5.0\n1 1 6.0\n");
        assert!(read_matrix_market(f.path()).is_err());
    }

    #[test]
    fn bad_header_rejected() {
        let f = tmp("%%NotMatrixMarket whatever\n");
        assert!(read_matrix_market(f.path()).is_err());
    }

    #[test]
    fn write_read_round_trip() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let a = DenseMatrix::from_rows_vec(
            5,
            7,
            (0..35).map(|_| rng.random::<f64>() - 0.5).collect(),
        )
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_matrix_market(&a, f.path()).unwrap();
        assert_eq!(read_matrix_market(f.path()).unwrap(), a);
    }
}
