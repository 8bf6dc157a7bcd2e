//! Plain numeric CSV, one matrix row per line.

use super::{fmt_f64, io_err, IoError, IoResult};
use crate::matrix::DenseMatrix;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub fn read_matrix_csv(path: &Path) -> IoResult<DenseMatrix> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut data: Vec<f64> = Vec::new();
    let mut cols: Option<usize> = None;
    let mut rows = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut width = 0usize;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| IoError::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                message: format!("non-numeric field {:?}", field.trim()),
            })?;
            if !v.is_finite() {
                return Err(IoError::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: format!("non-finite value {v}"),
                });
            }
            data.push(v);
            width += 1;
        }
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(IoError::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: format!("ragged row: expected {c} fields, got {width}"),
                });
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| IoError::Format {
        path: path.display().to_string(),
        message: "empty file".into(),
    })?;
    Ok(DenseMatrix::from_rows_vec(rows, cols, data)?)
}

pub fn write_matrix_csv(a: &DenseMatrix, path: &Path) -> IoResult<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for i in 0..a.rows() {
        let line: Vec<String> = a.row(i).iter().map(|&v| fmt_f64(v)).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}
