//! Dense row-major matrix storage and the elementary products the
//! approximation engine composes.
//!
//! Layout: entry (i, j) of an m×n matrix lives at `data[i * n + j]`.
//! Every oracle and every file format in this crate uses this order, so
//! exact-equality comparisons between routes are meaningful.

use crate::error::{Error, Result};
use crate::OrthoBasis;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Dense m×n matrix of finite 64-bit floats, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data. Rejects empty shapes, length
    /// mismatches and non-finite entries.
    pub fn from_rows_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument {
                context: "DenseMatrix",
                message: format!("dimensions must be positive, got {rows}x{cols}"),
            });
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument {
                context: "DenseMatrix",
                message: format!(
                    "data length {} does not match {rows}x{cols}",
                    data.len()
                ),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NotFinite {
                context: "DenseMatrix",
                position: pos,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copies column j out as a vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }
}

/// Sum of squared entries, `||A||_F^2`.
pub fn frobenius_norm_sq(a: &DenseMatrix) -> f64 {
    a.data.iter().map(|v| v * v).sum()
}

/// Packed symmetric p×p matrix, upper triangle stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    order: usize,
    /// order*(order+1)/2 entries: (i, j) with i <= j at `i*(2*order - i + 1)/2 + (j - i)`.
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn from_upper(order: usize, data: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument {
                context: "SymmetricMatrix",
                message: "order must be >= 1".into(),
            });
        }
        if data.len() != order * (order + 1) / 2 {
            return Err(Error::InvalidArgument {
                context: "SymmetricMatrix",
                message: format!(
                    "packed length {} does not match order {order}",
                    data.len()
                ),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NotFinite {
                context: "SymmetricMatrix",
                position: pos,
            });
        }
        Ok(Self { order, data })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.data[i * (2 * self.order - i + 1) / 2 + (j - i)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.order {
            for j in 0..self.order {
                let v = self.get(i, j);
                s += v * v;
            }
        }
        s.sqrt()
    }
}

/// Gram matrix of the columns of Y: S_ij = y_i . y_j, each unordered pair
/// computed once so S is exactly symmetric.
pub fn gram_of_columns(y: &DenseMatrix) -> SymmetricMatrix {
    let p = y.cols();
    let mut packed = Vec::with_capacity(p * (p + 1) / 2);
    for i in 0..p {
        for j in i..p {
            let mut s = 0.0;
            for r in 0..y.rows() {
                s += y.get(r, i) * y.get(r, j);
            }
            packed.push(s);
        }
    }
    SymmetricMatrix {
        order: p,
        data: packed,
    }
}

/// Y = A^T X for an orthonormal basis X: column i of the n×p result is
/// A^T x_i. Parallel over columns; each output entry is one serial dot
/// product, so the result is bitwise independent of the worker count.
pub fn transpose_times_basis(a: &DenseMatrix, x: &OrthoBasis) -> Result<DenseMatrix> {
    if x.dim() != a.rows() {
        return Err(Error::DimensionMismatch {
            context: "transpose_times_basis",
            expected: a.rows(),
            got: x.dim(),
            index: 0,
        });
    }
    let n = a.cols();
    let p = x.len();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    x.vectors()
        .par_iter()
        .map(|xv| {
            let mut col = vec![0.0; n];
            for (r, row) in (0..a.rows()).map(|r| (r, a.row(r))) {
                let xr = xv[r];
                if xr != 0.0 {
                    for j in 0..n {
                        col[j] += row[j] * xr;
                    }
                }
            }
            col
        })
        .collect_into_vec(&mut cols);
    let mut y = DenseMatrix::zeros(n, p);
    for (i, col) in cols.iter().enumerate() {
        for j in 0..n {
            y.set(j, i, col[j]);
        }
    }
    Ok(y)
}
