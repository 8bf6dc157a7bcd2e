//! Cyclic Jacobi eigendecomposition for small dense symmetric matrices.
//!
//! The matrices diagonalized here are (k+l) x (k+l) Gram matrices, so a
//! plain cyclic Jacobi sweep is both fast enough and orthogonal to machine
//! precision. Convergence: off-diagonal Frobenius norm <= 1e-12 * ||S||_F,
//! capped at 100 sweeps.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SymmetricMatrix};

const OFF_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Full spectral decomposition, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct EigenResult {
    /// lambda_1 >= ... >= lambda_p.
    pub values: Vec<f64>,
    /// p x p orthonormal matrix; column i is the eigenvector for values[i].
    pub vectors: DenseMatrix,
}

impl EigenResult {
    /// Column i of the eigenvector matrix.
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }
}

/// Diagonalizes S, returning eigenpairs sorted by descending eigenvalue.
///
/// Sign convention: the largest-magnitude component of each eigenvector is
/// made positive (ties broken by lowest index), and equal eigenvalues keep
/// their pre-sort order, so the decomposition is byte-reproducible.
pub fn eigh_descending(s: &SymmetricMatrix) -> Result<EigenResult> {
    let p = s.order();
    let mut a = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = s.get(i, j);
        }
    }
    let mut v = vec![vec![0.0; p]; p];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let norm_s = s.frobenius_norm();
    let threshold = OFF_TOL * norm_s;
    let mut converged = norm_s == 0.0 || p == 1;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::EigenNoConvergence {
                sweeps,
                off_norm: off_diagonal_norm(&a),
            });
        }
        for i in 0..p - 1 {
            for j in i + 1..p {
                rotate(&mut a, &mut v, i, j);
            }
        }
        sweeps += 1;
        converged = off_diagonal_norm(&a) <= threshold;
    }

    // sort eigenpairs descending; stable sort keeps ties in original order
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| a[y][y].partial_cmp(&a[x][x]).unwrap());

    let mut values = Vec::with_capacity(p);
    let mut vectors = DenseMatrix::zeros(p, p);
    for (col, &idx) in order.iter().enumerate() {
        values.push(a[idx][idx]);
        let mut vec_i: Vec<f64> = (0..p).map(|r| v[r][idx]).collect();
        fix_sign(&mut vec_i);
        for (r, val) in vec_i.iter().enumerate() {
            vectors.set(r, col, *val);
        }
    }
    Ok(EigenResult { values, vectors })
}

fn off_diagonal_norm(a: &[Vec<f64>]) -> f64 {
    let p = a.len();
    let mut s = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                s += a[i][j] * a[i][j];
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation annihilating a[i][j] (Rutishauser's formulas).
fn rotate(a: &mut [Vec<f64>], v: &mut [Vec<f64>], i: usize, j: usize) {
    let aij = a[i][j];
    if aij == 0.0 {
        return;
    }
    let theta = (a[j][j] - a[i][i]) / (2.0 * aij);
    let t = if theta >= 0.0 {
        1.0 / (theta + (1.0 + theta * theta).sqrt())
    } else {
        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let p = a.len();

    let aii = a[i][i];
    let ajj = a[j][j];
    a[i][i] = aii - t * aij;
    a[j][j] = ajj + t * aij;
    a[i][j] = 0.0;
    a[j][i] = 0.0;
    for r in 0..p {
        if r != i && r != j {
            let ari = a[r][i];
            let arj = a[r][j];
            a[r][i] = c * ari - s * arj;
            a[i][r] = a[r][i];
            a[r][j] = c * arj + s * ari;
            a[j][r] = a[r][j];
        }
    }
    for row in v.iter_mut() {
        let vi = row[i];
        let vj = row[j];
        row[i] = c * vi - s * vj;
        row[j] = c * vj + s * vi;
    }
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (idx, &x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = idx;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}
