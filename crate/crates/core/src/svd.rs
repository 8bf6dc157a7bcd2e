//! Exact SVD oracle for desk-scale matrices.
//!
//! Goes through the Gram matrix of the smaller side: eigendecompose A^T A
//! (or A A^T when m < n) with the Jacobi solver, then recover the other
//! side's singular vectors from u = A v / sigma. Intended for verification
//! and benchmarking, not for large inputs; `DEFAULT_DIM_CAP` bounds
//! min(m, n).

use crate::basis::dot;
use crate::eigen::eigh_descending;
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SymmetricMatrix};

/// Soft cap on min(m, n) for the dense oracle.
pub const DEFAULT_DIM_CAP: usize = 512;

/// Default relative cutoff below which singular values are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Exact singular triplets, values descending, zeros truncated.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SvdResult {
    /// sigma_1 >= ... >= sigma_r > 0.
    pub singular_values: Vec<f64>,
    /// u_1 ... u_r in R^m.
    pub left_vectors: Vec<Vec<f64>>,
    /// v_1 ... v_r in R^n.
    pub right_vectors: Vec<Vec<f64>>,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// Optimal squared Frobenius error of any rank-k approximation,
    /// sum of sigma_q^2 for q > k.
    pub fn optimal_residual_sq(&self, k: usize) -> f64 {
        self.singular_values
            .iter()
            .skip(k)
            .map(|s| s * s)
            .sum()
    }
}

/// Computes the full SVD of A with `svd_oracle_capped(a, rank_tol, DEFAULT_DIM_CAP)`.
pub fn svd_oracle(a: &DenseMatrix, rank_tol: f64) -> Result<SvdResult> {
    svd_oracle_capped(a, rank_tol, DEFAULT_DIM_CAP)
}

pub fn svd_oracle_capped(a: &DenseMatrix, rank_tol: f64, cap: usize) -> Result<SvdResult> {
    let (m, n) = (a.rows(), a.cols());
    let min_dim = m.min(n);
    if min_dim > cap {
        return Err(Error::OracleCapExceeded { min_dim, cap });
    }

    // Eigendecompose the smaller Gram matrix.
    let tall = n <= m; // work with A^T A when the matrix is tall
    let gram = if tall {
        gram_ata(a)
    } else {
        gram_aat(a)
    };
    let eig = eigh_descending(&gram)?;

    let sigma1 = eig.values.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    let cutoff = rank_tol * sigma1;

    let mut singular_values = Vec::new();
    let mut left_vectors = Vec::new();
    let mut right_vectors = Vec::new();
    for (i, &lam) in eig.values.iter().enumerate() {
        let sigma = lam.max(0.0).sqrt();
        if sigma <= cutoff || sigma == 0.0 {
            break;
        }
        let w = eig.vector(i);
        if tall {
            // w is a right singular vector; u = A v / sigma
            let u: Vec<f64> = (0..m)
                .map(|r| dot(a.row(r), &w) / sigma)
                .collect();
            left_vectors.push(u);
            right_vectors.push(w);
        } else {
            // w is a left singular vector; v = A^T u / sigma
            let mut v = vec![0.0; n];
            for r in 0..m {
                let wr = w[r];
                if wr != 0.0 {
                    for (j, arj) in a.row(r).iter().enumerate() {
                        v[j] += arj * wr;
                    }
                }
            }
            for x in v.iter_mut() {
                *x /= sigma;
            }
            left_vectors.push(w);
            right_vectors.push(v);
        }
        singular_values.push(sigma);
    }
    Ok(SvdResult {
        singular_values,
        left_vectors,
        right_vectors,
    })
}

fn gram_ata(a: &DenseMatrix) -> SymmetricMatrix {
    let n = a.cols();
    let mut full = vec![vec![0.0; n]; n];
    for r in 0..a.rows() {
        let row = a.row(r);
        for i in 0..n {
            let ri = row[i];
            if ri != 0.0 {
                for j in i..n {
                    full[i][j] += ri * row[j];
                }
            }
        }
    }
    pack_upper(&full)
}

fn gram_aat(a: &DenseMatrix) -> SymmetricMatrix {
    let m = a.rows();
    let mut full = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            full[i][j] = dot(a.row(i), a.row(j));
        }
    }
    pack_upper(&full)
}

fn pack_upper(full: &[Vec<f64>]) -> SymmetricMatrix {
    let p = full.len();
    let mut packed = Vec::with_capacity(p * (p + 1) / 2);
    for (i, row) in full.iter().enumerate() {
        packed.extend_from_slice(&row[i..]);
    }
    SymmetricMatrix::from_upper(p, packed).expect("gram matrix is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::frobenius_norm_sq;
    use rand::prelude::*;

    #[test]
    fn diagonal_matrix_triplets() {
        let a = DenseMatrix::from_rows_vec(2, 2, vec![5.0, 0.0, 0.0, 3.0]).unwrap();
        let svd = svd_oracle(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(svd.singular_values, vec![5.0, 3.0]);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((svd.left_vectors[i][j].abs() - want).abs() < 1e-14);
                assert!((svd.right_vectors[i][j].abs() - want).abs() < 1e-14);
                // sign convention pairs u and v consistently
                assert!(
                    (svd.left_vectors[i][j] - svd.right_vectors[i][j]).abs() < 1e-14
                );
            }
        }
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let a = DenseMatrix::zeros(3, 2);
        let svd = svd_oracle(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(svd.rank(), 0);
        assert!(svd.singular_values.is_empty());
    }

    #[test]
    fn cap_is_enforced() {
        let a = DenseMatrix::zeros(4, 4);
        let err = svd_oracle_capped(&a, DEFAULT_RANK_TOL, 3).unwrap_err();
        assert!(matches!(err, Error::OracleCapExceeded { min_dim: 4, cap: 3 }));
    }

    #[test]
    fn random_matrix_reconstruction_and_norm() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let a = DenseMatrix::from_rows_vec(
            30,
            8,
            (0..240).map(|_| rng.random::<f64>() - 0.5).collect(),
        )
        .unwrap();
        let svd = svd_oracle(&a, DEFAULT_RANK_TOL).unwrap();
        let norm_sq = frobenius_norm_sq(&a);
        let sum_sq: f64 = svd.singular_values.iter().map(|s| s * s).sum();
        assert!((sum_sq - norm_sq).abs() <= 1e-8 * norm_sq);

        // || A - sum sigma_i u_i v_i^T ||_F <= 1e-8 sigma_1
        let mut resid_sq = 0.0;
        for i in 0..30 {
            for j in 0..8 {
                let mut b = 0.0;
                for q in 0..svd.rank() {
                    b += svd.singular_values[q]
                        * svd.left_vectors[q][i]
                        * svd.right_vectors[q][j];
                }
                let d = a.get(i, j) - b;
                resid_sq += d * d;
            }
        }
        assert!(resid_sq.sqrt() <= 1e-8 * svd.singular_values[0]);
    }

    #[test]
    fn triplet_relations_hold_both_orientations() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for (m, n) in [(12usize, 7usize), (7, 12)] {
            let a = DenseMatrix::from_rows_vec(
                m,
                n,
                (0..m * n).map(|_| rng.random::<f64>() - 0.5).collect(),
            )
            .unwrap();
            let svd = svd_oracle(&a, DEFAULT_RANK_TOL).unwrap();
            let s1 = svd.singular_values[0];
            for q in 0..svd.rank() {
                let sigma = svd.singular_values[q];
                let u = &svd.left_vectors[q];
                let v = &svd.right_vectors[q];
                // A v = sigma u
                let mut err1 = 0.0;
                for i in 0..m {
                    let d = dot(a.row(i), v) - sigma * u[i];
                    err1 += d * d;
                }
                assert!(err1.sqrt() <= 1e-8 * s1);
                // A^T u = sigma v
                let mut atu = vec![0.0; n];
                for i in 0..m {
                    for j in 0..n {
                        atu[j] += a.get(i, j) * u[i];
                    }
                }
                let mut err2 = 0.0;
                for j in 0..n {
                    let d = atu[j] - sigma * v[j];
                    err2 += d * d;
                }
                assert!(err2.sqrt() <= 1e-8 * s1);
            }
        }
    }

    // singular values of A match sqrt of eigenvalues of A^T A
    #[test]
    fn gram_route_consistency() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let a = DenseMatrix::from_rows_vec(
            15,
            6,
            (0..90).map(|_| rng.random::<f64>() - 0.5).collect(),
        )
        .unwrap();
        let svd = svd_oracle(&a, DEFAULT_RANK_TOL).unwrap();
        let eig = eigh_descending(&gram_ata(&a)).unwrap();
        for (i, sigma) in svd.singular_values.iter().enumerate() {
            let from_gram = eig.values[i].max(0.0).sqrt();
            if *sigma >= 1e-6 * svd.singular_values[0] {
                assert!((sigma - from_gram).abs() <= 1e-7 * sigma.max(1e-300));
            }
        }
    }
}
