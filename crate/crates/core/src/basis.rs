//! Orthonormal bases and modified Gram-Schmidt extension.

use crate::error::{Error, Result};

/// An ordered set of orthonormal unit vectors in R^dim.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl OrthoBasis {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            vectors: Vec::new(),
        }
    }

    /// Wraps vectors that are already orthonormal. Only length is checked
    /// here; callers constructing a basis by hand should pass it through
    /// `gram_defect` in tests.
    pub fn from_vectors(dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "OrthoBasis",
                    expected: dim,
                    got: v.len(),
                    index: i,
                });
            }
        }
        Ok(Self { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// max_ij |x_i . x_j - delta_ij|, the orthonormality defect.
    pub fn gram_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for j in i..self.len() {
                let d = dot(&self.vectors[i], &self.vectors[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Extends `basis` with the orthonormalized `candidates`, appended in input
/// order. Each candidate is projected out of the accumulated basis by
/// modified Gram-Schmidt; when the residual loses more than half of the
/// original norm one re-orthogonalization pass is run. A candidate whose
/// residual norm ends up <= drop_tol times its original norm is dropped.
/// The original basis vectors are a prefix of the result, unchanged.
pub fn mgs_extend(
    basis: &OrthoBasis,
    candidates: &[Vec<f64>],
    drop_tol: f64,
) -> Result<OrthoBasis> {
    let dim = basis.dim();
    for (i, c) in candidates.iter().enumerate() {
        if c.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "mgs_extend",
                expected: dim,
                got: c.len(),
                index: i,
            });
        }
    }
    let mut vectors = basis.vectors.clone();
    for cand in candidates {
        let orig_norm = norm(cand);
        if orig_norm == 0.0 {
            continue;
        }
        let mut v = cand.clone();
        orthogonalize_pass(&mut v, &vectors);
        let mut r = norm(&v);
        if r < 0.5 * orig_norm {
            orthogonalize_pass(&mut v, &vectors);
            r = norm(&v);
        }
        if r <= drop_tol * orig_norm {
            continue;
        }
        for x in v.iter_mut() {
            *x /= r;
        }
        vectors.push(v);
    }
    Ok(OrthoBasis { dim, vectors })
}

fn orthogonalize_pass(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        for (vi, bi) in v.iter_mut().zip(b) {
            *vi -= c * bi;
        }
    }
}
