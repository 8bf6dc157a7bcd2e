//! Seeded index samplers: uniform with replacement, uniform without
//! replacement (epoch-based), and weighted i.i.d. sampling.
//!
//! All randomness comes from ChaCha8 seeded with a single u64, so index
//! streams are reproducible bit-for-bit. Uniform-with-replacement and
//! weighted sampling share one cumulative-weight inversion path: uniform
//! weights therefore produce exactly the with-replacement stream.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Which sampling scheme drives index selection.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplerKind {
    UniformWithReplacement,
    UniformWithoutReplacement,
    /// i.i.d. draws with probability w_j / sum(w).
    Weighted(Vec<f64>),
}

/// Row or column orientation for weight extraction and the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Orientation {
    Columns,
    Rows,
}

#[derive(Debug, Clone)]
pub struct SamplerState {
    kind: SamplerKind,
    rng: ChaCha8Rng,
    n: usize,
    /// ascending pool of not-yet-drawn indices (without-replacement only)
    pool: Vec<usize>,
    epoch: u64,
    /// when set, exhaustion yields a short draw instead of a new epoch
    strict: bool,
    /// cumulative weights for the inversion path (weighted and uniform-wr)
    cumulative: Vec<f64>,
}

impl SamplerState {
    pub fn new(kind: SamplerKind, seed: u64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument {
                context: "SamplerState",
                message: "index space must be non-empty".into(),
            });
        }
        let cumulative = match &kind {
            SamplerKind::UniformWithReplacement => cumsum(&vec![1.0; n])?,
            SamplerKind::Weighted(w) => {
                if w.len() != n {
                    return Err(Error::InvalidArgument {
                        context: "SamplerState",
                        message: format!("weight vector length {} != n = {n}", w.len()),
                    });
                }
                cumsum(w)?
            }
            SamplerKind::UniformWithoutReplacement => Vec::new(),
        };
        let pool = match kind {
            SamplerKind::UniformWithoutReplacement => (0..n).collect(),
            _ => Vec::new(),
        };
        Ok(Self {
            kind,
            rng: ChaCha8Rng::seed_from_u64(seed),
            n,
            pool,
            epoch: 0,
            strict: false,
            cumulative,
        })
    }

    /// Disables epoch resets: once the pool is exhausted, draws come back
    /// short and then empty.
    pub fn strict_exhaustion(mut self) -> Self {
        self.strict = true;
        self
    }

    pub fn kind(&self) -> &SamplerKind {
        &self.kind
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Draws l indices from 0..n and advances the stream.
    pub fn next_indices(&mut self, l: usize) -> Result<Vec<usize>> {
        if l == 0 {
            return Err(Error::InvalidArgument {
                context: "next_indices",
                message: "l must be >= 1".into(),
            });
        }
        let mut out = Vec::with_capacity(l);
        match self.kind {
            SamplerKind::UniformWithReplacement | SamplerKind::Weighted(_) => {
                for _ in 0..l {
                    out.push(self.draw_weighted());
                }
            }
            SamplerKind::UniformWithoutReplacement => {
                while out.len() < l {
                    if self.pool.is_empty() {
                        if self.strict {
                            break;
                        }
                        self.pool = (0..self.n).collect();
                        self.epoch += 1;
                    }
                    let u: f64 = self.rng.random();
                    let idx = ((u * self.pool.len() as f64) as usize).min(self.pool.len() - 1);
                    out.push(self.pool.remove(idx));
                }
            }
        }
        Ok(out)
    }

    fn draw_weighted(&mut self) -> usize {
        let total = *self.cumulative.last().expect("non-empty cumulative");
        let u: f64 = self.rng.random();
        let target = u * total;
        // first index whose cumulative weight strictly exceeds the target;
        // zero-weight indices are unreachable
        self.cumulative.partition_point(|&c| c <= target).min(self.n - 1)
    }
}

fn cumsum(weights: &[f64]) -> Result<Vec<f64>> {
    let mut cum = Vec::with_capacity(weights.len());
    let mut total = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidArgument {
                context: "SamplerState",
                message: format!("weight {i} is invalid: {w}"),
            });
        }
        total += w;
        cum.push(total);
    }
    if total <= 0.0 {
        return Err(Error::InvalidArgument {
            context: "SamplerState",
            message: "weights must not all be zero".into(),
        });
    }
    Ok(cum)
}

/// Squared Euclidean norm of each row (or column) of A, the standard
/// norm-proportional sampling weights.
pub fn weights_from_row_norms(a: &DenseMatrix, axis: Orientation) -> Vec<f64> {
    match axis {
        Orientation::Rows => (0..a.rows())
            .map(|i| a.row(i).iter().map(|v| v * v).sum())
            .collect(),
        Orientation::Columns => {
            let mut w = vec![0.0; a.cols()];
            for i in 0..a.rows() {
                for (j, v) in a.row(i).iter().enumerate() {
                    w[j] += v * v;
                }
            }
            w
        }
    }
}

/// Per-row weights from the gradient magnitude of a grayscale image:
/// central differences in the interior, one-sided at the borders, each
/// row's weight the sum of its pixel gradient magnitudes. A flat image
/// falls back to uniform weights.
pub fn weights_from_gradient_image(img: &DenseMatrix) -> Result<Vec<f64>> {
    let (m, n) = (img.rows(), img.cols());
    if m < 2 || n < 2 {
        return Err(Error::InvalidArgument {
            context: "weights_from_gradient_image",
            message: format!("image must be at least 2x2, got {m}x{n}"),
        });
    }
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut row_sum = 0.0;
        for j in 0..n {
            let gx = if j == 0 {
                img.get(i, 1) - img.get(i, 0)
            } else if j == n - 1 {
                img.get(i, n - 1) - img.get(i, n - 2)
            } else {
                (img.get(i, j + 1) - img.get(i, j - 1)) / 2.0
            };
            let gy = if i == 0 {
                img.get(1, j) - img.get(0, j)
            } else if i == m - 1 {
                img.get(m - 1, j) - img.get(m - 2, j)
            } else {
                (img.get(i + 1, j) - img.get(i - 1, j)) / 2.0
            };
            row_sum += (gx * gx + gy * gy).sqrt();
        }
        weights[i] = row_sum;
    }
    if weights.iter().all(|&w| w == 0.0) {
        weights = vec![1.0; m];
    }
    Ok(weights)
}
