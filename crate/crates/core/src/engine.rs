//! Iterative Monte-Carlo rank-k approximation.
//!
//! The approximant is kept in factored form B_t = sum_i x_i y_i^T with
//! orthonormal x_1..x_k and y_i = A^T x_i. Each iteration reads l sampled
//! columns, extends the basis by modified Gram-Schmidt, diagonalizes the
//! small Gram matrix of the extended Y block and rotates back to the top-k
//! eigendirections. The squared Frobenius norm sum(lambda_i) of B_t never
//! decreases, which drives the stopping rule.

use crate::basis::{mgs_extend, norm, OrthoBasis};
use crate::eigen::eigh_descending;
use crate::error::{Error, Result};
use crate::matrix::{frobenius_norm_sq, gram_of_columns, transpose_times_basis, DenseMatrix};
use crate::sampling::{Orientation, SamplerKind, SamplerState};
use crate::svd::{svd_oracle_capped, DEFAULT_RANK_TOL};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::time::Instant;

/// Default MGS drop tolerance, relative to each candidate's own norm.
pub const DEFAULT_DROP_TOL: f64 = 1e-12;

/// Upper bound on k + l: the small eigenproblem stays (k+l) x (k+l).
pub const SMALL_PROBLEM_CAP: usize = 512;

/// Slack allowed on the monotonicity guarantee, as a multiple of ||A||_F^2.
pub const MONOTONICITY_SLACK: f64 = 1e-8;

/// lambda below this is treated as an exactly-degenerate direction.
pub const DEGENERATE_LAMBDA: f64 = 1e-24;

/// How the top-k rotation of the extended basis is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateStrategy {
    /// Eigendecompose S = Y^T Y directly.
    GramEig,
    /// Take the right singular vectors of Y from the dense SVD oracle.
    SmallSvd,
}

impl UpdateStrategy {
    pub fn label(self) -> &'static str {
        match self {
            UpdateStrategy::GramEig => "gram",
            UpdateStrategy::SmallSvd => "svd",
        }
    }
}

/// Run parameters for the iterative approximation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    /// target rank
    pub k: usize,
    /// columns sampled per iteration
    pub l: usize,
    /// iteration cap N
    pub max_iterations: usize,
    /// stopping threshold: finish once ||B_{t-1}|| / ||B_t|| > 1 - epsilon
    pub epsilon: f64,
    pub seed: u64,
    pub orientation: Orientation,
    pub strategy: UpdateStrategy,
}

impl Config {
    pub fn new(k: usize, l: usize) -> Self {
        Self {
            k,
            l,
            max_iterations: 20,
            epsilon: 1e-3,
            seed: 0,
            orientation: Orientation::Columns,
            strategy: UpdateStrategy::GramEig,
        }
    }

    /// Checks the parameters against the shape of A (after orientation).
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.k == 0 || self.l == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidArgument {
                context: "Config",
                message: "k, l and max_iterations must be positive".into(),
            });
        }
        if self.k > m.min(n) {
            return Err(Error::InvalidArgument {
                context: "Config",
                message: format!("k = {} exceeds min(m, n) = {}", self.k, m.min(n)),
            });
        }
        if self.k + self.l > SMALL_PROBLEM_CAP {
            return Err(Error::InvalidArgument {
                context: "Config",
                message: format!(
                    "k + l = {} exceeds the small-problem cap {SMALL_PROBLEM_CAP}",
                    self.k + self.l
                ),
            });
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument {
                context: "Config",
                message: format!("epsilon must be in (0, 1), got {}", self.epsilon),
            });
        }
        Ok(())
    }
}

/// The factored approximant B_t plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxState {
    /// orthonormal x_1..x_q (q <= k)
    pub x: OrthoBasis,
    /// y_i = A^T x_i, stored column by column, each of length n
    pub y: Vec<Vec<f64>>,
    /// lambda_1 >= ... >= lambda_q >= 0, lambda_i = ||y_i||^2
    pub lambdas: Vec<f64>,
    pub iteration: u64,
    pub columns_seen: BTreeSet<usize>,
}

impl ApproxState {
    pub fn rank(&self) -> usize {
        self.x.len()
    }

    pub fn norm_b_sq(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// Rebuilds a state from stored factors. Shape consistency is checked;
    /// numerical invariants are trusted (the factors come from our own
    /// files).
    pub fn from_parts(
        x: OrthoBasis,
        y: Vec<Vec<f64>>,
        lambdas: Vec<f64>,
        iteration: u64,
        columns_seen: BTreeSet<usize>,
        n: usize,
    ) -> Result<Self> {
        if y.len() != x.len() || lambdas.len() != x.len() {
            return Err(Error::InvalidArgument {
                context: "ApproxState",
                message: format!(
                    "inconsistent factor counts: {} basis vectors, {} y columns, {} lambdas",
                    x.len(),
                    y.len(),
                    lambdas.len()
                ),
            });
        }
        for (i, col) in y.iter().enumerate() {
            if col.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "ApproxState",
                    expected: n,
                    got: col.len(),
                    index: i,
                });
            }
        }
        Ok(Self {
            x,
            y,
            lambdas,
            iteration,
            columns_seen,
        })
    }
}

/// sigma/u/v estimates extracted from a state (sigma_hat = sqrt(lambda)).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularTripletEstimates {
    pub sigma_hat: Vec<f64>,
    pub u_hat: Vec<Vec<f64>>,
    pub v_hat: Vec<Vec<f64>>,
    /// true where lambda was below the degeneracy cutoff and v_hat is zero
    pub degenerate: Vec<bool>,
}

/// Flop counts per iteration, tallied from the standard operation counts
/// with the actual dimensions (see README for the formulas).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopCounters {
    pub mgs: u64,
    pub product: u64,
    pub gram: u64,
    pub eigen: u64,
}

impl FlopCounters {
    fn tally(m: usize, n: usize, prev: usize, drawn: usize, p: usize, target: usize) -> Self {
        let (m, n, prev, drawn, p, target) =
            (m as u64, n as u64, prev as u64, drawn as u64, p as u64, target as u64);
        let added = p - prev;
        FlopCounters {
            mgs: m * (prev + drawn) * (prev + drawn),
            product: added * m * n + target * m * n,
            gram: n * added * (added + 2 * prev + 1) / 2,
            eigen: p * p * p,
        }
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IterationRecord {
    pub t: u64,
    pub indices: Vec<usize>,
    pub cumulative_samples: u64,
    pub norm_b_sq: f64,
    pub residual_sq: f64,
    pub relative_error: f64,
    /// ||B_{t-1}|| / ||B_t||; 1.0 when both norms vanish
    pub improvement_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_s: Option<f64>,
    pub flops: FlopCounters,
}

/// Echo of the parameters that produced a trace.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TraceConfig {
    pub k: usize,
    pub l: usize,
    pub max_iterations: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub sampler: String,
    pub strategy: String,
    pub orientation: Orientation,
}

/// Full per-run convergence record, ready for plotting or serialization.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConvergenceTrace {
    pub config: TraceConfig,
    pub a_norm_sq: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oracle_optimum_relative_error: Option<f64>,
    pub records: Vec<IterationRecord>,
}

impl ConvergenceTrace {
    /// Drops wall-clock measurements so serialized traces are
    /// byte-reproducible across runs.
    pub fn strip_timings(&mut self) {
        for r in &mut self.records {
            r.wall_time_s = None;
        }
    }
}

/// ||A - B||_F^2 from the factored form: A_norm_sq - sum(lambda), clamped
/// at zero. Never materializes A - B.
pub fn residual_norm_sq(a_norm_sq: f64, state: &ApproxState) -> f64 {
    (a_norm_sq - state.norm_b_sq()).max(0.0)
}

/// Entry (i, j) of the approximant, sum_q x_q[i] * y_q[j].
pub fn reconstruct_entry(state: &ApproxState, i: usize, j: usize) -> Result<f64> {
    let m = state.x.dim();
    if i >= m {
        return Err(Error::InvalidArgument {
            context: "reconstruct_entry",
            message: format!("row {i} out of range (m = {m})"),
        });
    }
    if let Some(col) = state.y.first() {
        if j >= col.len() {
            return Err(Error::InvalidArgument {
                context: "reconstruct_entry",
                message: format!("column {j} out of range (n = {})", col.len()),
            });
        }
    }
    Ok(state
        .x
        .vectors()
        .iter()
        .zip(&state.y)
        .map(|(x, y)| x[i] * y[j])
        .sum())
}

/// sigma_hat_i = sqrt(lambda_i), u_hat_i = x_i, v_hat_i = y_i / ||y_i||.
/// Directions with lambda below `DEGENERATE_LAMBDA` get a zero v_hat and a
/// degeneracy flag instead of a blown-up normalization.
pub fn triplet_estimates(state: &ApproxState) -> SingularTripletEstimates {
    let mut sigma_hat = Vec::with_capacity(state.rank());
    let mut v_hat = Vec::with_capacity(state.rank());
    let mut degenerate = Vec::with_capacity(state.rank());
    for (lam, y) in state.lambdas.iter().zip(&state.y) {
        sigma_hat.push(lam.max(0.0).sqrt());
        if *lam < DEGENERATE_LAMBDA {
            v_hat.push(vec![0.0; y.len()]);
            degenerate.push(true);
        } else {
            let nrm = norm(y);
            v_hat.push(y.iter().map(|v| v / nrm).collect());
            degenerate.push(false);
        }
    }
    SingularTripletEstimates {
        sigma_hat,
        u_hat: state.x.vectors().to_vec(),
        v_hat,
        degenerate,
    }
}

/// Rotates an extended orthonormal basis (with its Y block) onto the top
/// `target` eigendirections of S = Y^T Y, recomputes Y = A^T X there and
/// cross-checks lambda_i against ||y_i||^2.
fn rotate_to_top_eigenbasis(
    a: &DenseMatrix,
    basis: &OrthoBasis,
    y_cols: &[Vec<f64>],
    target: usize,
    strategy: UpdateStrategy,
    a_norm_sq: f64,
) -> Result<(OrthoBasis, Vec<Vec<f64>>, Vec<f64>)> {
    let p = basis.len();
    debug_assert!(target >= 1 && target <= p);
    let n = a.cols();

    let mut y_mat = DenseMatrix::zeros(n, p);
    for (i, col) in y_cols.iter().enumerate() {
        for (j, v) in col.iter().enumerate() {
            y_mat.set(j, i, *v);
        }
    }

    // rotation O: p x target, orthonormal columns; lambdas descending
    let (rot, mut lambdas): (Vec<Vec<f64>>, Vec<f64>) = match strategy {
        UpdateStrategy::GramEig => {
            let eig = eigh_descending(&gram_of_columns(&y_mat))?;
            (
                (0..target).map(|i| eig.vector(i)).collect(),
                eig.values[..target].to_vec(),
            )
        }
        UpdateStrategy::SmallSvd => {
            let svd = svd_oracle_capped(&y_mat, DEFAULT_RANK_TOL, SMALL_PROBLEM_CAP)?;
            let mut cols: Vec<Vec<f64>> = svd
                .right_vectors
                .iter()
                .take(target)
                .cloned()
                .collect();
            let mut lams: Vec<f64> = svd
                .singular_values
                .iter()
                .take(target)
                .map(|s| s * s)
                .collect();
            if cols.len() < target {
                // Y is rank-deficient: complete the rotation with null-space
                // directions (lambda = 0 there).
                let partial = OrthoBasis::from_vectors(p, cols)?;
                let complement: Vec<Vec<f64>> = (0..p)
                    .map(|i| {
                        let mut e = vec![0.0; p];
                        e[i] = 1.0;
                        e
                    })
                    .collect();
                let completed = mgs_extend(&partial, &complement, DEFAULT_DROP_TOL)?;
                cols = completed.vectors()[..target].to_vec();
                lams.resize(target, 0.0);
            }
            (cols, lams)
        }
    };

    // x_tilde_j = sum_i x_i * O[i][j]
    let m = a.rows();
    let mut new_x = Vec::with_capacity(target);
    for o in &rot {
        let mut xt = vec![0.0; m];
        for (xi, oi) in basis.vectors().iter().zip(o) {
            if *oi != 0.0 {
                for (r, v) in xi.iter().enumerate() {
                    xt[r] += v * oi;
                }
            }
        }
        new_x.push(xt);
    }
    let new_basis = OrthoBasis::from_vectors(m, new_x)?;

    let y_new = transpose_times_basis(a, &new_basis)?;
    let new_y_cols: Vec<Vec<f64>> = (0..target).map(|i| y_new.column(i)).collect();

    // lambda_i must equal ||A^T x_i||^2 whether taken from the
    // eigensolver or recomputed; a mismatch means a kernel bug, so fail
    // loudly.
    for (i, (lam, col)) in lambdas.iter_mut().zip(&new_y_cols).enumerate() {
        let norm_sq: f64 = col.iter().map(|v| v * v).sum();
        let tol = 1e-8 * lam.abs() + 1e-10 * a_norm_sq.max(1e-300);
        if (*lam - norm_sq).abs() > tol {
            return Err(Error::LambdaMismatch {
                index: i,
                lambda: *lam,
                norm_sq,
            });
        }
        *lam = lam.max(0.0);
    }

    Ok((new_basis, new_y_cols, lambdas))
}

fn check_indices(n: usize, indices: &[usize]) -> Result<()> {
    for &j in indices {
        if j >= n {
            return Err(Error::InvalidArgument {
                context: "column index",
                message: format!("index {j} out of range (n = {n})"),
            });
        }
    }
    Ok(())
}

/// Builds B_0 from k chosen columns. When Gram-Schmidt drops dependent
/// columns, fresh unseen columns (ascending index order) are pulled until
/// either k independent directions are found or the column span is
/// exhausted. The state is then rotated to the eigenbasis of its own Gram
/// matrix so the lambdas are meaningful from iteration zero.
pub fn init_state(a: &DenseMatrix, cfg: &Config, init_indices: &[usize]) -> Result<ApproxState> {
    let (m, n) = (a.rows(), a.cols());
    cfg.validate(m, n)?;
    check_indices(n, init_indices)?;
    let mut seen_list: Vec<usize> = Vec::new();
    for &j in init_indices {
        if seen_list.contains(&j) {
            return Err(Error::InvalidArgument {
                context: "init_state",
                message: format!("duplicate initial index {j}"),
            });
        }
        seen_list.push(j);
    }

    let a_norm_sq = frobenius_norm_sq(a);
    let cols: Vec<Vec<f64>> = init_indices.iter().map(|&j| a.column(j)).collect();
    let mut basis = mgs_extend(&OrthoBasis::empty(m), &cols, DEFAULT_DROP_TOL)?;
    let mut seen: BTreeSet<usize> = init_indices.iter().copied().collect();

    if basis.len() < cfg.k {
        for j in 0..n {
            if basis.len() == cfg.k {
                break;
            }
            if seen.contains(&j) {
                continue;
            }
            seen.insert(j);
            basis = mgs_extend(&basis, &[a.column(j)], DEFAULT_DROP_TOL)?;
        }
    }

    if basis.is_empty() {
        // zero matrix: B_0 = 0
        return Ok(ApproxState {
            x: basis,
            y: Vec::new(),
            lambdas: Vec::new(),
            iteration: 0,
            columns_seen: seen,
        });
    }

    let y = transpose_times_basis(a, &basis)?;
    let y_cols: Vec<Vec<f64>> = (0..basis.len()).map(|i| y.column(i)).collect();
    let target = basis.len().min(cfg.k);
    let (x, y, lambdas) =
        rotate_to_top_eigenbasis(a, &basis, &y_cols, target, cfg.strategy, a_norm_sq)?;
    Ok(ApproxState {
        x,
        y,
        lambdas,
        iteration: 0,
        columns_seen: seen,
    })
}

/// One update pass: extend the basis with l sampled columns, rotate to the
/// top-k eigendirections of the extended Gram matrix. When every sampled
/// column already lies in span(X) the iteration is a recorded no-op.
/// sum(lambda) never decreases (up to `MONOTONICITY_SLACK` * ||A||_F^2).
pub fn update_step(
    a: &DenseMatrix,
    state: &ApproxState,
    new_indices: &[usize],
    cfg: &Config,
) -> Result<ApproxState> {
    update_step_detailed(a, state, new_indices, cfg).map(|(s, _)| s)
}

/// Like `update_step`, also reporting the extended basis size p reached
/// before truncation (for flop accounting).
pub fn update_step_detailed(
    a: &DenseMatrix,
    state: &ApproxState,
    new_indices: &[usize],
    cfg: &Config,
) -> Result<(ApproxState, usize)> {
    let n = a.cols();
    check_indices(n, new_indices)?;
    if state.x.dim() != a.rows() {
        return Err(Error::DimensionMismatch {
            context: "update_step",
            expected: a.rows(),
            got: state.x.dim(),
            index: 0,
        });
    }
    let q = state.rank();
    let cols: Vec<Vec<f64>> = new_indices.iter().map(|&j| a.column(j)).collect();
    let extended = mgs_extend(&state.x, &cols, DEFAULT_DROP_TOL)?;
    let p = extended.len();

    let mut columns_seen = state.columns_seen.clone();
    columns_seen.extend(new_indices.iter().copied());

    if p == q {
        // no new directions beyond the current rank: keep the state
        return Ok((
            ApproxState {
                x: state.x.clone(),
                y: state.y.clone(),
                lambdas: state.lambdas.clone(),
                iteration: state.iteration + 1,
                columns_seen,
            },
            p,
        ));
    }

    let a_norm_sq = frobenius_norm_sq(a);
    let new_vecs = OrthoBasis::from_vectors(a.rows(), extended.vectors()[q..].to_vec())?;
    let y_new_block = transpose_times_basis(a, &new_vecs)?;
    let mut y_cols = state.y.clone();
    for i in 0..p - q {
        y_cols.push(y_new_block.column(i));
    }

    let target = p.min(cfg.k);
    let (x, y, lambdas) =
        rotate_to_top_eigenbasis(a, &extended, &y_cols, target, cfg.strategy, a_norm_sq)?;

    let before = state.norm_b_sq();
    let after: f64 = lambdas.iter().sum();
    if after < before - MONOTONICITY_SLACK * a_norm_sq {
        return Err(Error::MonotonicityViolation { before, after });
    }

    Ok((
        ApproxState {
            x,
            y,
            lambdas,
            iteration: state.iteration + 1,
            columns_seen,
        },
        p,
    ))
}

/// Full algorithm: initialize from k sampled columns, then up to N update
/// passes, stopping once the relative improvement of ||B_t|| drops below
/// epsilon. In `Orientation::Rows` mode the algorithm runs on A^T, so the
/// returned state approximates the row space (x in R^n).
pub fn run(
    a: &DenseMatrix,
    cfg: &Config,
    sampler: &mut SamplerState,
) -> Result<(ApproxState, ConvergenceTrace)> {
    let transposed;
    let work: &DenseMatrix = match cfg.orientation {
        Orientation::Columns => a,
        Orientation::Rows => {
            transposed = a.transpose();
            &transposed
        }
    };
    let (m, n) = (work.rows(), work.cols());
    cfg.validate(m, n)?;
    let a_norm_sq = frobenius_norm_sq(work);

    let sampler_label = match sampler.kind() {
        SamplerKind::UniformWithReplacement => "uniform-wr",
        SamplerKind::UniformWithoutReplacement => "uniform-wor",
        SamplerKind::Weighted(_) => "weighted",
    };
    let mut trace = ConvergenceTrace {
        config: TraceConfig {
            k: cfg.k,
            l: cfg.l,
            max_iterations: cfg.max_iterations,
            epsilon: cfg.epsilon,
            seed: cfg.seed,
            sampler: sampler_label.to_string(),
            strategy: cfg.strategy.label().to_string(),
            orientation: cfg.orientation,
        },
        a_norm_sq,
        oracle_optimum_relative_error: None,
        records: Vec::new(),
    };

    // draw k distinct initial indices (duplicates from with-replacement
    // samplers are retried a bounded number of times)
    let mut cumulative_samples: u64 = 0;
    let mut init_indices: Vec<usize> = Vec::new();
    let mut attempts = 0usize;
    while init_indices.len() < cfg.k && attempts < 20 * cfg.k + 100 {
        let want = cfg.k - init_indices.len();
        let drawn = sampler.next_indices(want)?;
        if drawn.is_empty() {
            break;
        }
        cumulative_samples += drawn.len() as u64;
        attempts += drawn.len();
        for j in drawn {
            if !init_indices.contains(&j) {
                init_indices.push(j);
            }
        }
    }

    let started = Instant::now();
    let mut state = init_state(work, cfg, &init_indices)?;
    let init_time = started.elapsed().as_secs_f64();
    let norm_sq = state.norm_b_sq();
    let zero_floor = 1e-15 * a_norm_sq.sqrt();
    trace.records.push(IterationRecord {
        t: 0,
        indices: init_indices,
        cumulative_samples,
        norm_b_sq: norm_sq,
        residual_sq: residual_norm_sq(a_norm_sq, &state),
        relative_error: relative_error(a_norm_sq, &state),
        improvement_ratio: if norm_sq.sqrt() <= zero_floor { 1.0 } else { 0.0 },
        wall_time_s: Some(init_time),
        flops: FlopCounters::tally(m, n, 0, cfg.k, state.rank(), state.rank()),
    });

    for t in 1..=cfg.max_iterations {
        let indices = sampler.next_indices(cfg.l)?;
        if indices.is_empty() {
            break; // strict sampler exhausted
        }
        cumulative_samples += indices.len() as u64;
        let prev_rank = state.rank();
        let prev_norm_sq = state.norm_b_sq();

        let started = Instant::now();
        let (next, p) = update_step_detailed(work, &state, &indices, cfg)?;
        let elapsed = started.elapsed().as_secs_f64();

        let cur_norm_sq = next.norm_b_sq();
        let prev_norm = prev_norm_sq.sqrt();
        let cur_norm = cur_norm_sq.sqrt();
        let ratio = if prev_norm <= zero_floor && cur_norm <= zero_floor {
            1.0
        } else if cur_norm == 0.0 {
            1.0
        } else {
            (prev_norm / cur_norm).min(1.0 + 1e-10)
        };

        state = next;
        trace.records.push(IterationRecord {
            t: t as u64,
            indices: indices.clone(),
            cumulative_samples,
            norm_b_sq: cur_norm_sq,
            residual_sq: residual_norm_sq(a_norm_sq, &state),
            relative_error: relative_error(a_norm_sq, &state),
            improvement_ratio: ratio,
            wall_time_s: Some(elapsed),
            flops: FlopCounters::tally(m, n, prev_rank, indices.len(), p, state.rank()),
        });

        if ratio > 1.0 - cfg.epsilon {
            break;
        }
    }
    Ok((state, trace))
}

fn relative_error(a_norm_sq: f64, state: &ApproxState) -> f64 {
    if a_norm_sq == 0.0 {
        0.0
    } else {
        residual_norm_sq(a_norm_sq, state) / a_norm_sq
    }
}
