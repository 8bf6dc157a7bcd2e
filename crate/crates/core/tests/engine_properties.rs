//! Cross-cutting invariants of the iterative engine, checked against the
//! dense SVD oracle and explicit reconstructions.

use lowrank::engine::{update_step, Config, UpdateStrategy};
use lowrank::{
    frobenius_norm_sq, init_state, reconstruct_entry, residual_norm_sq, run, svd_oracle,
    DenseMatrix, Orientation, SamplerKind, SamplerState, DEFAULT_RANK_TOL,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn random_matrix(m: usize, n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_rows_vec(
        m,
        n,
        (0..m * n).map(|_| rng.random::<f64>() - 0.5).collect(),
    )
    .unwrap()
}

fn sampler_for(i: usize, seed: u64, n: usize) -> SamplerState {
    let kind = match i % 3 {
        0 => SamplerKind::UniformWithReplacement,
        1 => SamplerKind::UniformWithoutReplacement,
        _ => SamplerKind::Weighted((1..=n).map(|j| j as f64).collect()),
    };
    SamplerState::new(kind, seed, n).unwrap()
}

// sum(lambda) is non-decreasing across iterations, and lambda_i tracks
// ||A^T x_i||^2 after every update
#[test]
fn monotonicity_and_lambda_identity_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for case in 0..120 {
        let m = rng.random_range(4..30);
        let n = rng.random_range(4..30);
        let a = random_matrix(m, n, &mut rng);
        let a_norm_sq = frobenius_norm_sq(&a);
        let k = rng.random_range(1..=m.min(n).min(5));
        let mut cfg = Config::new(k, rng.random_range(1..=4));
        cfg.max_iterations = 4;
        cfg.epsilon = 1e-9;
        let mut sampler = sampler_for(case, case as u64, n);
        let (state, trace) = run(&a, &cfg, &mut sampler).unwrap();

        let mut prev = 0.0;
        for r in &trace.records {
            assert!(
                r.norm_b_sq >= prev - 1e-8 * a_norm_sq,
                "case {case}: norm fell from {prev} to {}",
                r.norm_b_sq
            );
            prev = r.norm_b_sq;
        }
        for (lam, y) in state.lambdas.iter().zip(&state.y) {
            let norm_sq: f64 = y.iter().map(|v| v * v).sum();
            assert!((lam - norm_sq).abs() <= 1e-8 * lam.max(1e-8 * a_norm_sq));
        }
        // lambdas sorted non-increasing
        assert!(state.lambdas.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}

// Upper bound: sum(lambda) <= sum of the k largest
// squared singular values of A
#[test]
fn lambda_sum_never_exceeds_oracle_top_k() {
    let mut rng = ChaCha8Rng::seed_from_u64(2000);
    for case in 0..40 {
        let m = rng.random_range(5..25);
        let n = rng.random_range(5..25);
        let a = random_matrix(m, n, &mut rng);
        let a_norm_sq = frobenius_norm_sq(&a);
        let k = rng.random_range(1..=4.min(m.min(n)));
        let mut cfg = Config::new(k, 3);
        cfg.max_iterations = 3;
        cfg.epsilon = 1e-9;
        let mut sampler = sampler_for(case, 50 + case as u64, n);
        let (state, _) = run(&a, &cfg, &mut sampler).unwrap();
        let svd = svd_oracle(&a, DEFAULT_RANK_TOL).unwrap();
        let top_k: f64 = svd.singular_values.iter().take(k).map(|s| s * s).sum();
        assert!(state.norm_b_sq() <= top_k + 1e-8 * a_norm_sq);
    }
}

// residual from the norm identity matches the explicitly materialized
// || A - B ||_F^2
#[test]
fn residual_identity_against_explicit_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(3000);
    for case in 0..30 {
        let m = rng.random_range(5..40);
        let n = rng.random_range(5..40);
        let a = random_matrix(m, n, &mut rng);
        let a_norm_sq = frobenius_norm_sq(&a);
        let k = rng.random_range(1..=4.min(m.min(n)));
        let mut cfg = Config::new(k, 2);
        cfg.max_iterations = 3;
        cfg.epsilon = 1e-9;
        let mut sampler = sampler_for(case, 90 + case as u64, n);
        let (state, _) = run(&a, &cfg, &mut sampler).unwrap();

        let mut explicit = 0.0;
        for i in 0..m {
            for j in 0..n {
                let d = a.get(i, j) - reconstruct_entry(&state, i, j).unwrap();
                explicit += d * d;
            }
        }
        let fast = residual_norm_sq(a_norm_sq, &state);
        assert!(
            (fast - explicit).abs() <= 1e-10 * explicit.max(a_norm_sq * 1e-12),
            "case {case}: fast {fast} explicit {explicit}"
        );
    }
}

// a single update whose sampled columns span col(A) lands on the oracle's
// best rank-k approximant
#[test]
fn spanning_update_is_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(4000);
    for _case in 0..20 {
        let m = rng.random_range(6..20);
        let n = rng.random_range(4..12);
        let rank = rng.random_range(2..=n.min(6));
        // rank-deficient product of random factors
        let left = random_matrix(m, rank, &mut rng);
        let right = random_matrix(rank, n, &mut rng);
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut s = 0.0;
                for q in 0..rank {
                    s += left.get(i, q) * right.get(q, j);
                }
                data[i * n + j] = s;
            }
        }
        let a = DenseMatrix::from_rows_vec(m, n, data).unwrap();
        let a_norm = frobenius_norm_sq(&a).sqrt();
        let k = rng.random_range(1..rank);
        let cfg = Config::new(k, n);
        let state = init_state(&a, &cfg, &[0]).unwrap();
        let state = update_step(&a, &state, &(0..n).collect::<Vec<_>>(), &cfg).unwrap();

        let svd = svd_oracle(&a, DEFAULT_RANK_TOL).unwrap();
        let optimal = svd.optimal_residual_sq(k).sqrt();
        let achieved = residual_norm_sq(frobenius_norm_sq(&a), &state).sqrt();
        assert!(
            achieved <= optimal + 1e-8 * a_norm,
            "achieved {achieved} vs optimal {optimal}"
        );
    }
}

// gram_eig and small_svd strategies agree on sum(lambda) over the same
// sample sequence
#[test]
fn strategies_are_equivalent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5000);
    for case in 0..25 {
        let m = rng.random_range(5..25);
        let n = rng.random_range(5..25);
        let a = random_matrix(m, n, &mut rng);
        let k = rng.random_range(1..=4.min(m.min(n)));
        let mut cfg = Config::new(k, 3);
        cfg.max_iterations = 3;
        cfg.epsilon = 1e-9;
        let seed = 700 + case as u64;

        let mut traces = Vec::new();
        for strategy in [UpdateStrategy::GramEig, UpdateStrategy::SmallSvd] {
            let mut cfg = cfg.clone();
            cfg.strategy = strategy;
            let mut sampler =
                SamplerState::new(SamplerKind::UniformWithReplacement, seed, n).unwrap();
            let (state, _) = run(&a, &cfg, &mut sampler).unwrap();
            traces.push(state.norm_b_sq());
        }
        let scale = traces[0].abs().max(1e-12);
        assert!(
            (traces[0] - traces[1]).abs() <= 1e-8 * scale,
            "case {case}: {} vs {}",
            traces[0],
            traces[1]
        );
    }
}

// rows mode on A is columns mode on A^T, trace for trace
#[test]
fn orientation_duality() {
    let mut rng = ChaCha8Rng::seed_from_u64(6000);
    for case in 0..10 {
        let a = random_matrix(12, 7, &mut rng);
        let at = a.transpose();
        let mut cfg = Config::new(3, 2);
        cfg.max_iterations = 4;
        cfg.epsilon = 1e-9;

        let mut cfg_rows = cfg.clone();
        cfg_rows.orientation = Orientation::Rows;
        let mut s1 = SamplerState::new(SamplerKind::UniformWithReplacement, case, 12).unwrap();
        let (state_rows, mut trace_rows) = run(&a, &cfg_rows, &mut s1).unwrap();

        let mut s2 = SamplerState::new(SamplerKind::UniformWithReplacement, case, 12).unwrap();
        let (state_cols, mut trace_cols) = run(&at, &cfg, &mut s2).unwrap();

        assert_eq!(state_rows.lambdas, state_cols.lambdas);
        assert_eq!(state_rows.x, state_cols.x);
        trace_rows.strip_timings();
        trace_cols.strip_timings();
        trace_cols.config.orientation = Orientation::Rows;
        assert_eq!(trace_rows, trace_cols);
    }
}

// improvement ratio never exceeds 1 (up to slack) and relative error is
// non-increasing along a trace
#[test]
fn trace_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(7000);
    for case in 0..30 {
        let m = rng.random_range(5..30);
        let n = rng.random_range(5..30);
        let a = random_matrix(m, n, &mut rng);
        let k = rng.random_range(1..=4.min(m.min(n)));
        let mut cfg = Config::new(k, 2);
        cfg.max_iterations = 5;
        cfg.epsilon = 1e-9;
        let mut sampler = sampler_for(case, 123 + case as u64, n);
        let (_, trace) = run(&a, &cfg, &mut sampler).unwrap();
        let mut prev_err = f64::INFINITY;
        for (i, r) in trace.records.iter().enumerate() {
            assert_eq!(r.t as usize, i);
            assert!(r.improvement_ratio <= 1.0 + 1e-10);
            assert!(r.residual_sq >= 0.0);
            assert!(r.relative_error <= prev_err + 1e-10);
            prev_err = r.relative_error;
        }
    }
}
