//! Iterative Monte-Carlo rank-k matrix approximation.
//!
//! Reads O(k) columns (or rows) of a dense matrix per pass, extends an
//! orthonormal basis by modified Gram-Schmidt, solves a small symmetric
//! eigenproblem, and never worsens the approximation between iterations.
//! A dense SVD oracle and seeded samplers support convergence
//! benchmarking against the optimal rank-k error.

pub mod basis;
pub mod engine;
pub mod eigen;
pub mod error;
pub mod io;
pub mod matrix;
pub mod sampling;
pub mod svd;

pub use basis::{mgs_extend, OrthoBasis};
pub use eigen::{eigh_descending, EigenResult};
pub use engine::{
    init_state, reconstruct_entry, residual_norm_sq, run, triplet_estimates, update_step,
    ApproxState, Config, ConvergenceTrace, FlopCounters, IterationRecord,
    SingularTripletEstimates, UpdateStrategy,
};
pub use error::{Error, Result};
pub use matrix::{
    frobenius_norm_sq, gram_of_columns, transpose_times_basis, DenseMatrix, SymmetricMatrix,
};
pub use sampling::{
    weights_from_gradient_image, weights_from_row_norms, Orientation, SamplerKind, SamplerState,
};
pub use svd::{svd_oracle, svd_oracle_capped, SvdResult, DEFAULT_DIM_CAP, DEFAULT_RANK_TOL};
