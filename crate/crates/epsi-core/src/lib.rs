//! Eigensolvers for symmetric positive semidefinite matrices built around the
//! error-powered sketched inverse iteration (EPSI) and its top-k variant
//! (Lazy-EPSI), with a randomized Nystrom preconditioner applied through the
//! Woodbury identity.
//!
//! The crate is organized as:
//!
//! - [`matrix`]: the [`SymmetricOperator`] abstraction (dense, sparse
//!   coordinate, or composed low-rank-plus-noise storage), Matrix Market I/O,
//!   and synthetic test-matrix generators with exact reference decompositions.
//! - [`sketch`]: randomized Nystrom approximation in factored form, negative
//!   spectral shift calibration, and distortion estimation.
//! - [`epsi`]: the single-vector EPSI iteration and the Woodbury fast solve.
//! - [`lazy`]: the deflated top-k sweep with the Rayleigh-Ritz
//!   orthogonalization step.
//! - [`baselines`]: power iteration, subspace iteration, Davidson's
//!   diagonal-preconditioned update, and inexact Rayleigh quotient iteration.
//! - [`trace`] / [`metrics`]: per-iteration convergence records shared by all
//!   solvers, CSV serialization, and error metrics against a dense reference.
//!
//! All randomness flows through the crate's own seedable counter generator
//! ([`rng::CounterRng`]), so every result is reproducible from a `u64` seed.

pub mod baselines;
pub mod epsi;
pub mod error;
pub mod lazy;
pub mod matrix;
pub mod metrics;
pub mod rng;
pub mod sketch;
pub mod trace;

pub use error::{MatrixError, SketchError, SolveError};
pub use matrix::{
    gen_low_rank_noise, gen_synthetic, load_matrix_market, write_matrix_market,
    ReferenceDecomposition, SpectrumKind, SpectrumSpec, StorageKind, SymmetricOperator,
};
pub use sketch::{
    apply_shift, estimate_distortion, nystrom_approximate, nystrom_with_probe, DistortionEstimate,
    DistortionMode, NystromApprox, Shift,
};
pub use epsi::{epsi_solve, epsi_step, rayleigh_quotient, woodbury_apply, EpsiState, SolveOptions};
pub use lazy::{
    deflated_epsi_update, lazy_epsi_solve, orthogonalization_step, LazyOptions, SubspaceState,
};
pub use trace::{ConvergenceTrace, MetricKind, RowFlag, TraceRow};
