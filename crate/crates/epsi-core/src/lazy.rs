//! Top-k eigenspace computation: one sweep runs k deflated EPSI updates and
//! then a Rayleigh-Ritz orthogonalization step on the assembled basis.
//!
//! Deflating each update against the already-updated columns and re-extracting
//! Ritz vectors every sweep is what removes the dependence on intermediate
//! eigenvalue gaps: convergence is governed by the gap at k only.

use faer::{Col, ColRef, Mat, MatRef};

use crate::epsi::{converged, woodbury_apply, SolveOptions};
use crate::error::SolveError;
use crate::matrix::{ReferenceDecomposition, SymmetricOperator};
use crate::rng::CounterRng;
use crate::sketch::NystromApprox;
use crate::trace::{ConvergenceTrace, Recorder, RowFlag};

/// Gram-Schmidt breakdown threshold on the projected column norm.
const GS_BREAKDOWN: f64 = 1e-12;

/// Current top-k estimate of a subspace solve.
#[derive(Debug, Clone)]
pub struct SubspaceState {
    /// Orthonormal eigenvector estimates, one per column, descending pairs.
    pub basis: Mat<f64>,
    /// Rayleigh-Ritz eigenvalue estimates, descending at sweep end.
    pub lambdas: Vec<f64>,
    pub sweep: usize,
}

/// Options for the sweep-based solvers.
#[derive(Debug, Clone)]
pub struct LazyOptions {
    pub k: usize,
    pub q_max: usize,
    /// Relative threshold on the worst per-pair residual.
    pub tol: f64,
    pub seed: u64,
}

impl LazyOptions {
    pub fn new(k: usize, q_max: usize, tol: f64, seed: u64) -> Self {
        Self {
            k,
            q_max,
            tol,
            seed,
        }
    }

    pub fn validate(&self, n: usize, ell: usize) -> Result<(), SolveError> {
        if self.k < 1 || self.k > ell || ell > n {
            return Err(SolveError::InvalidOptions(format!(
                "need 1 <= k <= ell <= n, got k = {}, ell = {ell}, n = {n}",
                self.k
            )));
        }
        if self.q_max < 1 {
            return Err(SolveError::InvalidOptions("q_max must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(SolveError::InvalidOptions(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// One deflated EPSI update for column i: with `P = I - U U^T` over the
/// already-updated columns, returns
/// `((P A_hat P) - lambda_hat I)^{-1} ((P A_hat P) - A) u`, unnormalized.
/// One matvec with `A`; the projected approximation is applied in factored
/// form.
pub fn deflated_epsi_update(
    a: &SymmetricOperator,
    nys: &NystromApprox,
    u_partial: MatRef<'_, f64>,
    u: ColRef<'_, f64>,
    lambda_hat: f64,
) -> Result<Col<f64>, SolveError> {
    let n = a.n();
    if u.nrows() != n {
        return Err(SolveError::DimensionMismatch {
            expected: n,
            actual: u.nrows(),
        });
    }
    let au = a.matvec(u);
    deflated_update_with_au(nys, u_partial, u, au.as_ref(), lambda_hat)
}

/// Core of [`deflated_epsi_update`] with the `A u` product supplied, so sweep
/// loops can share it with the Rayleigh quotient.
fn deflated_update_with_au(
    nys: &NystromApprox,
    u_partial: MatRef<'_, f64>,
    u: ColRef<'_, f64>,
    au: ColRef<'_, f64>,
    lambda_hat: f64,
) -> Result<Col<f64>, SolveError> {
    let r = if u_partial.ncols() == 0 {
        nys.apply(u) - au
    } else {
        let pu = u.to_owned() - u_partial * (u_partial.transpose() * u);
        let apu = nys.apply(pu.as_ref());
        let papu = &apu - u_partial * (u_partial.transpose() * &apu);
        &papu - au
    };
    woodbury_apply(u_partial, nys, lambda_hat, r.as_ref())
}

/// Rayleigh-Ritz on span(U): eigendecompose the k-by-k restriction
/// `U^T A U` and rotate `U` by its eigenvectors. Returns the rotated basis
/// and descending Ritz values; k matvecs with `A`. This realizes the top-k
/// eigenpairs of the projected operator without any n-by-n factorization.
pub fn orthogonalization_step(
    a: &SymmetricOperator,
    u: MatRef<'_, f64>,
) -> (Mat<f64>, Vec<f64>) {
    let (basis, lambdas, _au) = orthogonalization_step_full(a, u);
    (basis, lambdas)
}

/// Internal variant that also returns `A * U_new`, reusing the k matvecs, so
/// callers can evaluate per-pair residuals for free.
pub(crate) fn orthogonalization_step_full(
    a: &SymmetricOperator,
    u: MatRef<'_, f64>,
) -> (Mat<f64>, Vec<f64>, Mat<f64>) {
    let n = u.nrows();
    let k = u.ncols();
    let mut au = Mat::zeros(n, k);
    for j in 0..k {
        let col = a.matvec(u.col(j));
        for i in 0..n {
            au[(i, j)] = col[i];
        }
    }
    let mut s = u.transpose() * &au;
    for j in 0..k {
        for i in 0..j {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    let evd = s
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("k-by-k symmetric eigendecomposition cannot fail");
    // Ascending from faer; build the descending rotation.
    let mut rot = Mat::zeros(k, k);
    let mut lambdas = vec![0.0; k];
    for j in 0..k {
        let src = k - 1 - j;
        lambdas[j] = evd.S()[src];
        for i in 0..k {
            rot[(i, j)] = evd.U()[(i, src)];
        }
    }
    let basis = u * &rot;
    let au_new = &au * &rot;
    (basis, lambdas, au_new)
}

/// Append `v` to the first `filled` columns of `basis` after normalizing and
/// two Gram-Schmidt passes. On breakdown the column is replaced by a fresh
/// random direction orthogonal to the block; returns whether a replacement
/// happened.
fn append_orthonormal(
    basis: &mut Mat<f64>,
    filled: usize,
    v: Col<f64>,
    rng: &mut CounterRng,
) -> bool {
    let n = basis.nrows();
    let mut w = v;
    let mut replaced = false;
    loop {
        let norm = w.norm_l2();
        if norm > GS_BREAKDOWN {
            w = w / norm;
            if filled > 0 {
                let block = basis.as_ref().subcols(0, filled);
                let proj = block.transpose() * &w;
                w -= block * &proj;
                let proj2 = block.transpose() * &w;
                w -= block * &proj2;
            }
            let norm2 = w.norm_l2();
            if norm2 > GS_BREAKDOWN {
                w = w / norm2;
                break;
            }
        }
        // Degenerate update: take a random direction orthogonal to the block.
        replaced = true;
        w = rng.unit_col(n);
    }
    for i in 0..n {
        basis[(i, filled)] = w[i];
    }
    replaced
}

/// Sweep-based top-k solve. Each sweep runs the k deflated updates (appending
/// via twice-orthogonalized Gram-Schmidt) and then the orthogonalization
/// step; stops when the worst per-pair relative residual reaches `tol` or at
/// `q_max` sweeps. `u0` defaults to the top-k columns of the sketch factor.
pub fn lazy_epsi_solve(
    a: &SymmetricOperator,
    nys: &NystromApprox,
    u0: Option<MatRef<'_, f64>>,
    opts: &LazyOptions,
    reference: Option<&ReferenceDecomposition>,
) -> Result<(SubspaceState, ConvergenceTrace), SolveError> {
    let n = a.n();
    opts.validate(n, nys.ell())?;
    let k = opts.k;
    let mut current = match u0 {
        Some(m) => {
            if m.nrows() != n || m.ncols() != k {
                return Err(SolveError::DimensionMismatch {
                    expected: n * k,
                    actual: m.nrows() * m.ncols(),
                });
            }
            m.to_owned()
        }
        None => nys.leading_block(k),
    };
    let mut rng = CounterRng::stream(opts.seed, 0xDE71);
    let mut recorder = Recorder::new(a, reference);
    let mut lambdas = vec![0.0; k];
    let mut done = false;
    let mut sweep = 0;

    for q in 1..=opts.q_max {
        sweep = q;
        let mut built = Mat::zeros(n, k);
        let mut sweep_breakdown = false;
        for i in 0..k {
            let u_i = current.col(i);
            // Columns of `current` are unit norm, so one product serves both
            // the Rayleigh estimate and the update's error term.
            let au_i = a.matvec(u_i);
            let lambda_i = crate::epsi::dot(u_i, au_i.as_ref());
            let update = deflated_update_with_au(
                nys,
                built.as_ref().subcols(0, i),
                u_i,
                au_i.as_ref(),
                lambda_i,
            )?;
            if append_orthonormal(&mut built, i, update, &mut rng) {
                sweep_breakdown = true;
            }
        }
        let (basis, ritz, au) = orthogonalization_step_full(a, built.as_ref());
        current = basis;
        lambdas = ritz;

        let mut residuals = vec![0.0; k];
        for i in 0..k {
            let mut rsq = 0.0;
            for r in 0..n {
                let d = au[(r, i)] - lambdas[i] * current[(r, i)];
                rsq += d * d;
            }
            residuals[i] = rsq.sqrt();
        }
        let lam_top = lambdas[0];
        let worst = residuals.iter().cloned().fold(0.0f64, f64::max);
        let is_done = converged(lam_top, worst, opts.tol);
        let flag = if sweep_breakdown {
            RowFlag::Breakdown
        } else if is_done {
            RowFlag::Converged
        } else if q == opts.q_max {
            RowFlag::NotConverged
        } else {
            RowFlag::None
        };
        recorder.record_subspace(q, current.as_ref(), &lambdas, &residuals, flag);
        if sweep_breakdown {
            recorder.mark_breakdown(q);
        }
        if is_done {
            done = true;
            break;
        }
    }

    let mut trace = recorder.finish();
    trace.converged = done;
    Ok((
        SubspaceState {
            basis: current,
            lambdas,
            sweep,
        },
        trace,
    ))
}

/// Convenience: the solve options equivalent used by single-vector wrappers.
pub fn lazy_options_from(opts: &SolveOptions, k: usize) -> LazyOptions {
    LazyOptions::new(k, opts.max_iters, opts.tol, opts.seed)
}
