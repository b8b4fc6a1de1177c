//! Error-powered sketched inverse iteration for the top eigenvector.
//!
//! One step maps the unit iterate `u` to the normalized
//! `(A_hat - lambda_R I)^{-1} (A_hat - A) u`, where `lambda_R` is the Rayleigh
//! quotient of `u` and `A_hat` is the (shifted) factored approximation. Every
//! exact eigenvector of `A` is a fixed point of this map regardless of the
//! approximation quality; the quality only sets the contraction rate. The
//! shifted inverse is applied through the Woodbury identity, so a step costs
//! `O(n ell^2 + ell^3)` plus two matvecs with `A` and never materializes an
//! n-by-n matrix.

use faer::linalg::solvers::Solve;
use faer::{Col, ColRef, Mat, MatRef};

use crate::error::SolveError;
use crate::matrix::{ReferenceDecomposition, SymmetricOperator};
use crate::sketch::NystromApprox;
use crate::trace::{ConvergenceTrace, Recorder, RowFlag};

/// Relative drop threshold for near-zero shifted preconditioner eigenvalues
/// inside the Woodbury solve.
const WOODBURY_DROP_REL: f64 = 1e-14;

/// Breakdown threshold on update norms.
const BREAKDOWN_NORM: f64 = 1e-300;

pub fn dot(a: ColRef<'_, f64>, b: ColRef<'_, f64>) -> f64 {
    debug_assert_eq!(a.nrows(), b.nrows());
    let mut s = 0.0;
    for i in 0..a.nrows() {
        s += a[i] * b[i];
    }
    s
}

/// Current iterate of a single-vector solve.
#[derive(Debug, Clone)]
pub struct EpsiState {
    /// Unit-norm iterate.
    pub u: Col<f64>,
    /// Rayleigh quotient of `u`, recomputed from the normalized iterate.
    pub lambda_r: f64,
    pub iter: usize,
    /// `||A u - lambda_R u||`.
    pub residual: f64,
}

impl EpsiState {
    /// Normalize `u0` and evaluate the eigenpair estimate (one matvec).
    pub fn init(a: &SymmetricOperator, u0: ColRef<'_, f64>) -> Result<Self, SolveError> {
        if u0.nrows() != a.n() {
            return Err(SolveError::DimensionMismatch {
                expected: a.n(),
                actual: u0.nrows(),
            });
        }
        let norm = u0.norm_l2();
        if norm <= BREAKDOWN_NORM {
            return Err(SolveError::ZeroVector);
        }
        let u = u0.to_owned() / norm;
        let au = a.matvec(u.as_ref());
        let lambda_r = dot(u.as_ref(), au.as_ref());
        let residual = (&au - &u * lambda_r).norm_l2();
        Ok(Self {
            u,
            lambda_r,
            iter: 0,
            residual,
        })
    }
}

/// Stopping parameters shared by the single-vector solvers.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative residual threshold: stop once
    /// `||A u - lambda_R u|| <= tol * lambda_R`.
    pub tol: f64,
    pub max_iters: usize,
    /// Seed for default initialization where one is needed.
    pub seed: u64,
}

impl SolveOptions {
    pub fn new(tol: f64, max_iters: usize, seed: u64) -> Self {
        Self {
            tol,
            max_iters,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tol > 0.0) {
            return Err(SolveError::InvalidOptions(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters < 1 {
            return Err(SolveError::InvalidOptions("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// `lambda_R <= 0` never counts as converged: the solvers target the top
/// eigenpair of a PSD matrix.
pub(crate) fn converged(lambda_r: f64, residual: f64, tol: f64) -> bool {
    lambda_r > 0.0 && residual <= tol * lambda_r
}

/// Rayleigh quotient `u^T A u / u^T u` (one matvec).
pub fn rayleigh_quotient(a: &SymmetricOperator, u: ColRef<'_, f64>) -> Result<f64, SolveError> {
    if u.nrows() != a.n() {
        return Err(SolveError::DimensionMismatch {
            expected: a.n(),
            actual: u.nrows(),
        });
    }
    let nsq = dot(u, u);
    if nsq <= BREAKDOWN_NORM {
        return Err(SolveError::ZeroVector);
    }
    let au = a.matvec(u);
    Ok(dot(u, au.as_ref()) / nsq)
}

/// Apply `M^{-1}` for `M = (I - U U^T) A_hat (I - U U^T) - lambda_hat I`
/// through the Woodbury identity, with `A_hat` the shifted factored
/// approximation and `U` an orthonormal deflation block (possibly empty).
///
/// Shifted eigenvalues of magnitude at most `1e-14 * lambda_hat_max` are
/// dropped from the factored form before the ell'-by-ell' inner system is
/// formed; dropping them is the same as treating those directions as absent
/// from `A_hat`. A singular inner system is reported with its smallest
/// singular value so the caller can re-shift.
pub fn woodbury_apply(
    u_deflate: MatRef<'_, f64>,
    nys: &NystromApprox,
    lambda_hat: f64,
    x: ColRef<'_, f64>,
) -> Result<Col<f64>, SolveError> {
    let n = nys.n();
    if x.nrows() != n || u_deflate.nrows() != n && u_deflate.ncols() > 0 {
        return Err(SolveError::DimensionMismatch {
            expected: n,
            actual: x.nrows(),
        });
    }
    if lambda_hat == 0.0 || !lambda_hat.is_finite() {
        return Err(SolveError::ZeroShift);
    }

    let c = nys.shift_c();
    let lam_top = nys.lambda_hat().first().copied().unwrap_or(0.0);
    let drop_tol = WOODBURY_DROP_REL * lam_top;
    let kept: Vec<usize> = (0..nys.ell())
        .filter(|&i| (nys.lambda_hat()[i] - c).abs() > drop_tol)
        .collect();

    if kept.is_empty() {
        // Rank-zero preconditioner: M = -lambda_hat I.
        return Ok(x.to_owned() / -lambda_hat);
    }

    let ell = kept.len();
    let all_kept = ell == nys.ell();
    let u_nys = nys.factor();
    // Factor restricted to the kept columns; borrow when nothing is dropped.
    let kept_owned: Mat<f64>;
    let u_kept: MatRef<'_, f64> = if all_kept {
        u_nys
    } else {
        let mut m = Mat::zeros(n, ell);
        for (jj, &j) in kept.iter().enumerate() {
            for i in 0..n {
                m[(i, jj)] = u_nys[(i, j)];
            }
        }
        kept_owned = m;
        kept_owned.as_ref()
    };

    // W = (I - U U^T) U_kept. The inner gram W^T W expands to
    // S - G^T (2 I - H) G with S = U_kept^T U_kept (cached), G = U^T U_kept,
    // H = U^T U, which keeps the per-apply cost at O(n ell j + ell^2 j)
    // instead of O(n ell^2). W itself is never formed.
    let s_full = nys.factor_gram();
    let mut inner = Mat::zeros(ell, ell);
    if all_kept {
        inner.copy_from(s_full);
    } else {
        for (jj, &j) in kept.iter().enumerate() {
            for (ii, &i) in kept.iter().enumerate() {
                inner[(ii, jj)] = s_full[(i, j)];
            }
        }
    }
    let j_cols = u_deflate.ncols();
    let g = if j_cols > 0 {
        let g = u_deflate.transpose() * u_kept;
        let h = u_deflate.transpose() * u_deflate;
        let mut two_minus_h = Mat::zeros(j_cols, j_cols);
        for jj in 0..j_cols {
            for ii in 0..j_cols {
                two_minus_h[(ii, jj)] = -h[(ii, jj)];
            }
            two_minus_h[(jj, jj)] += 2.0;
        }
        inner -= g.transpose() * &two_minus_h * &g;
        Some(g)
    } else {
        None
    };
    // Solve the inner system in symmetrically scaled form: with
    // D = diag(|lambda_c|^{1/2}), the matrix D (-lambda_hat Lambda_c^{-1} +
    // W^T W) D = -lambda_hat sign(Lambda_c) + D W^T W D has entries bounded
    // by max(|lambda_hat|, lambda_c_max), so near-zero preconditioner
    // eigenvalues no longer blow up the conditioning and the singularity
    // check flags genuine shift collisions only.
    let scale: Vec<f64> = kept
        .iter()
        .map(|&j| (nys.lambda_hat()[j] - c).abs().sqrt())
        .collect();
    for jj in 0..ell {
        for ii in 0..ell {
            inner[(ii, jj)] *= scale[ii] * scale[jj];
        }
    }
    for (jj, &j) in kept.iter().enumerate() {
        inner[(jj, jj)] += -lambda_hat * (nys.lambda_hat()[j] - c).signum();
    }

    // rhs = D W^T x.
    let mut rhs = match &g {
        Some(g) => u_kept.transpose() * x - g.transpose() * (u_deflate.transpose() * x),
        None => u_kept.transpose() * x,
    };
    for jj in 0..ell {
        rhs[jj] *= scale[jj];
    }

    let lu = inner.partial_piv_lu();
    let udiag = lu.U();
    let mut piv_min = f64::INFINITY;
    let mut piv_max = 0.0f64;
    for i in 0..ell {
        let p = udiag[(i, i)].abs();
        piv_min = piv_min.min(p);
        piv_max = piv_max.max(p);
    }
    if !(piv_min > 1e-12 * piv_max) || !piv_max.is_finite() {
        // Confirm and report the actual smallest singular value.
        let sigma_min = inner
            .thin_svd()
            .map(|svd| svd.S()[ell - 1])
            .unwrap_or(f64::NAN);
        return Err(SolveError::SingularInnerSystem { sigma_min });
    }
    let mut z = lu.solve(&rhs);
    for jj in 0..ell {
        z[jj] *= scale[jj];
    }

    // W z = U_kept z - U (G z).
    let wz = match &g {
        Some(g) => u_kept * &z - u_deflate * (g * &z),
        None => u_kept * &z,
    };
    Ok(x.to_owned() / -lambda_hat + wz / lambda_hat)
}

/// One EPSI step: `u' = normalize((A_hat - lambda_R I)^{-1} (A_hat - A) u)`,
/// with the output sign fixed so `u'^T u >= 0`, then a fresh Rayleigh
/// quotient and residual for the new iterate. Two matvecs with `A`.
pub fn epsi_step(
    a: &SymmetricOperator,
    nys: &NystromApprox,
    state: &EpsiState,
) -> Result<EpsiState, SolveError> {
    let u = state.u.as_ref();
    let au = a.matvec(u);
    let r = nys.apply(u) - &au;
    let w = woodbury_apply(MatRef::from_column_major_slice(&[], a.n(), 0), nys, state.lambda_r, r.as_ref())?;
    let norm = w.norm_l2();
    if norm <= BREAKDOWN_NORM || !norm.is_finite() {
        return Err(SolveError::Breakdown { norm });
    }
    let mut u_next = w / norm;
    if dot(u_next.as_ref(), u) < 0.0 {
        u_next = -u_next;
    }
    let au_next = a.matvec(u_next.as_ref());
    let lambda_r = dot(u_next.as_ref(), au_next.as_ref());
    let residual = (&au_next - &u_next * lambda_r).norm_l2();
    Ok(EpsiState {
        u: u_next,
        lambda_r,
        iter: state.iter + 1,
        residual,
    })
}

/// Iterate the EPSI map from `u0` (default: the leading column of the sketch
/// factor) until the relative residual reaches `opts.tol` or `opts.max_iters`
/// is hit; non-convergence is reported in the trace, not as an error.
///
/// The loop reuses each iterate's `A u` product for both the Rayleigh
/// quotient and the next step's error term, so one iteration costs a single
/// matvec with `A` (the standalone [`epsi_step`] pays two).
pub fn epsi_solve(
    a: &SymmetricOperator,
    nys: &NystromApprox,
    u0: Option<ColRef<'_, f64>>,
    opts: &SolveOptions,
    reference: Option<&ReferenceDecomposition>,
) -> Result<(EpsiState, ConvergenceTrace), SolveError> {
    opts.validate()?;
    let start = match u0 {
        Some(v) => v.to_owned(),
        None => nys.leading_vector(),
    };
    if start.nrows() != a.n() {
        return Err(SolveError::DimensionMismatch {
            expected: a.n(),
            actual: start.nrows(),
        });
    }
    let norm = start.norm_l2();
    if norm <= BREAKDOWN_NORM {
        return Err(SolveError::ZeroVector);
    }
    let mut recorder = Recorder::new(a, reference);
    let mut u = start / norm;
    let mut au = a.matvec(u.as_ref());
    let mut lambda = dot(u.as_ref(), au.as_ref());
    let mut residual = (&au - &u * lambda).norm_l2();
    let mut iter = 0;
    let mut did_converge = converged(lambda, residual, opts.tol);
    recorder.record_single(
        0,
        u.as_ref(),
        lambda,
        residual,
        if did_converge { RowFlag::Converged } else { RowFlag::None },
    );

    while !did_converge && iter < opts.max_iters {
        let r = nys.apply(u.as_ref()) - &au;
        let w = woodbury_apply(
            MatRef::from_column_major_slice(&[], a.n(), 0),
            nys,
            lambda,
            r.as_ref(),
        )?;
        let wnorm = w.norm_l2();
        if wnorm <= BREAKDOWN_NORM || !wnorm.is_finite() {
            return Err(SolveError::Breakdown { norm: wnorm });
        }
        let mut next = w / wnorm;
        if dot(next.as_ref(), u.as_ref()) < 0.0 {
            next = -next;
        }
        u = next;
        au = a.matvec(u.as_ref());
        lambda = dot(u.as_ref(), au.as_ref());
        residual = (&au - &u * lambda).norm_l2();
        iter += 1;
        let flag = if converged(lambda, residual, opts.tol) {
            did_converge = true;
            RowFlag::Converged
        } else if iter == opts.max_iters {
            RowFlag::NotConverged
        } else {
            RowFlag::None
        };
        recorder.record_single(iter, u.as_ref(), lambda, residual, flag);
    }
    let mut trace = recorder.finish();
    trace.converged = did_converge;
    Ok((
        EpsiState {
            u,
            lambda_r: lambda,
            iter,
            residual,
        },
        trace,
    ))
}
