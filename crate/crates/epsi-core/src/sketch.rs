//! Randomized Nystrom approximation in factored form, spectral-shift
//! calibration, and distortion estimation.
//!
//! The construction follows the factored recipe: orthonormalize a Gaussian
//! test matrix, sketch `Y = A Omega`, stabilize with `nu = eps * ||Y||_F`,
//! Cholesky the small gram matrix, and read the approximation off a thin SVD.
//! The represented operator is `U (Lambda_hat - c I) U^T`; the negative shift
//! `c` keeps the preconditioner's spectrum clear of the target eigenvalues.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use faer::{Col, ColRef, Mat, MatRef};

use crate::error::SketchError;
use crate::matrix::SymmetricOperator;
use crate::rng::CounterRng;

/// Cap on the dense distortion oracle.
pub const DENSE_DISTORTION_CAP: usize = 2000;

/// Power iterations used by the cheap residual-norm estimator.
const POWER_RESIDUAL_ITERS: usize = 50;

/// Factored low-rank approximation `A_hat = U (Lambda_hat - c I) U^T` with the
/// stability shift `nu` recorded from construction.
#[derive(Debug, Clone)]
pub struct NystromApprox {
    u_nys: Mat<f64>,
    lambda_hat: Vec<f64>,
    nu: f64,
    shift_c: f64,
    // U^T U, cached at construction where it is computed anyway for the
    // orthonormality check; the Woodbury solve reads it every application.
    gram: Mat<f64>,
}

impl NystromApprox {
    /// Assemble from parts; `u_nys` must have orthonormal columns and
    /// `lambda_hat` must be descending and nonnegative. Also the entry point
    /// for dense test preconditioners built from exact eigenpairs.
    pub fn from_parts(
        u_nys: Mat<f64>,
        lambda_hat: Vec<f64>,
        nu: f64,
        shift_c: f64,
    ) -> Result<Self, SketchError> {
        if u_nys.ncols() != lambda_hat.len() {
            return Err(SketchError::InvalidParts(format!(
                "{} factor columns vs {} eigenvalues",
                u_nys.ncols(),
                lambda_hat.len()
            )));
        }
        if lambda_hat.windows(2).any(|w| w[0] < w[1]) {
            return Err(SketchError::InvalidParts(
                "lambda_hat must be descending".into(),
            ));
        }
        if lambda_hat.iter().any(|&v| !(v >= 0.0)) {
            return Err(SketchError::InvalidParts(
                "lambda_hat must be nonnegative".into(),
            ));
        }
        let gram = u_nys.transpose() * &u_nys;
        let ell = u_nys.ncols();
        for j in 0..ell {
            for i in 0..ell {
                let target = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - target).abs() > 1e-8 {
                    return Err(SketchError::InvalidParts(format!(
                        "factor columns not orthonormal at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            u_nys,
            lambda_hat,
            nu,
            shift_c,
            gram,
        })
    }

    /// Cached `U^T U` of the factor.
    pub(crate) fn factor_gram(&self) -> MatRef<'_, f64> {
        self.gram.as_ref()
    }

    pub fn n(&self) -> usize {
        self.u_nys.nrows()
    }

    pub fn ell(&self) -> usize {
        self.u_nys.ncols()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn shift_c(&self) -> f64 {
        self.shift_c
    }

    pub fn factor(&self) -> MatRef<'_, f64> {
        self.u_nys.as_ref()
    }

    /// Diagonal before the shift, descending.
    pub fn lambda_hat(&self) -> &[f64] {
        &self.lambda_hat
    }

    /// Leading eigenvector estimate (default initializer for the solvers).
    pub fn leading_vector(&self) -> Col<f64> {
        self.u_nys.col(0).to_owned()
    }

    /// Top-k eigenvector estimates.
    pub fn leading_block(&self, k: usize) -> Mat<f64> {
        self.u_nys.as_ref().subcols(0, k).to_owned()
    }

    /// Apply the shifted operator `U (Lambda_hat - c I) U^T`.
    pub fn apply(&self, x: ColRef<'_, f64>) -> Col<f64> {
        let mut t = self.u_nys.transpose() * x;
        for i in 0..t.nrows() {
            t[i] *= self.lambda_hat[i] - self.shift_c;
        }
        &self.u_nys * &t
    }

    /// Apply the unshifted operator `U Lambda_hat U^T`.
    pub fn apply_unshifted(&self, x: ColRef<'_, f64>) -> Col<f64> {
        let mut t = self.u_nys.transpose() * x;
        for i in 0..t.nrows() {
            t[i] *= self.lambda_hat[i];
        }
        &self.u_nys * &t
    }

    /// Materialize the shifted operator (tests and dense oracles).
    pub fn to_dense(&self) -> Mat<f64> {
        let mut scaled = self.u_nys.clone();
        for j in 0..self.ell() {
            let s = self.lambda_hat[j] - self.shift_c;
            for i in 0..self.n() {
                scaled[(i, j)] *= s;
            }
        }
        &scaled * self.u_nys.transpose()
    }

    /// Materialize the unshifted operator.
    pub fn to_dense_unshifted(&self) -> Mat<f64> {
        let mut scaled = self.u_nys.clone();
        for j in 0..self.ell() {
            for i in 0..self.n() {
                scaled[(i, j)] *= self.lambda_hat[j];
            }
        }
        &scaled * self.u_nys.transpose()
    }

    /// Binary sidecar: `n, ell` as u64, then `nu, c`, then row-major `U`,
    /// then `Lambda_hat`, all little-endian 64-bit.
    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<(), SketchError> {
        let mut w = BufWriter::new(File::create(path.as_ref())?);
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        w.write_all(&(self.ell() as u64).to_le_bytes())?;
        w.write_all(&self.nu.to_le_bytes())?;
        w.write_all(&self.shift_c.to_le_bytes())?;
        for i in 0..self.n() {
            for j in 0..self.ell() {
                w.write_all(&self.u_nys[(i, j)].to_le_bytes())?;
            }
        }
        for v in &self.lambda_hat {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self, SketchError> {
        let mut r = BufReader::new(File::open(path.as_ref())?);
        let mut buf8 = [0u8; 8];
        let mut read_u64 = |r: &mut BufReader<File>| -> Result<u64, SketchError> {
            r.read_exact(&mut buf8)
                .map_err(|_| SketchError::SidecarFormat("truncated header".into()))?;
            Ok(u64::from_le_bytes(buf8))
        };
        let n = read_u64(&mut r)? as usize;
        let ell = read_u64(&mut r)? as usize;
        if n == 0 || ell == 0 || ell > n {
            return Err(SketchError::SidecarFormat(format!(
                "implausible dimensions n = {n}, ell = {ell}"
            )));
        }
        let read_f64 = |r: &mut BufReader<File>| -> Result<f64, SketchError> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)
                .map_err(|_| SketchError::SidecarFormat("truncated payload".into()))?;
            Ok(f64::from_le_bytes(b))
        };
        let nu = read_f64(&mut r)?;
        let shift_c = read_f64(&mut r)?;
        let mut u_nys = Mat::zeros(n, ell);
        for i in 0..n {
            for j in 0..ell {
                u_nys[(i, j)] = read_f64(&mut r)?;
            }
        }
        let mut lambda_hat = vec![0.0; ell];
        for v in lambda_hat.iter_mut() {
            *v = read_f64(&mut r)?;
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(SketchError::SidecarFormat("trailing bytes".into()));
        }
        Self::from_parts(u_nys, lambda_hat, nu, shift_c)
    }
}

/// Lower Cholesky that reports the 1-based index of the first non-positive
/// leading minor instead of failing opaquely.
fn cholesky_lower_reporting(g: MatRef<'_, f64>) -> Result<Mat<f64>, usize> {
    let n = g.nrows();
    let mut l = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = g[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(j + 1);
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

fn build_from_probe(
    a: &SymmetricOperator,
    omega: Mat<f64>,
) -> Result<NystromApprox, SketchError> {
    let n = a.n();
    let ell = omega.ncols();

    // Sketch: ell matvecs with A.
    let mut y = Mat::zeros(n, ell);
    for j in 0..ell {
        let col = a.matvec(omega.col(j));
        for i in 0..n {
            y[(i, j)] = col[i];
        }
    }

    // Stability shift at machine-epsilon scale of the sketch; the floor keeps
    // the all-zero sketch factorable.
    let fro = y.norm_l2();
    let mut nu = if fro > 0.0 {
        f64::EPSILON * fro
    } else {
        f64::MIN_POSITIVE
    };

    for attempt in 0..2 {
        let y_nu = &y + &omega * faer::Scale(nu);
        let mut gram = omega.transpose() * &y_nu;
        for j in 0..ell {
            for i in 0..j {
                let avg = 0.5 * (gram[(i, j)] + gram[(j, i)]);
                gram[(i, j)] = avg;
                gram[(j, i)] = avg;
            }
        }
        match cholesky_lower_reporting(gram.as_ref()) {
            Ok(l) => {
                // B = Y_nu C^{-1} with C^T C = gram; equivalently L B^T = Y_nu^T.
                let mut bt = y_nu.transpose().to_owned();
                faer::linalg::triangular_solve::solve_lower_triangular_in_place(
                    l.as_ref(),
                    bt.as_mut(),
                    faer::get_global_parallelism(),
                );
                let b = bt.transpose().to_owned();
                let svd = b
                    .thin_svd()
                    .map_err(|e| SketchError::InvalidParts(format!("thin svd failed: {e:?}")))?;
                let u_nys = svd.U().to_owned();
                let lambda_hat: Vec<f64> = (0..ell)
                    .map(|i| {
                        let s = svd.S()[i];
                        (s * s - nu).max(0.0)
                    })
                    .collect();
                return NystromApprox::from_parts(u_nys, lambda_hat, nu, 0.0);
            }
            Err(minor) => {
                if attempt == 0 {
                    nu *= 10.0;
                } else {
                    return Err(SketchError::CholeskyFailed { nu, minor });
                }
            }
        }
    }
    unreachable!("cholesky retry loop returns on both arms");
}

/// Randomized Nystrom approximation with sketch size `ell`. The test matrix is
/// the thin-Q of an n-by-ell Gaussian drawn from the crate RNG; the returned
/// approximation carries `shift_c = 0`.
pub fn nystrom_approximate(
    a: &SymmetricOperator,
    ell: usize,
    seed: u64,
) -> Result<NystromApprox, SketchError> {
    let n = a.n();
    if ell < 1 || ell > n {
        return Err(SketchError::InvalidSketchSize { ell, n });
    }
    let mut rng = CounterRng::new(seed);
    let g = rng.gaussian_mat(n, ell);
    let omega = g.qr().compute_thin_Q();
    build_from_probe(a, omega)
}

/// Deterministic-probe variant: run the same construction with a caller
/// supplied test matrix (columns are orthonormalized first). Intended for
/// reproducing hand-computable cases.
pub fn nystrom_with_probe(
    a: &SymmetricOperator,
    probe: MatRef<'_, f64>,
) -> Result<NystromApprox, SketchError> {
    let n = a.n();
    let ell = probe.ncols();
    if ell < 1 || ell > n || probe.nrows() != n {
        return Err(SketchError::InvalidSketchSize { ell, n });
    }
    let omega = probe.to_owned().qr().compute_thin_Q();
    build_from_probe(a, omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistortionMode {
    /// Exact spectral norm of `A - A_hat_0` via a dense eigendecomposition;
    /// capped at [`DENSE_DISTORTION_CAP`].
    Dense,
    /// Rayleigh estimate from 50 power iterations on the residual operator;
    /// a lower bound on the true norm.
    PowerResidual,
}

#[derive(Debug, Clone)]
pub struct DistortionEstimate {
    pub eta: f64,
    pub method: DistortionMode,
    pub iters_used: usize,
}

/// Estimate `eta = ||A - A_hat_0||_2` for the unshifted approximation.
pub fn estimate_distortion(
    a: &SymmetricOperator,
    nys: &NystromApprox,
    mode: DistortionMode,
) -> Result<DistortionEstimate, SketchError> {
    let n = a.n();
    match mode {
        DistortionMode::Dense => {
            if n > DENSE_DISTORTION_CAP {
                return Err(SketchError::DenseTooLarge {
                    n,
                    cap: DENSE_DISTORTION_CAP,
                });
            }
            let residual = a.to_dense() - nys.to_dense_unshifted();
            let evd = residual
                .self_adjoint_eigen(faer::Side::Lower)
                .map_err(|e| SketchError::InvalidParts(format!("residual eigen failed: {e:?}")))?;
            let eta = (0..n).map(|i| evd.S()[i].abs()).fold(0.0f64, f64::max);
            Ok(DistortionEstimate {
                eta,
                method: DistortionMode::Dense,
                iters_used: 0,
            })
        }
        DistortionMode::PowerResidual => {
            // Fixed probe seed so the estimate is a pure function of (A, nys).
            let mut rng = CounterRng::new(0x5EED_D157);
            let mut x = rng.unit_col(n);
            let mut rayleigh = 0.0;
            for _ in 0..POWER_RESIDUAL_ITERS {
                let rx = a.matvec(x.as_ref()) - nys.apply_unshifted(x.as_ref());
                let norm = rx.norm_l2();
                if norm == 0.0 {
                    return Ok(DistortionEstimate {
                        eta: 0.0,
                        method: DistortionMode::PowerResidual,
                        iters_used: POWER_RESIDUAL_ITERS,
                    });
                }
                rayleigh = crate::epsi::dot(x.as_ref(), rx.as_ref()).abs();
                x = rx / norm;
            }
            Ok(DistortionEstimate {
                eta: rayleigh,
                method: DistortionMode::PowerResidual,
                iters_used: POWER_RESIDUAL_ITERS,
            })
        }
    }
}

/// Shift selector for [`apply_shift`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shift {
    Value(f64),
    /// Twice the power-residual distortion estimate: a cheap realization of
    /// the `c ~ 2 eta` calibration; the estimator's bias is toward
    /// under-shifting since it is a lower bound on `eta`.
    Auto,
}

/// Return a copy with the requested negative spectral shift. The shift is
/// applied lazily at operator-application time as `Lambda_hat - c I`, without
/// clamping, so shifted diagonal entries may be negative.
pub fn apply_shift(
    a: &SymmetricOperator,
    nys: &NystromApprox,
    shift: Shift,
) -> Result<NystromApprox, SketchError> {
    let c = match shift {
        Shift::Value(c) => {
            if !(c >= 0.0) {
                return Err(SketchError::InvalidParts(format!(
                    "shift must be nonnegative, got {c}"
                )));
            }
            c
        }
        Shift::Auto => 2.0 * estimate_distortion(a, nys, DistortionMode::PowerResidual)?.eta,
    };
    let mut out = nys.clone();
    out.shift_c = c;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{gen_synthetic, ReferenceDecomposition, SpectrumSpec, SymmetricOperator};
    use crate::rng::CounterRng;

    fn spectral_norm_sym(m: MatRef<'_, f64>) -> f64 {
        let evd = m.self_adjoint_eigen(faer::Side::Lower).unwrap();
        (0..m.nrows()).map(|i| evd.S()[i].abs()).fold(0.0f64, f64::max)
    }

    fn max_eig_sym(m: MatRef<'_, f64>) -> f64 {
        let evd = m.self_adjoint_eigen(faer::Side::Lower).unwrap();
        evd.S()[m.nrows() - 1]
    }

    #[test]
    fn zero_matrix_yields_zero_approximation() {
        // The clamp leaves at most denormal dust from squaring sqrt(nu).
        let a = SymmetricOperator::from_dense(Mat::zeros(20, 20)).unwrap();
        let nys = nystrom_approximate(&a, 5, 3).unwrap();
        assert!(nys.lambda_hat().iter().all(|&v| v <= 1e-315));
        let dense = nys.to_dense();
        for j in 0..20 {
            for i in 0..20 {
                assert!(dense[(i, j)].abs() <= 1e-315);
            }
        }
    }

    #[test]
    fn exact_recovery_at_rank() {
        // Rank-5 PSD matrix, sketch size 5: generic exact recovery.
        let mut rng = CounterRng::new(41);
        let g = rng.gaussian_mat(50, 5);
        let a_dense = &g * g.transpose();
        let a = SymmetricOperator::from_dense(a_dense.clone()).unwrap();
        let nys = nystrom_approximate(&a, 5, 11).unwrap();
        let resid = &a.to_dense() - nys.to_dense_unshifted();
        let rel = resid.norm_l2() / a_dense.norm_l2();
        assert!(rel <= 1e-7, "residual frobenius ratio {rel:.3e}");
    }

    #[test]
    fn factor_orthonormal_and_one_sided() {
        let spec = SpectrumSpec::exp_decay(200, 1e3);
        let (a, _) = gen_synthetic(&spec, 2).unwrap();
        let nys = nystrom_approximate(&a, 20, 5).unwrap();
        let gram = nys.factor().transpose() * nys.factor();
        for j in 0..20 {
            for i in 0..20 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - target).abs() <= 1e-10);
            }
        }
        // The unshifted approximation never overshoots A.
        let diff = nys.to_dense_unshifted() - a.to_dense();
        assert!(max_eig_sym(diff.as_ref()) <= 1e-8);
    }

    #[test]
    fn distortion_exact_for_exact_approximation() {
        let mut rng = CounterRng::new(8);
        let g = rng.gaussian_mat(40, 6);
        let a = SymmetricOperator::from_dense(&g * g.transpose()).unwrap();
        let nys = nystrom_approximate(&a, 6, 19).unwrap();
        let lam1 = ReferenceDecomposition::compute(&a).unwrap().values()[0];
        let eta = estimate_distortion(&a, &nys, DistortionMode::Dense)
            .unwrap()
            .eta;
        assert!(eta <= 1e-7 * lam1, "eta {eta:.3e} vs lam1 {lam1:.3e}");
    }

    #[test]
    fn power_residual_tracks_dense() {
        let spec = SpectrumSpec::exp_decay(300, 1e4);
        let (a, _) = gen_synthetic(&spec, 23).unwrap();
        let nys = nystrom_approximate(&a, 30, 7).unwrap();
        let dense = estimate_distortion(&a, &nys, DistortionMode::Dense).unwrap().eta;
        let power = estimate_distortion(&a, &nys, DistortionMode::PowerResidual)
            .unwrap()
            .eta;
        assert!(power <= dense * (1.0 + 1e-10), "lower bound violated");
        let rel = (dense - power) / dense;
        assert!(rel <= 0.05, "power {power:.6e} vs dense {dense:.6e}, rel gap {rel:.3});");
    }

    #[test]
    fn dense_mode_refuses_large_matrices() {
        let a = crate::matrix::gen_low_rank_noise(2100, 4, 0.1, 0.0, 1).unwrap();
        let nys = nystrom_approximate(&a, 4, 1).unwrap();
        match estimate_distortion(&a, &nys, DistortionMode::Dense) {
            Err(SketchError::DenseTooLarge { n, cap }) => {
                assert_eq!(n, 2100);
                assert_eq!(cap, DENSE_DISTORTION_CAP);
            }
            other => panic!("expected size refusal, got {other:?}"),
        }
    }

    #[test]
    fn forced_probe_two_by_two() {
        // A = diag(1, 0.5), probe e1: approximation is diag(1, 0), eta = 0.5.
        let mut m = Mat::zeros(2, 2);
        m[(0, 0)] = 1.0;
        m[(1, 1)] = 0.5;
        let a = SymmetricOperator::from_dense(m).unwrap();
        let mut probe = Mat::zeros(2, 1);
        probe[(0, 0)] = 1.0;
        let nys = nystrom_with_probe(&a, probe.as_ref()).unwrap();
        let d = nys.to_dense_unshifted();
        assert!((d[(0, 0)] - 1.0).abs() <= 1e-12);
        assert!(d[(1, 1)].abs() <= 1e-12);
        let eta = estimate_distortion(&a, &nys, DistortionMode::Dense).unwrap().eta;
        assert!((eta - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn shift_zero_is_identity_and_diagonal_arithmetic_holds() {
        let mut m = Mat::zeros(2, 2);
        m[(0, 0)] = 1.0;
        m[(1, 1)] = 0.5;
        let a = SymmetricOperator::from_dense(m).unwrap();
        let nys = nystrom_approximate(&a, 2, 33).unwrap();
        let same = apply_shift(&a, &nys, Shift::Value(0.0)).unwrap();
        let (d0, d1) = (nys.to_dense(), same.to_dense());
        for j in 0..2 {
            for i in 0..2 {
                assert_eq!(d0[(i, j)].to_bits(), d1[(i, j)].to_bits());
            }
        }
        // Exact rank-2 approximation shifted by 0.2: diag(0.8, 0.3).
        let shifted = apply_shift(&a, &nys, Shift::Value(0.2)).unwrap();
        let d = shifted.to_dense();
        assert!((d[(0, 0)] - 0.8).abs() <= 1e-10);
        assert!((d[(1, 1)] - 0.3).abs() <= 1e-10);
        assert!(d[(0, 1)].abs() <= 1e-10);
    }

    #[test]
    fn shifted_operator_stays_below_a_and_brackets_on_span() {
        // With c = 2 eta the full-space gap A - A_hat stays within
        // [0, 3.1 eta], and restricted to the sketch span it stays within
        // [0.9 eta, 3.1 eta]. The unshifted rank-deficient approximation
        // cannot bracket from below on the orthogonal complement, where
        // A - A_hat equals A itself (tail eigenvalues).
        let spec = SpectrumSpec::exp_decay(200, 1e3);
        let mut on_span_ok = 0;
        let mut global_ok = 0;
        let seeds = 20;
        for seed in 0..seeds {
            let (a, _) = gen_synthetic(&spec, 100 + seed).unwrap();
            let nys = nystrom_approximate(&a, 40, 200 + seed).unwrap();
            let eta = estimate_distortion(&a, &nys, DistortionMode::Dense).unwrap().eta;
            let shifted = apply_shift(&a, &nys, Shift::Value(2.0 * eta)).unwrap();
            let gap = a.to_dense() - shifted.to_dense();
            if spectral_norm_sym(gap.as_ref()) <= 3.1 * eta {
                global_ok += 1;
            }
            let u = shifted.factor();
            let restricted = u.transpose() * &gap * u;
            let evd = restricted.self_adjoint_eigen(faer::Side::Lower).unwrap();
            let min_on_span = evd.S()[0];
            if min_on_span >= 0.9 * eta {
                on_span_ok += 1;
            }
        }
        assert!(global_ok >= 18, "upper bracket held in {global_ok}/{seeds} seeds");
        assert!(on_span_ok >= 18, "lower bracket on span held in {on_span_ok}/{seeds} seeds");
    }

    #[test]
    fn distortion_median_shrinks_with_sketch_size() {
        let spec = SpectrumSpec::exp_decay(200, 1e3);
        let mut small = Vec::new();
        let mut large = Vec::new();
        for seed in 0..20 {
            let (a, _) = gen_synthetic(&spec, 300 + seed).unwrap();
            let nys10 = nystrom_approximate(&a, 10, seed).unwrap();
            let nys40 = nystrom_approximate(&a, 40, seed).unwrap();
            small.push(estimate_distortion(&a, &nys10, DistortionMode::Dense).unwrap().eta);
            large.push(estimate_distortion(&a, &nys40, DistortionMode::Dense).unwrap().eta);
        }
        small.sort_by(f64::total_cmp);
        large.sort_by(f64::total_cmp);
        assert!(
            large[10] <= small[10],
            "median eta at ell=40 ({:.3e}) should not exceed median at ell=10 ({:.3e})",
            large[10],
            small[10]
        );
    }

    #[test]
    fn rank_is_bounded_by_sketch_size() {
        let spec = SpectrumSpec::exp_decay(60, 1e2);
        let (a, _) = gen_synthetic(&spec, 4).unwrap();
        let nys = nystrom_approximate(&a, 7, 4).unwrap();
        let reference = ReferenceDecomposition::compute(
            &SymmetricOperator::from_dense(nys.to_dense_unshifted()).unwrap(),
        )
        .unwrap();
        let lam1 = reference.values()[0];
        for i in 7..60 {
            assert!(reference.values()[i].abs() <= 1e-10 * lam1);
        }
    }

    #[test]
    fn construction_is_deterministic_per_seed() {
        let spec = SpectrumSpec::exp_decay(50, 1e2);
        let (a, _) = gen_synthetic(&spec, 6).unwrap();
        let n1 = nystrom_approximate(&a, 9, 77).unwrap();
        let n2 = nystrom_approximate(&a, 9, 77).unwrap();
        assert_eq!(n1.nu().to_bits(), n2.nu().to_bits());
        for j in 0..9 {
            assert_eq!(n1.lambda_hat()[j].to_bits(), n2.lambda_hat()[j].to_bits());
            for i in 0..50 {
                assert_eq!(n1.factor()[(i, j)].to_bits(), n2.factor()[(i, j)].to_bits());
            }
        }
    }

    #[test]
    fn sidecar_round_trip() {
        let spec = SpectrumSpec::exp_decay(30, 1e2);
        let (a, _) = gen_synthetic(&spec, 15).unwrap();
        let nys = apply_shift(&a, &nystrom_approximate(&a, 6, 15).unwrap(), Shift::Value(0.125))
            .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        nys.save_binary(f.path()).unwrap();
        let loaded = NystromApprox::load_binary(f.path()).unwrap();
        assert_eq!(loaded.n(), 30);
        assert_eq!(loaded.ell(), 6);
        assert_eq!(loaded.nu().to_bits(), nys.nu().to_bits());
        assert_eq!(loaded.shift_c().to_bits(), nys.shift_c().to_bits());
        for j in 0..6 {
            assert_eq!(loaded.lambda_hat()[j].to_bits(), nys.lambda_hat()[j].to_bits());
            for i in 0..30 {
                assert_eq!(loaded.factor()[(i, j)].to_bits(), nys.factor()[(i, j)].to_bits());
            }
        }
    }

    #[test]
    fn sidecar_rejects_truncation() {
        let spec = SpectrumSpec::exp_decay(10, 1e2);
        let (a, _) = gen_synthetic(&spec, 1).unwrap();
        let nys = nystrom_approximate(&a, 3, 1).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        nys.save_binary(f.path()).unwrap();
        let bytes = std::fs::read(f.path()).unwrap();
        std::fs::write(f.path(), &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(
            NystromApprox::load_binary(f.path()),
            Err(SketchError::SidecarFormat(_))
        ));
    }
}
