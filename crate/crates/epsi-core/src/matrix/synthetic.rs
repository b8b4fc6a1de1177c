//! Synthetic test matrices with known spectra, and dense reference
//! decompositions used by metrics and oracles.

use faer::{ColRef, Mat, MatRef};

use super::{LowRankFactors, SymmetricOperator};
use crate::error::MatrixError;
use crate::rng::CounterRng;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumKind {
    /// Eigenvalues decay geometrically from 1 down to `1/kappa`.
    ExpDecay { kappa: f64 },
    /// Low-rank signal of rank `s` plus full Gaussian noise; realized by
    /// [`gen_low_rank_noise`], not by [`gen_synthetic`].
    LowRankNoise { s: usize, sigma1: f64, sigma2: f64 },
    /// Explicit eigenvalue list, descending and nonnegative.
    Custom { eigs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    pub n: usize,
    pub kind: SpectrumKind,
}

impl SpectrumSpec {
    pub fn exp_decay(n: usize, kappa: f64) -> Self {
        Self {
            n,
            kind: SpectrumKind::ExpDecay { kappa },
        }
    }

    pub fn custom(eigs: Vec<f64>) -> Self {
        Self {
            n: eigs.len(),
            kind: SpectrumKind::Custom { eigs },
        }
    }

    pub fn low_rank_noise(n: usize, s: usize, sigma1: f64, sigma2: f64) -> Self {
        Self {
            n,
            kind: SpectrumKind::LowRankNoise { s, sigma1, sigma2 },
        }
    }

    pub fn validate(&self) -> Result<(), MatrixError> {
        if self.n == 0 {
            return Err(MatrixError::InvalidSpec("dimension must be >= 1".into()));
        }
        match &self.kind {
            SpectrumKind::ExpDecay { kappa } => {
                if !(*kappa > 1.0) {
                    return Err(MatrixError::InvalidSpec(format!(
                        "exp_decay requires kappa > 1, got {kappa}"
                    )));
                }
            }
            SpectrumKind::LowRankNoise { s, sigma1, sigma2 } => {
                if *s < 1 || *s > self.n {
                    return Err(MatrixError::InvalidSpec(format!(
                        "low_rank_noise requires 1 <= s <= n, got s = {s}, n = {}",
                        self.n
                    )));
                }
                if !(*sigma1 >= 0.0) || !(*sigma2 >= 0.0) {
                    return Err(MatrixError::InvalidSpec(
                        "low_rank_noise std-devs must be nonnegative".into(),
                    ));
                }
            }
            SpectrumKind::Custom { eigs } => {
                if eigs.len() != self.n {
                    return Err(MatrixError::InvalidSpec(format!(
                        "custom eigenvalue list has length {}, expected n = {}",
                        eigs.len(),
                        self.n
                    )));
                }
                if eigs.windows(2).any(|w| w[0] < w[1]) {
                    return Err(MatrixError::InvalidSpec(
                        "custom eigenvalues must be sorted descending".into(),
                    ));
                }
                if eigs.iter().any(|&v| !(v >= 0.0)) {
                    return Err(MatrixError::InvalidSpec(
                        "custom eigenvalues must be nonnegative".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Eigenvalues realized by [`gen_synthetic`] for this spec, descending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, MatrixError> {
        self.validate()?;
        match &self.kind {
            SpectrumKind::ExpDecay { kappa } => {
                let n = self.n;
                if n == 1 {
                    return Ok(vec![1.0]);
                }
                let log_kappa = kappa.ln();
                Ok((0..n)
                    .map(|i| (-log_kappa * i as f64 / (n - 1) as f64).exp())
                    .collect())
            }
            SpectrumKind::Custom { eigs } => Ok(eigs.clone()),
            SpectrumKind::LowRankNoise { .. } => Err(MatrixError::InvalidSpec(
                "low_rank_noise spectra are realized by gen_low_rank_noise".into(),
            )),
        }
    }
}

/// Dense ground-truth eigenpairs: orthonormal eigenvector columns paired with
/// descending eigenvalues. Used by tests and reference metrics only.
#[derive(Debug, Clone)]
pub struct ReferenceDecomposition {
    vectors: Mat<f64>,
    values: Vec<f64>,
}

impl ReferenceDecomposition {
    pub fn new(vectors: Mat<f64>, values: Vec<f64>) -> Self {
        assert_eq!(vectors.ncols(), values.len());
        Self { vectors, values }
    }

    /// Full eigendecomposition of a materialized operator, descending order.
    pub fn compute(op: &SymmetricOperator) -> Result<Self, MatrixError> {
        let dense = op.to_dense();
        let evd = dense
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| MatrixError::InvalidSpec(format!("eigendecomposition failed: {e:?}")))?;
        let n = op.n();
        let mut vectors = Mat::zeros(n, n);
        let mut values = vec![0.0; n];
        // faer returns ascending eigenvalues; flip to descending.
        for j in 0..n {
            let src = n - 1 - j;
            values[j] = evd.S()[src];
            for i in 0..n {
                vectors[(i, j)] = evd.U()[(i, src)];
            }
        }
        Ok(Self { vectors, values })
    }

    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> MatRef<'_, f64> {
        self.vectors.as_ref()
    }

    pub fn eigvec(&self, i: usize) -> ColRef<'_, f64> {
        self.vectors.col(i)
    }

    /// Top-k eigenvector block.
    pub fn top(&self, k: usize) -> MatRef<'_, f64> {
        self.vectors.as_ref().subcols(0, k)
    }

    /// `(spectral, frobenius)` norms of `V2^T U` where `V2` spans eigenvectors
    /// `k+1..n`, computed from the explicit product so exact subspaces score
    /// zero to machine precision. `U` need not be square.
    pub fn subspace_error(&self, u: MatRef<'_, f64>, k: usize) -> (f64, f64) {
        let n = self.n();
        let tail = self.vectors.as_ref().subcols(k, n - k);
        let g2 = tail.transpose() * u;
        let frobenius = g2.norm_l2();
        let spectral = match g2.thin_svd() {
            Ok(svd) => {
                if g2.ncols().min(g2.nrows()) == 0 {
                    0.0
                } else {
                    svd.S()[0]
                }
            }
            Err(_) => f64::NAN,
        };
        (spectral, frobenius)
    }

    /// Single-vector convenience: `||V2^T u||` for the top-k split.
    pub fn subspace_error_vec(&self, u: ColRef<'_, f64>, k: usize) -> f64 {
        let n = self.n();
        let tail = self.vectors.as_ref().subcols(k, n - k);
        (tail.transpose() * u).norm_l2()
    }

    /// Check the defining invariants at the stated tolerances; returns the
    /// worst orthonormality and relative residual defects.
    pub fn defects(&self, op: &SymmetricOperator) -> (f64, f64) {
        let v = &self.vectors;
        let gram = v.transpose() * v;
        let n = self.n();
        let mut ortho = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((gram[(i, j)] - target).abs());
            }
        }
        let lam1 = self.values[0].abs().max(f64::MIN_POSITIVE);
        let mut resid = 0.0f64;
        for j in 0..n {
            let av = op.matvec_quiet(v.col(j));
            let r = &av - v.col(j) * self.values[j];
            resid = resid.max(r.norm_l2() / lam1);
        }
        (ortho, resid)
    }
}

/// Haar-distributed random orthogonal matrix: thin QR of a standard Gaussian
/// with the factor signs fixed so R has nonnegative diagonal.
pub fn haar_orthogonal(n: usize, rng: &mut CounterRng) -> Mat<f64> {
    let g = rng.gaussian_mat(n, n);
    let qr = g.qr();
    let mut q = qr.compute_thin_Q();
    let r = qr.thin_R();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Build `A = Q diag(eigs) Q^T` for a Haar-random `Q`, returning the operator
/// together with its exact decomposition. Deterministic given `(spec, seed)`.
pub fn gen_synthetic(
    spec: &SpectrumSpec,
    seed: u64,
) -> Result<(SymmetricOperator, ReferenceDecomposition), MatrixError> {
    let eigs = spec.eigenvalues()?;
    let n = spec.n;
    let mut rng = CounterRng::new(seed);
    let q = haar_orthogonal(n, &mut rng);
    let mut scaled = q.clone();
    for j in 0..n {
        for i in 0..n {
            scaled[(i, j)] *= eigs[j];
        }
    }
    let a = &scaled * q.transpose();
    let op = SymmetricOperator::from_dense(a)?;
    Ok((op, ReferenceDecomposition::new(q, eigs)))
}

/// Composed low-rank-plus-noise operator `A = B B^T` with
/// `B = L1 L2^T + E`, where `L1, L2` are n-by-s Gaussians with entry std-dev
/// `sigma1` and `E` is an n-by-n Gaussian with std-dev `sigma2`. The product
/// is applied factor-by-factor and never materialized by the solvers.
pub fn gen_low_rank_noise(
    n: usize,
    s: usize,
    sigma1: f64,
    sigma2: f64,
    seed: u64,
) -> Result<SymmetricOperator, MatrixError> {
    SpectrumSpec::low_rank_noise(n, s, sigma1, sigma2).validate()?;
    let mut rng = CounterRng::new(seed);
    let mut left = rng.gaussian_mat(n, s);
    let mut right = rng.gaussian_mat(n, s);
    let mut noise = rng.gaussian_mat(n, n);
    for j in 0..s {
        for i in 0..n {
            left[(i, j)] *= sigma1;
            right[(i, j)] *= sigma1;
        }
    }
    for j in 0..n {
        for i in 0..n {
            noise[(i, j)] *= sigma2;
        }
    }
    Ok(SymmetricOperator::from_factors(LowRankFactors {
        left,
        right,
        noise,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::StorageKind;

    #[test]
    fn exp_decay_endpoints() {
        let spec = SpectrumSpec::exp_decay(100, 1e3);
        let eigs = spec.eigenvalues().unwrap();
        assert_eq!(eigs[0], 1.0);
        assert!((eigs[99] - 1e-3).abs() < 1e-15);
        let (_, reference) = gen_synthetic(&spec, 5).unwrap();
        assert_eq!(reference.values()[0], 1.0);
        assert!((reference.values()[99] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn haar_factor_is_orthogonal() {
        let spec = SpectrumSpec::exp_decay(60, 1e2);
        let (_, reference) = gen_synthetic(&spec, 11).unwrap();
        let q = reference.vectors();
        let gram = q.transpose() * q;
        let mut defect = 0.0f64;
        for j in 0..60 {
            for i in 0..60 {
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((gram[(i, j)] - target).abs());
            }
        }
        assert!(defect <= 1e-12, "orthogonality defect {defect:.3e}");
    }

    #[test]
    fn generated_spectrum_matches_independent_eigensolver() {
        let spec = SpectrumSpec::exp_decay(80, 1e3);
        let (op, reference) = gen_synthetic(&spec, 3).unwrap();
        let recomputed = ReferenceDecomposition::compute(&op).unwrap();
        for i in 0..80 {
            let want = reference.values()[i];
            let got = recomputed.values()[i];
            assert!(
                (want - got).abs() <= 1e-10 * want.max(1e-30),
                "eig {i}: {want} vs {got}"
            );
        }
    }

    #[test]
    fn reference_invariants_hold() {
        let spec = SpectrumSpec::exp_decay(50, 1e2);
        let (op, reference) = gen_synthetic(&spec, 9).unwrap();
        let (ortho, resid) = reference.defects(&op);
        assert!(ortho <= 1e-10, "ortho defect {ortho:.3e}");
        assert!(resid <= 1e-8, "residual defect {resid:.3e}");
    }

    #[test]
    fn zero_noise_forces_rank_s() {
        let op = gen_low_rank_noise(50, 5, 1.0, 0.0, 7).unwrap();
        let reference = ReferenceDecomposition::compute(&op).unwrap();
        let lam1 = reference.values()[0];
        for i in 5..50 {
            assert!(
                reference.values()[i] <= 1e-10 * lam1,
                "eig {i} = {} exceeds rank bound",
                reference.values()[i]
            );
        }
    }

    #[test]
    fn composed_matvec_matches_dense_materialization() {
        let op = gen_low_rank_noise(60, 8, 0.5, 0.1, 21).unwrap();
        assert_eq!(op.kind(), StorageKind::Composed);
        let dense = op.to_dense();
        let mut rng = CounterRng::new(99);
        for _ in 0..5 {
            let x = rng.gaussian_col(60);
            let via_op = op.matvec_quiet(x.as_ref());
            let via_dense = &dense * &x;
            let scale = via_dense.norm_l2().max(1e-30);
            let err = (&via_op - &via_dense).norm_l2() / scale;
            assert!(err <= 1e-9, "composed vs dense relative error {err:.3e}");
        }
    }

    #[test]
    fn generated_matrices_are_psd() {
        let spec = SpectrumSpec::exp_decay(40, 1e3);
        let (a, _) = gen_synthetic(&spec, 17).unwrap();
        let b = gen_low_rank_noise(40, 6, 0.3, 0.05, 17).unwrap();
        let mut rng = CounterRng::new(1);
        for op in [&a, &b] {
            for _ in 0..100 {
                let x = rng.unit_col(40);
                let quad = crate::epsi::dot(x.as_ref(), op.matvec_quiet(x.as_ref()).as_ref());
                assert!(quad >= -1e-10, "rayleigh quotient {quad:.3e} below zero");
            }
        }
    }

    #[test]
    fn determinism_bitwise_per_seed() {
        let spec = SpectrumSpec::exp_decay(30, 1e2);
        let (a1, _) = gen_synthetic(&spec, 123).unwrap();
        let (a2, _) = gen_synthetic(&spec, 123).unwrap();
        let (d1, d2) = (a1.to_dense(), a2.to_dense());
        for j in 0..30 {
            for i in 0..30 {
                assert_eq!(d1[(i, j)].to_bits(), d2[(i, j)].to_bits());
            }
        }
        let b1 = gen_low_rank_noise(30, 4, 0.2, 0.1, 77).unwrap();
        let b2 = gen_low_rank_noise(30, 4, 0.2, 0.1, 77).unwrap();
        let (d1, d2) = (b1.to_dense(), b2.to_dense());
        for j in 0..30 {
            for i in 0..30 {
                assert_eq!(d1[(i, j)].to_bits(), d2[(i, j)].to_bits());
            }
        }
    }

    #[test]
    fn low_rank_noise_kind_rejected_by_gen_synthetic() {
        let spec = SpectrumSpec::low_rank_noise(10, 2, 1.0, 0.1);
        assert!(gen_synthetic(&spec, 0).is_err());
    }

    #[test]
    fn custom_spec_validation() {
        assert!(SpectrumSpec::custom(vec![1.0, 2.0]).validate().is_err());
        assert!(SpectrumSpec::custom(vec![2.0, -1.0]).validate().is_err());
        assert!(SpectrumSpec::custom(vec![2.0, 1.0, 1.0]).validate().is_ok());
        assert!(SpectrumSpec::exp_decay(10, 0.5).validate().is_err());
        assert!(SpectrumSpec::low_rank_noise(10, 11, 1.0, 1.0).validate().is_err());
    }
}
