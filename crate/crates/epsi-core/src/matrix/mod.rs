//! Symmetric matrix operators: dense, sparse coordinate, and composed
//! low-rank-plus-noise storage behind a single matvec interface.

mod market;
mod synthetic;

pub use market::{load_matrix_market, write_matrix_market};
pub use synthetic::{
    gen_low_rank_noise, gen_synthetic, haar_orthogonal, ReferenceDecomposition, SpectrumKind,
    SpectrumSpec,
};

use std::sync::atomic::{AtomicU64, Ordering};

use faer::{Col, ColRef, Mat};

use crate::error::MatrixError;

/// One stored entry of a sparse operator; only the lower triangle is kept
/// (`row >= col`), the symmetric mirror is applied at matvec time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseEntry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Factors of a composed operator `A = B B^T` with `B = left * right^T + noise`.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    pub left: Mat<f64>,
    pub right: Mat<f64>,
    pub noise: Mat<f64>,
}

#[derive(Debug)]
enum Storage {
    Dense(Mat<f64>),
    Sparse { entries: Vec<SparseEntry> },
    Composed(Box<LowRankFactors>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageKind {
    Dense,
    Sparse,
    Composed,
}

/// A symmetric matrix exposed through matrix-vector products.
///
/// Immutable after construction and safe for concurrent reads; `matvec` is
/// reentrant. Applications through [`SymmetricOperator::matvec`] are tallied
/// in a relaxed atomic counter so solvers can report cumulative matvec cost;
/// [`SymmetricOperator::matvec_quiet`] leaves the tally untouched and is meant
/// for metric evaluation and test oracles.
#[derive(Debug)]
pub struct SymmetricOperator {
    n: usize,
    storage: Storage,
    matvecs: AtomicU64,
}

impl SymmetricOperator {
    /// Wrap a dense square matrix. The input is symmetrized as
    /// `(M + M^T) / 2` so the stored matrix is exactly symmetric.
    pub fn from_dense(mat: Mat<f64>) -> Result<Self, MatrixError> {
        if mat.nrows() != mat.ncols() {
            return Err(MatrixError::DimensionMismatch {
                expected: mat.nrows(),
                actual: mat.ncols(),
            });
        }
        if mat.nrows() == 0 {
            return Err(MatrixError::InvalidSpec("dimension must be >= 1".into()));
        }
        let n = mat.nrows();
        let mut sym = Mat::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                sym[(i, j)] = 0.5 * (mat[(i, j)] + mat[(j, i)]);
            }
        }
        Ok(Self {
            n,
            storage: Storage::Dense(sym),
            matvecs: AtomicU64::new(0),
        })
    }

    pub(crate) fn from_sparse_parts(n: usize, entries: Vec<SparseEntry>) -> Self {
        debug_assert!(entries.iter().all(|e| e.row >= e.col && e.row < n));
        Self {
            n,
            storage: Storage::Sparse { entries },
            matvecs: AtomicU64::new(0),
        }
    }

    pub(crate) fn from_factors(factors: LowRankFactors) -> Self {
        let n = factors.left.nrows();
        debug_assert_eq!(factors.noise.nrows(), n);
        debug_assert_eq!(factors.noise.ncols(), n);
        debug_assert_eq!(factors.right.nrows(), n);
        Self {
            n,
            storage: Storage::Composed(Box::new(factors)),
            matvecs: AtomicU64::new(0),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> StorageKind {
        match self.storage {
            Storage::Dense(_) => StorageKind::Dense,
            Storage::Sparse { .. } => StorageKind::Sparse,
            Storage::Composed(_) => StorageKind::Composed,
        }
    }

    /// Stored coordinate entries for sparse operators, in file order.
    pub fn stored_entries(&self) -> Option<&[SparseEntry]> {
        match &self.storage {
            Storage::Sparse { entries } => Some(entries),
            _ => None,
        }
    }

    /// Checked matvec with the error contract on dimension mismatch.
    pub fn try_matvec(&self, x: ColRef<'_, f64>) -> Result<Col<f64>, MatrixError> {
        if x.nrows() != self.n {
            return Err(MatrixError::DimensionMismatch {
                expected: self.n,
                actual: x.nrows(),
            });
        }
        Ok(self.matvec(x))
    }

    /// `A x`, counted. Panics on dimension mismatch (use [`Self::try_matvec`]
    /// at API boundaries).
    pub fn matvec(&self, x: ColRef<'_, f64>) -> Col<f64> {
        self.matvecs.fetch_add(1, Ordering::Relaxed);
        self.apply(x)
    }

    /// `A x` without touching the matvec tally (metrics and oracles).
    pub fn matvec_quiet(&self, x: ColRef<'_, f64>) -> Col<f64> {
        self.apply(x)
    }

    fn apply(&self, x: ColRef<'_, f64>) -> Col<f64> {
        assert_eq!(x.nrows(), self.n, "matvec dimension mismatch");
        match &self.storage {
            Storage::Dense(a) => a * x,
            Storage::Sparse { entries } => {
                let mut y = Col::zeros(self.n);
                for e in entries {
                    y[e.row] += e.value * x[e.col];
                    if e.row != e.col {
                        y[e.col] += e.value * x[e.row];
                    }
                }
                y
            }
            Storage::Composed(f) => {
                // A x = B (B^T x) with B = left * right^T + noise.
                let bt_x = &f.right * (f.left.transpose() * x) + f.noise.transpose() * x;
                &f.left * (f.right.transpose() * &bt_x) + &f.noise * &bt_x
            }
        }
    }

    pub fn matvec_count(&self) -> u64 {
        self.matvecs.load(Ordering::Relaxed)
    }

    /// Diagonal of the represented matrix.
    pub fn diagonal(&self) -> Col<f64> {
        match &self.storage {
            Storage::Dense(a) => Col::from_fn(self.n, |i| a[(i, i)]),
            Storage::Sparse { entries } => {
                let mut d = Col::zeros(self.n);
                for e in entries {
                    if e.row == e.col {
                        d[e.row] += e.value;
                    }
                }
                d
            }
            Storage::Composed(f) => {
                // diag(B B^T) = squared row norms of B.
                let b = &f.left * f.right.transpose() + &f.noise;
                Col::from_fn(self.n, |i| {
                    let mut s = 0.0;
                    for j in 0..self.n {
                        s += b[(i, j)] * b[(i, j)];
                    }
                    s
                })
            }
        }
    }

    /// Materialize the full symmetric matrix. Intended for references and
    /// oracles at desk scale; cost is O(n^2) memory.
    pub fn to_dense(&self) -> Mat<f64> {
        match &self.storage {
            Storage::Dense(a) => a.clone(),
            Storage::Sparse { entries } => {
                let mut a = Mat::zeros(self.n, self.n);
                for e in entries {
                    a[(e.row, e.col)] += e.value;
                    if e.row != e.col {
                        a[(e.col, e.row)] += e.value;
                    }
                }
                a
            }
            Storage::Composed(f) => {
                let b = &f.left * f.right.transpose() + &f.noise;
                let a = &b * b.transpose();
                let mut sym = Mat::zeros(self.n, self.n);
                for j in 0..self.n {
                    for i in 0..self.n {
                        sym[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
                    }
                }
                sym
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use proptest::prelude::*;

    fn diag_op(values: &[f64]) -> SymmetricOperator {
        let n = values.len();
        let mut m = Mat::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        SymmetricOperator::from_dense(m).unwrap()
    }

    #[test]
    fn identity_matvec() {
        let op = diag_op(&[1.0, 1.0, 1.0]);
        let x = Col::from_fn(3, |i| (i + 1) as f64);
        let y = op.try_matvec(x.as_ref()).unwrap();
        assert_eq!(y[0], 1.0);
        assert_eq!(y[1], 2.0);
        assert_eq!(y[2], 3.0);
    }

    #[test]
    fn diagonal_matvec() {
        let op = diag_op(&[1.0, 2.0, 3.0]);
        let x = Col::from_fn(3, |_| 1.0);
        let y = op.matvec(x.as_ref());
        assert_eq!((y[0], y[1], y[2]), (1.0, 2.0, 3.0));
        assert_eq!(op.matvec_count(), 1);
    }

    #[test]
    fn dimension_mismatch_reports_sizes() {
        let op = diag_op(&[1.0, 2.0]);
        let x = Col::zeros(3);
        match op.try_matvec(x.as_ref()) {
            Err(MatrixError::DimensionMismatch { expected, actual }) => {
                assert_eq!(expected, 2);
                assert_eq!(actual, 3);
            }
            other => panic!("expected dimension mismatch, got {other:?}"),
        }
    }

    #[test]
    fn sparse_mirrors_off_diagonal() {
        let op = SymmetricOperator::from_sparse_parts(
            2,
            vec![
                SparseEntry { row: 0, col: 0, value: 4.0 },
                SparseEntry { row: 1, col: 0, value: 1.0 },
            ],
        );
        let d = op.to_dense();
        assert_eq!(d[(0, 0)], 4.0);
        assert_eq!(d[(0, 1)], 1.0);
        assert_eq!(d[(1, 0)], 1.0);
        assert_eq!(d[(1, 1)], 0.0);
    }

    #[test]
    fn quiet_matvec_does_not_count() {
        let op = diag_op(&[1.0, 2.0]);
        let x = Col::from_fn(2, |_| 1.0);
        let _ = op.matvec_quiet(x.as_ref());
        assert_eq!(op.matvec_count(), 0);
    }

    proptest! {
        // e_i^T (A e_j) == e_j^T (A e_i) for every storage kind.
        #[test]
        fn matvec_symmetry(seed in 0u64..500, i in 0usize..20, j in 0usize..20) {
            let mut rng = CounterRng::new(seed);
            let n = 20;
            let g = rng.gaussian_mat(n, n);
            let dense = SymmetricOperator::from_dense(&g + g.transpose()).unwrap();
            let sparse_src = gen_low_rank_noise(n, 3, 1.0, 0.1, seed).unwrap();
            for op in [&dense, &sparse_src] {
                let mut ei = Col::zeros(n);
                ei[i] = 1.0;
                let mut ej = Col::zeros(n);
                ej[j] = 1.0;
                let aej = op.matvec_quiet(ej.as_ref());
                let aei = op.matvec_quiet(ei.as_ref());
                let scale = aei.norm_l2().max(aej.norm_l2()).max(1.0);
                prop_assert!((aej[i] - aei[j]).abs() <= 1e-12 * scale);
            }
        }
    }
}
