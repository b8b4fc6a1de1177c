//! Error metrics for final states, evaluated against a dense reference where
//! one is available. Residuals never need a reference; eigenvalue and
//! subspace errors do. Matvecs spent here use the quiet path and do not
//! show up in solver cost counts.

use faer::MatRef;

use crate::error::SolveError;
use crate::matrix::{ReferenceDecomposition, SymmetricOperator};

/// Subspace error of an estimate block against the reference top-k split.
#[derive(Debug, Clone, Copy)]
pub struct SubspaceErr {
    pub spectral: f64,
    pub frobenius: f64,
}

#[derive(Debug, Clone)]
pub struct MetricSet {
    /// `||A u_i - lambda_i u_i||` per pair.
    pub residual: Vec<f64>,
    /// `|lambda_hat_i - lambda_i|` per pair; requires a reference.
    pub eig_err: Option<Vec<f64>>,
    /// `||V2^T U||` in spectral and Frobenius norms; requires a reference.
    pub subspace_err: Option<SubspaceErr>,
}

/// Evaluate the metric set for `k` estimated pairs `(u_i, lambda_i)`.
pub fn compute_metrics(
    a: &SymmetricOperator,
    basis: MatRef<'_, f64>,
    lambdas: &[f64],
    reference: Option<&ReferenceDecomposition>,
) -> Result<MetricSet, SolveError> {
    let n = a.n();
    let k = basis.ncols();
    if basis.nrows() != n || lambdas.len() != k {
        return Err(SolveError::DimensionMismatch {
            expected: n,
            actual: basis.nrows(),
        });
    }
    let mut residual = Vec::with_capacity(k);
    for i in 0..k {
        let au = a.matvec_quiet(basis.col(i));
        let r = &au - basis.col(i) * lambdas[i];
        residual.push(r.norm_l2());
    }
    let (eig_err, subspace_err) = match reference {
        Some(reference) => {
            let eig = (0..k)
                .map(|i| (lambdas[i] - reference.values()[i]).abs())
                .collect();
            let (spectral, frobenius) = reference.subspace_error(basis, k);
            (
                Some(eig),
                Some(SubspaceErr {
                    spectral,
                    frobenius,
                }),
            )
        }
        None => (None, None),
    };
    Ok(MetricSet {
        residual,
        eig_err,
        subspace_err,
    })
}
