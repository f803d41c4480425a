//! Kernel ridge regression on precomputed Gram matrices.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve};
use crate::sigkernel::{GramKind, GramMatrix};

/// First jitter, relative to `trace(G) / M`.
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter tried before giving up, relative to `trace(G) / M`.
pub const JITTER_MAX: f64 = 1e-4;

/// Dual solution of `(G + αI) w = y`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedKrr {
    pub dual_weights: Vec<f64>,
    pub alpha: f64,
    /// Extra diagonal that was needed for the factorization to succeed.
    pub jitter: f64,
}

/// Solve `(G + αI) w = y` by Cholesky, escalating a diagonal jitter from
/// `1e-10 · trace/M` up to `1e-4 · trace/M` if the factorization fails.
pub fn krr_fit(gram: &GramMatrix, y: &[f64], alpha: f64) -> Result<FittedKrr> {
    if gram.kind() != GramKind::Kernel {
        return Err(Error::invalid("kernel ridge regression needs a kernel Gram matrix"));
    }
    krr_fit_raw(gram.entries(), gram.size(), y, alpha)
}

/// [`krr_fit`] on a row-major `m x m` kernel block.
pub fn krr_fit_raw(gram: &[f64], m: usize, y: &[f64], alpha: f64) -> Result<FittedKrr> {
    if gram.len() != m * m {
        return Err(Error::invalid("gram matrix is not square"));
    }
    if y.len() != m {
        return Err(Error::invalid(alloc::format!(
            "{} labels for a {m} x {m} gram matrix",
            y.len()
        )));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("ridge parameter must be positive"));
    }
    let mut a = gram.to_vec();
    for i in 0..m {
        a[i * m + i] += alpha;
    }
    if let Some(l) = cholesky(&a, m) {
        return Ok(FittedKrr {
            dual_weights: cholesky_solve(&l, m, y),
            alpha,
            jitter: 0.0,
        });
    }
    let trace: f64 = (0..m).map(|i| gram[i * m + i]).sum::<f64>().abs() / m as f64;
    let trace = if trace > 0.0 { trace } else { 1.0 };
    let mut rel = JITTER_START;
    while rel <= JITTER_MAX * (1.0 + 1e-9) {
        let jitter = rel * trace;
        let mut b = a.clone();
        for i in 0..m {
            b[i * m + i] += jitter;
        }
        if let Some(l) = cholesky(&b, m) {
            return Ok(FittedKrr {
                dual_weights: cholesky_solve(&l, m, y),
                alpha,
                jitter,
            });
        }
        rel *= 10.0;
    }
    Err(Error::numerical(alloc::format!(
        "kernel ridge factorization failed with alpha {alpha} after jitter {}",
        JITTER_MAX * trace
    )))
}

/// `k_star · w`.
pub fn krr_predict(model: &FittedKrr, k_star: &[f64]) -> Result<f64> {
    if k_star.len() != model.dual_weights.len() {
        return Err(Error::invalid(alloc::format!(
            "{} kernel values for {} training groups",
            k_star.len(),
            model.dual_weights.len()
        )));
    }
    Ok(k_star.iter().zip(&model.dual_weights).map(|(k, w)| k * w).sum())
}

/// Kernel ridge regression with label centering: fits on `y - mean(y)` and
/// adds the mean back at prediction time.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredKrr {
    pub fit: FittedKrr,
    pub label_mean: f64,
}

impl CenteredKrr {
    pub fn fit_raw(gram: &[f64], m: usize, y: &[f64], alpha: f64) -> Result<Self> {
        let label_mean = y.iter().sum::<f64>() / y.len().max(1) as f64;
        let centered: Vec<f64> = y.iter().map(|v| v - label_mean).collect();
        Ok(CenteredKrr {
            fit: krr_fit_raw(gram, m, &centered, alpha)?,
            label_mean,
        })
    }

    /// Predictions for each row of the row-major `rows x M_train` block.
    pub fn predict_rows(&self, k_block: &[f64]) -> Result<Vec<f64>> {
        let m = self.fit.dual_weights.len();
        k_block
            .chunks_exact(m)
            .map(|row| Ok(krr_predict(&self.fit, row)? + self.label_mean))
            .collect()
    }
}
