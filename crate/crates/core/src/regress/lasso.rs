//! Lasso by cyclic coordinate descent with soft-thresholding.
//!
//! Minimizes `(1/2n) ‖y - b - Xw‖² + α ‖w‖₁` with an unpenalized intercept `b`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoSettings {
    /// Stop once a full sweep moves no weight by more than this.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoSettings {
    fn default() -> Self {
        LassoSettings {
            tol: 1e-8,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedLasso {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
    /// `false` when the sweep budget ran out first.
    pub converged: bool,
    pub sweeps: usize,
}

impl FittedLasso {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>()
    }
}

#[inline]
fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Objective value for row-major `x` (`n x p`).
pub fn lasso_objective(x: &[f64], y: &[f64], weights: &[f64], intercept: f64, alpha: f64) -> f64 {
    let n = y.len();
    let p = weights.len();
    let mut rss = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let row = &x[i * p..(i + 1) * p];
        let pred = intercept + row.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>();
        rss += (yi - pred) * (yi - pred);
    }
    rss / (2.0 * n as f64) + alpha * weights.iter().map(|w| w.abs()).sum::<f64>()
}

pub fn lasso_fit(x: &[f64], y: &[f64], alpha: f64) -> Result<FittedLasso> {
    lasso_fit_with(x, y, alpha, &LassoSettings::default(), None, None)
}

/// Coordinate descent with an active-set inner loop, optional warm start and
/// optional per-sweep objective trace.
pub fn lasso_fit_with(
    x: &[f64],
    y: &[f64],
    alpha: f64,
    settings: &LassoSettings,
    warm: Option<&[f64]>,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<FittedLasso> {
    let n = y.len();
    if n == 0 || !x.len().is_multiple_of(n) {
        return Err(Error::invalid(alloc::format!(
            "design matrix with {} entries does not have {n} rows",
            x.len()
        )));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("lasso penalty must be non-negative"));
    }
    let p = x.len() / n;
    let nf = n as f64;
    // column-major copy
    let mut cols = vec![0.0; n * p];
    for i in 0..n {
        for j in 0..p {
            cols[j * n + i] = x[i * p + j];
        }
    }
    let norms: Vec<f64> = cols
        .chunks_exact(n)
        .map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf)
        .collect();

    let mut w = match warm {
        Some(w0) if w0.len() == p => w0.to_vec(),
        Some(_) => return Err(Error::invalid("warm start has the wrong length")),
        None => vec![0.0; p],
    };
    let mut resid: Vec<f64> = y.to_vec();
    for j in 0..p {
        if w[j] != 0.0 {
            for (r, &c) in resid.iter_mut().zip(&cols[j * n..(j + 1) * n]) {
                *r -= w[j] * c;
            }
        }
    }
    let mut intercept = resid.iter().sum::<f64>() / nf;
    resid.iter_mut().for_each(|r| *r -= intercept);

    let objective = |resid: &[f64], w: &[f64]| {
        resid.iter().map(|r| r * r).sum::<f64>() / (2.0 * nf)
            + alpha * w.iter().map(|v| v.abs()).sum::<f64>()
    };

    let update = |j: usize, w: &mut [f64], resid: &mut [f64]| -> f64 {
        let nj = norms[j];
        if nj == 0.0 {
            return 0.0;
        }
        let col = &cols[j * n..(j + 1) * n];
        let rho = col.iter().zip(resid.iter()).map(|(c, r)| c * r).sum::<f64>() / nf + nj * w[j];
        let new = soft_threshold(rho, alpha) / nj;
        let delta = new - w[j];
        if delta != 0.0 {
            for (r, &c) in resid.iter_mut().zip(col) {
                *r -= delta * c;
            }
            w[j] = new;
        }
        delta.abs()
    };

    let recenter = |resid: &mut [f64], intercept: &mut f64| {
        let shift = resid.iter().sum::<f64>() / nf;
        if shift != 0.0 {
            *intercept += shift;
            resid.iter_mut().for_each(|r| *r -= shift);
        }
    };

    let mut sweeps = 0;
    let mut converged = false;
    let mut active: Vec<usize> = Vec::new();
    while sweeps < settings.max_sweeps {
        // full sweep
        let mut max_change = 0.0f64;
        for j in 0..p {
            max_change = max_change.max(update(j, &mut w, &mut resid));
        }
        recenter(&mut resid, &mut intercept);
        sweeps += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(objective(&resid, &w));
        }
        if max_change < settings.tol {
            converged = true;
            break;
        }
        // active-set sweeps
        active.clear();
        active.extend((0..p).filter(|&j| w[j] != 0.0));
        while sweeps < settings.max_sweeps {
            let mut change = 0.0f64;
            for &j in &active {
                change = change.max(update(j, &mut w, &mut resid));
            }
            recenter(&mut resid, &mut intercept);
            sweeps += 1;
            if let Some(t) = trace.as_deref_mut() {
                t.push(objective(&resid, &w));
            }
            if change < settings.tol {
                break;
            }
        }
    }
    Ok(FittedLasso {
        weights: w,
        intercept,
        alpha,
        converged,
        sweeps,
    })
}

/// Column means and scales fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnScaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ColumnScaler {
    /// Constant columns get scale 1 (and become all-zero after centering).
    pub fn fit(x: &[f64], n_rows: usize) -> Result<Self> {
        if n_rows == 0 || !x.len().is_multiple_of(n_rows) {
            return Err(Error::invalid("design matrix shape"));
        }
        let p = x.len() / n_rows;
        let nf = n_rows as f64;
        let mut mean = vec![0.0; p];
        for row in x.chunks_exact(p) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= nf);
        let mut var = vec![0.0; p];
        for row in x.chunks_exact(p) {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let sd = libm::sqrt(s / nf);
                if sd > 1e-12 * (1.0 + m.abs()) { sd } else { 1.0 }
            })
            .collect();
        Ok(ColumnScaler { mean, scale })
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        let p = self.mean.len();
        let mut out = x.to_vec();
        for row in out.chunks_exact_mut(p) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

/// Lasso on column-standardized features with standardized labels; the
/// penalty is expressed on that scale.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedLasso {
    pub columns: ColumnScaler,
    pub label_mean: f64,
    pub label_scale: f64,
    pub fit: FittedLasso,
}

impl StandardizedLasso {
    pub fn fit(x: &[f64], y: &[f64], alpha: f64, settings: &LassoSettings) -> Result<Self> {
        Self::fit_warm(x, y, alpha, settings, None)
    }

    pub fn fit_warm(
        x: &[f64],
        y: &[f64],
        alpha: f64,
        settings: &LassoSettings,
        warm: Option<&[f64]>,
    ) -> Result<Self> {
        let n = y.len();
        let columns = ColumnScaler::fit(x, n)?;
        let xs = columns.transform(x);
        let label_mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - label_mean) * (v - label_mean)).sum::<f64>() / n as f64;
        let label_scale = if var > 0.0 { libm::sqrt(var) } else { 1.0 };
        let ys: Vec<f64> = y.iter().map(|v| (v - label_mean) / label_scale).collect();
        let fit = lasso_fit_with(&xs, &ys, alpha, settings, warm, None)?;
        Ok(StandardizedLasso {
            columns,
            label_mean,
            label_scale,
            fit,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let xs = self.columns.transform(x);
        xs.chunks_exact(self.columns.mean.len())
            .map(|row| self.label_mean + self.label_scale * self.fit.predict_row(row))
            .collect()
    }
}
