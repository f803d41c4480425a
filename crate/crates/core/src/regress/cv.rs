//! Grid-search k-fold cross-validation.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Regression method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Lasso on signatures of pathwise expected signatures.
    Ses,
    /// Kernel ridge regression with the expected-signature Gaussian kernel.
    Kes,
    /// Kernel ridge regression on RBF mean embeddings of stacked series.
    DrRbf,
}

/// One grid point. Fields a method does not use are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    /// Ridge (KRR) or L1 (Lasso) regularization.
    pub alpha: f64,
    /// Inner RBF lengthscale (DR-RBF).
    pub l1: Option<f64>,
    /// Outer Gaussian lengthscale, `σ² = 1/(2 l2²)` (KES, DR-RBF).
    pub l2: Option<f64>,
    /// PES truncation (SES).
    pub inner_level: Option<usize>,
    /// Outer signature truncation (SES).
    pub outer_level: Option<usize>,
}

impl HyperParams {
    pub fn kes(l2: f64, alpha: f64) -> Self {
        HyperParams { alpha, l1: None, l2: Some(l2), inner_level: None, outer_level: None }
    }

    pub fn ses(inner_level: usize, outer_level: usize, alpha: f64) -> Self {
        HyperParams {
            alpha,
            l1: None,
            l2: None,
            inner_level: Some(inner_level),
            outer_level: Some(outer_level),
        }
    }

    pub fn dr_rbf(l1: f64, l2: f64, alpha: f64) -> Self {
        HyperParams { alpha, l1: Some(l1), l2: Some(l2), inner_level: None, outer_level: None }
    }
}

/// Powers of ten `10^lo, ..., 10^hi`.
pub fn log_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| libm::pow(10.0, e as f64)).collect()
}

/// Default search grid per method.
pub fn default_grid(method: Method) -> Vec<HyperParams> {
    let decades = log_grid(-3, 3);
    let mut grid = Vec::new();
    match method {
        Method::Kes => {
            for &l2 in &decades {
                for &a in &decades {
                    grid.push(HyperParams::kes(l2, a));
                }
            }
        }
        Method::Ses => {
            for n in [2, 3] {
                for a in log_grid(-5, 5) {
                    grid.push(HyperParams::ses(n, 2, a));
                }
            }
        }
        Method::DrRbf => {
            for &l1 in &decades {
                for &l2 in &decades {
                    for &a in &decades {
                        grid.push(HyperParams::dr_rbf(l1, l2, a));
                    }
                }
            }
        }
    }
    grid
}

/// Preference among equally scored points: most regularized first (larger α,
/// larger `l2`, smaller `n`, smaller `m`, then larger `l1`).
pub fn preference(a: &HyperParams, b: &HyperParams) -> Ordering {
    let opt_f = |x: Option<f64>| x.unwrap_or(f64::NEG_INFINITY);
    let opt_u = |x: Option<usize>| x.unwrap_or(0);
    b.alpha
        .total_cmp(&a.alpha)
        .then(opt_f(b.l2).total_cmp(&opt_f(a.l2)))
        .then(opt_u(a.inner_level).cmp(&opt_u(b.inner_level)))
        .then(opt_u(a.outer_level).cmp(&opt_u(b.outer_level)))
        .then(opt_f(b.l1).total_cmp(&opt_f(a.l1)))
}

/// K-fold split of `0..n` after a seeded shuffle.
#[derive(Debug, Clone, PartialEq)]
pub struct Folds {
    pub test: Vec<Vec<usize>>,
}

impl Folds {
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("cross-validation needs at least 2 folds"));
        }
        if n < k {
            return Err(Error::invalid(alloc::format!(
                "cannot split {n} groups into {k} folds"
            )));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut test = Vec::with_capacity(k);
        let (base, extra) = (n / k, n % k);
        let mut start = 0;
        for f in 0..k {
            let size = base + (f < extra) as usize;
            let mut fold = idx[start..start + size].to_vec();
            fold.sort_unstable();
            test.push(fold);
            start += size;
        }
        Ok(Folds { test })
    }

    pub fn len(&self) -> usize {
        self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.test.is_empty()
    }

    /// Training indices of fold `f` (the complement of its test set).
    pub fn train(&self, f: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .test
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, t)| t.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

/// Pooled held-out MSE of one grid point. `predict(point, train, test)` returns
/// predictions for `test`.
pub fn cv_score<F>(point: &HyperParams, labels: &[f64], folds: &Folds, mut predict: F) -> Result<f64>
where
    F: FnMut(&HyperParams, &[usize], &[usize]) -> Result<Vec<f64>>,
{
    let mut sse = 0.0;
    let mut count = 0usize;
    for f in 0..folds.len() {
        let train = folds.train(f);
        let test = &folds.test[f];
        let pred = predict(point, &train, test)?;
        if pred.len() != test.len() {
            return Err(Error::invalid("predictor returned the wrong number of values"));
        }
        for (&i, p) in test.iter().zip(&pred) {
            sse += (labels[i] - p) * (labels[i] - p);
        }
        count += test.len();
    }
    let score = sse / count as f64;
    if !score.is_finite() {
        return Err(Error::numerical("non-finite cross-validation score"));
    }
    Ok(score)
}

/// Result of a grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub best: HyperParams,
    pub score: f64,
    /// Every evaluated point with its score, in grid order.
    pub scores: Vec<(HyperParams, f64)>,
    /// Points skipped because they failed.
    pub failures: Vec<(HyperParams, Error)>,
}

/// Pick the lowest score, breaking exact ties with [`preference`].
pub fn select_best(results: Vec<(HyperParams, Result<f64>)>) -> Result<CvOutcome> {
    let mut scores = Vec::new();
    let mut failures = Vec::new();
    for (p, r) in results {
        match r {
            Ok(s) => scores.push((p, s)),
            Err(e) => failures.push((p, e)),
        }
    }
    let best = scores
        .iter()
        .min_by(|(pa, sa), (pb, sb)| sa.total_cmp(sb).then(preference(pa, pb)))
        .copied()
        .ok_or_else(|| match failures.first() {
            Some((_, e)) => Error::numerical(alloc::format!(
                "all {} grid points failed; first: {e}",
                failures.len()
            )),
            None => Error::invalid("empty hyperparameter grid"),
        })?;
    Ok(CvOutcome {
        best: best.0,
        score: best.1,
        scores,
        failures,
    })
}

/// Exhaustive k-fold grid search (sequential).
pub fn grid_search_cv<F>(
    labels: &[f64],
    grid: &[HyperParams],
    k: usize,
    seed: u64,
    mut predict: F,
) -> Result<CvOutcome>
where
    F: FnMut(&HyperParams, &[usize], &[usize]) -> Result<Vec<f64>>,
{
    if grid.is_empty() {
        return Err(Error::invalid("empty hyperparameter grid"));
    }
    let folds = Folds::new(labels.len(), k, seed)?;
    let results = grid
        .iter()
        .map(|p| (*p, cv_score(p, labels, &folds, &mut predict)))
        .collect();
    select_best(results)
}
