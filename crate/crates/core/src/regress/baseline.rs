//! DR-RBF baseline: Gaussian kernel on mean embeddings of an RBF kernel over
//! padded, stacked series.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sigkernel::{assemble_mmd, check_groups, sigma_from_lengthscale, GramMatrix};
use crate::streams::{EmpiricalMeasure, TimeSeries};

/// Values of `ts` stacked into one vector of length `dim * len`. Shorter
/// series repeat their last value; longer ones are cut.
pub fn stack_padded(ts: &TimeSeries, len: usize) -> Vec<f64> {
    let d = ts.dim();
    let mut out = Vec::with_capacity(d * len);
    for k in 0..len {
        out.extend_from_slice(ts.point(k.min(ts.len() - 1)));
    }
    out
}

/// Precomputed squared distances between every pair of stacked series.
#[derive(Debug, Clone)]
pub struct RbfBaseline {
    /// `ranges[i]` is the span of group `i`'s series in the flat series list.
    ranges: Vec<(usize, usize)>,
    total: usize,
    sq_dist: Vec<f64>,
}

impl RbfBaseline {
    /// `len = None` pads to the longest series across all groups.
    pub fn new(groups: &[EmpiricalMeasure], len: Option<usize>) -> Result<Self> {
        check_groups(groups)?;
        let len = len.unwrap_or_else(|| groups.iter().map(EmpiricalMeasure::max_len).max().unwrap_or(0));
        if len == 0 {
            return Err(Error::invalid("stacking length must be positive"));
        }
        let mut ranges = Vec::with_capacity(groups.len());
        let mut stacked = Vec::new();
        for g in groups {
            let start = stacked.len();
            stacked.extend(g.series().iter().map(|s| stack_padded(s, len)));
            ranges.push((start, stacked.len()));
        }
        let total = stacked.len();
        let mut sq_dist = vec![0.0; total * total];
        for a in 0..total {
            for b in a + 1..total {
                let d: f64 = stacked[a]
                    .iter()
                    .zip(&stacked[b])
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum();
                sq_dist[a * total + b] = d;
                sq_dist[b * total + a] = d;
            }
        }
        Ok(RbfBaseline { ranges, total, sq_dist })
    }

    fn mean_kernel(&self, gi: usize, gj: usize, gamma_sq: f64) -> f64 {
        let (a0, a1) = self.ranges[gi];
        let (b0, b1) = self.ranges[gj];
        let mut s = 0.0;
        for a in a0..a1 {
            for b in b0..b1 {
                s += libm::exp(-gamma_sq * self.sq_dist[a * self.total + b]);
            }
        }
        s / ((a1 - a0) * (b1 - b0)) as f64
    }

    /// Squared mean-embedding distances `‖ρ(δ_i) - ρ(δ_j)‖²` for lengthscale `l1`.
    pub fn distance_matrix(&self, l1: f64) -> Result<GramMatrix> {
        if !(l1 > 0.0 && l1.is_finite()) {
            return Err(Error::invalid("lengthscale must be positive"));
        }
        let gamma_sq = 1.0 / (2.0 * l1 * l1);
        let within: Vec<f64> = (0..self.ranges.len())
            .map(|i| self.mean_kernel(i, i, gamma_sq))
            .collect();
        assemble_mmd(&within, |i, j| self.mean_kernel(i, j, gamma_sq))
    }
}

/// DR-RBF Gram matrix with inner lengthscale `l1` and outer lengthscale `l2`.
pub fn baseline_rbf_gram(groups: &[EmpiricalMeasure], l1: f64, l2: f64) -> Result<GramMatrix> {
    RbfBaseline::new(groups, None)?
        .distance_matrix(l1)?
        .to_kernel(sigma_from_lengthscale(l2))
}
