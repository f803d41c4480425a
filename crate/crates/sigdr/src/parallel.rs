//! Rayon versions of the Gram and feature computations. Each work unit calls
//! the same core routine as the sequential path, so results do not depend on
//! the number of workers.

use rayon::prelude::*;
use sigdr_core::measures::{ses_features, SesOptions};
use sigdr_core::sigkernel::{assemble_mmd, cross_group_mean, within_group_mean, GramMatrix};
use sigdr_core::EmpiricalMeasure;

use crate::Result;

/// Squared-MMD matrix over `groups`, pairs evaluated in parallel.
pub fn mmd_matrix(groups: &[EmpiricalMeasure], refinement: u32) -> Result<GramMatrix> {
    if groups.iter().any(|g| g.is_empty()) {
        return Err(sigdr_core::Error::InvalidArgument("empty group".into()).into());
    }
    if let Some(first) = groups.first() {
        if groups.iter().any(|g| g.dim() != first.dim()) {
            return Err(sigdr_core::Error::InvalidArgument("groups have different dimensions".into()).into());
        }
    }
    let m = groups.len();
    let within = groups
        .par_iter()
        .map(|g| within_group_mean(g, refinement))
        .collect::<sigdr_core::Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let cross = pairs
        .par_iter()
        .map(|&(i, j)| cross_group_mean(&groups[i], &groups[j], refinement))
        .collect::<sigdr_core::Result<Vec<_>>>()?;
    let mut table = vec![0.0; m * m];
    for (&(i, j), c) in pairs.iter().zip(cross) {
        table[i * m + j] = c;
    }
    Ok(assemble_mmd(&within, |i, j| table[i * m + j])?)
}

/// Row-major SES feature matrix, one row per group.
pub fn ses_matrix(groups: &[EmpiricalMeasure], opts: &SesOptions) -> Result<(Vec<f64>, usize)> {
    let rows = groups
        .par_iter()
        .map(|g| ses_features(g, opts).map(|f| f.coefficients))
        .collect::<sigdr_core::Result<Vec<_>>>()?;
    let width = rows.first().map_or(0, Vec::len);
    Ok((rows.into_iter().flatten().collect(), width))
}
