//! Rough volatility `σ_t = exp(P_t)` with `P` a fractional Ornstein-Uhlenbeck
//! process `dP = -a (P - m) dt + ν dW^H`, discretized by Euler-Maruyama on the
//! output grid.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sigdr_core::{Dataset, EmpiricalMeasure, TimeSeries};

use super::{check_range, group_rng, uniform, FbmSampler};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoughVolConfig {
    pub groups: usize,
    /// Trajectories per group.
    pub paths: usize,
    pub length: usize,
    pub hurst: f64,
    pub mean_reversion_range: [f64; 2],
    /// Long-run level `m` of `P`.
    pub fou_mean: f64,
    /// Volatility of volatility `ν`.
    pub fou_vol: f64,
    /// Starting value `P_0`.
    pub initial: f64,
    /// Length of the simulated time interval.
    pub horizon: f64,
    pub seed: u64,
}

impl Default for RoughVolConfig {
    fn default() -> Self {
        RoughVolConfig {
            groups: 50,
            paths: 20,
            length: 200,
            hurst: 0.2,
            mean_reversion_range: [1e-6, 1.0],
            fou_mean: 0.0,
            fou_vol: 0.3,
            initial: 1.0,
            horizon: 10.0,
            seed: 0,
        }
    }
}

impl RoughVolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.groups == 0 || self.paths == 0 {
            return Err(Error::config("rough volatility needs at least one group and one path"));
        }
        if self.length < 2 {
            return Err(Error::config("paths need at least 2 points"));
        }
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::config(format!("Hurst exponent {} outside (0, 1)", self.hurst)));
        }
        check_range("mean_reversion_range", self.mean_reversion_range, 0.0, f64::INFINITY)?;
        if !(self.fou_mean >= 0.0 && self.fou_vol >= 0.0) {
            return Err(Error::config("fOU mean and volatility must be non-negative"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite() && self.initial.is_finite()) {
            return Err(Error::config("horizon must be positive and P_0 finite"));
        }
        Ok(())
    }
}

/// Euler-Maruyama values `P_0, ..., P_{ℓ-1}` for mean reversion `a`. `sampler`
/// must have `cfg.length` points.
pub fn simulate_fou<R: Rng + ?Sized>(a: f64, cfg: &RoughVolConfig, sampler: &FbmSampler, rng: &mut R) -> Vec<f64> {
    debug_assert_eq!(sampler.length(), cfg.length);
    let dt = cfg.horizon / (cfg.length - 1) as f64;
    // W^H on [0, T] is T^H times W^H on [0, 1]
    let noise_scale = cfg.fou_vol * cfg.horizon.powf(cfg.hurst);
    let mut p = cfg.initial;
    let mut out = Vec::with_capacity(cfg.length);
    out.push(p);
    for dw in sampler.increments(rng) {
        p += -a * (p - cfg.fou_mean) * dt + noise_scale * dw;
        out.push(p);
    }
    out
}

/// `groups` groups of volatility paths labelled by their mean reversion.
pub fn gen_rough_vol(cfg: &RoughVolConfig) -> Result<Dataset> {
    cfg.validate()?;
    let sampler = FbmSampler::new(cfg.hurst, cfg.length)?;
    let dt = cfg.horizon / (cfg.length - 1) as f64;
    let times: Vec<f64> = (0..cfg.length).map(|k| k as f64 * dt).collect();
    let made: Vec<(EmpiricalMeasure, f64)> = (0..cfg.groups)
        .into_par_iter()
        .map(|g| {
            let mut rng = group_rng(cfg.seed, g);
            let a = uniform(&mut rng, cfg.mean_reversion_range);
            let series = (0..cfg.paths)
                .map(|_| {
                    let sigma = simulate_fou(a, cfg, &sampler, &mut rng).into_iter().map(f64::exp).collect();
                    TimeSeries::new(times.clone(), sigma, 1)
                })
                .collect::<sigdr_core::Result<Vec<_>>>()?;
            Ok((EmpiricalMeasure::new(series)?, a))
        })
        .collect::<Result<_>>()?;
    let (groups, labels) = made.into_iter().unzip();
    Ok(Dataset::new(groups, labels)?)
}
