//! Defective measuring devices on an RC-like circuit: voltage `sin(ωt)` and
//! current `sin(ωt - φ)`, recorded on a regular grid and then thinned at random.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sigdr_core::{Dataset, EmpiricalMeasure, TimeSeries};

use super::{check_range, group_rng, uniform};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitConfig {
    pub groups: usize,
    /// Devices per circuit.
    pub devices: usize,
    pub periods: usize,
    pub points_per_period: usize,
    pub omega: f64,
    pub phase_range: [f64; 2],
    pub drop_rate: f64,
    pub seed: u64,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        CircuitConfig {
            groups: 50,
            devices: 15,
            periods: 20,
            points_per_period: 25,
            omega: 2.0 * PI,
            phase_range: [PI / 8.0, PI / 2.0],
            drop_rate: 0.0,
            seed: 0,
        }
    }
}

impl CircuitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.groups == 0 || self.devices == 0 {
            return Err(Error::config("circuit needs at least one group and one device"));
        }
        if self.periods == 0 || self.points_per_period == 0 || self.periods * self.points_per_period < 2 {
            return Err(Error::config("circuit recording needs at least 2 points"));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::config("omega must be positive"));
        }
        let [a, b] = self.phase_range;
        if !(a > 0.0 && b < PI) {
            return Err(Error::config("phase range must lie inside (0, π)"));
        }
        check_range("phase_range", self.phase_range, 0.0, PI)?;
        if !(0.0..1.0).contains(&self.drop_rate) {
            return Err(Error::config(format!("drop rate {} outside [0, 1)", self.drop_rate)));
        }
        Ok(())
    }
}

/// Full-resolution `(v, i)` recording of one device for phase `phi`.
pub fn circuit_device(phi: f64, cfg: &CircuitConfig) -> Result<TimeSeries> {
    let len = cfg.periods * cfg.points_per_period;
    let dt = 2.0 * PI / cfg.omega / cfg.points_per_period as f64;
    let mut times = Vec::with_capacity(len);
    let mut values = Vec::with_capacity(2 * len);
    for k in 0..len {
        let t = k as f64 * dt;
        times.push(t);
        values.push((cfg.omega * t).sin());
        values.push((cfg.omega * t - phi).sin());
    }
    Ok(TimeSeries::new(times, values, 2)?)
}

/// `groups` circuits with phase labels; each device is thinned independently.
pub fn gen_circuit(cfg: &CircuitConfig) -> Result<Dataset> {
    cfg.validate()?;
    let made: Vec<(EmpiricalMeasure, f64)> = (0..cfg.groups)
        .into_par_iter()
        .map(|g| {
            let mut rng = group_rng(cfg.seed, g);
            let phi = uniform(&mut rng, cfg.phase_range);
            let full = circuit_device(phi, cfg)?;
            let series = (0..cfg.devices)
                .map(|_| full.subsample(cfg.drop_rate, &mut rng))
                .collect::<sigdr_core::Result<Vec<_>>>()?;
            Ok((EmpiricalMeasure::new(series)?, phi))
        })
        .collect::<Result<_>>()?;
    let (groups, labels) = made.into_iter().unzip();
    Ok(Dataset::new(groups, labels)?)
}
