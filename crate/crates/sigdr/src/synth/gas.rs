//! Hard-sphere gas in a cubic box, integrated with a fixed time step.
//!
//! Each step moves every particle ballistically, reflects it off the walls
//! and resolves approaching overlapping pairs with an elastic equal-mass
//! impulse along the line of centers.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sigdr_core::{Dataset, EmpiricalMeasure, TimeSeries};

use super::{check_range, group_rng, uniform};
use crate::{Error, Result};

const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GasConfig {
    pub groups: usize,
    pub particles: usize,
    pub box_side: f64,
    /// Radius is `radius_factor · (V/N)^{1/3} / 2`.
    pub radius_factor: f64,
    pub temp_range: [f64; 2],
    /// Integration steps; every step is recorded, giving `steps + 1` points.
    pub steps: usize,
    /// Time step; `None` keeps the largest displacement per step at `r/4`.
    pub dt: Option<f64>,
    pub seed: u64,
}

impl Default for GasConfig {
    fn default() -> Self {
        GasConfig {
            groups: 50,
            particles: 20,
            box_side: 3.0,
            radius_factor: 0.35,
            temp_range: [1.0, 1000.0],
            steps: 100,
            dt: None,
            seed: 0,
        }
    }
}

impl GasConfig {
    pub const FEW_COLLISIONS: f64 = 0.35;
    pub const MANY_COLLISIONS: f64 = 0.65;

    pub fn few_collisions() -> Self {
        GasConfig { radius_factor: Self::FEW_COLLISIONS, ..Self::default() }
    }

    pub fn many_collisions() -> Self {
        GasConfig { radius_factor: Self::MANY_COLLISIONS, ..Self::default() }
    }

    pub fn radius(&self) -> f64 {
        let volume = self.box_side.powi(3);
        self.radius_factor * (volume / self.particles as f64).cbrt() / 2.0
    }

    pub fn time_step(&self) -> f64 {
        self.dt.unwrap_or_else(|| {
            let vmax = self.temp_range[1].sqrt();
            if vmax > 0.0 {
                self.radius() / (4.0 * vmax)
            } else {
                1.0
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups == 0 || self.particles == 0 {
            return Err(Error::config("gas needs at least one group and one particle"));
        }
        if self.steps == 0 {
            return Err(Error::config("gas simulation needs at least one step"));
        }
        if !(self.box_side > 0.0 && self.box_side.is_finite()) {
            return Err(Error::config("box side must be positive"));
        }
        if !(self.radius_factor > 0.0 && self.radius_factor.is_finite()) {
            return Err(Error::config("radius factor must be positive"));
        }
        check_range("temp_range", self.temp_range, 0.0, f64::INFINITY)?;
        let r = self.radius();
        if 2.0 * r >= self.box_side {
            return Err(Error::config(format!("radius {r} does not fit a box of side {}", self.box_side)));
        }
        let packing = self.particles as f64 * 4.0 / 3.0 * PI * r.powi(3) / self.box_side.powi(3);
        if packing >= 0.5 {
            return Err(Error::config(format!("{} spheres of radius {r} fill {packing:.2} of the box", self.particles)));
        }
        if !(self.time_step() > 0.0 && self.time_step().is_finite()) {
            return Err(Error::config("dt must be positive"));
        }
        Ok(())
    }
}

/// Trajectories and bookkeeping of one simulated gas.
#[derive(Debug, Clone)]
pub struct GasRun {
    /// One 3-d position series per particle.
    pub trajectories: Vec<TimeSeries>,
    pub collisions: u64,
    /// Total kinetic energy `Σ |v|² / 2` after each step, starting with the initial state.
    pub energy: Vec<f64>,
}

struct State {
    pos: Vec<[f64; 3]>,
    vel: Vec<[f64; 3]>,
    radius: f64,
    side: f64,
    collisions: u64,
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl State {
    fn energy(&self) -> f64 {
        self.vel.iter().map(|v| 0.5 * dot(v, v)).sum()
    }

    fn step(&mut self, dt: f64) {
        let (lo, hi) = (self.radius, self.side - self.radius);
        for (p, v) in self.pos.iter_mut().zip(&mut self.vel) {
            for c in 0..3 {
                let mut x = p[c] + v[c] * dt;
                while x < lo || x > hi {
                    if x < lo {
                        x = 2.0 * lo - x;
                        v[c] = v[c].abs();
                    } else {
                        x = 2.0 * hi - x;
                        v[c] = -v[c].abs();
                    }
                }
                p[c] = x;
            }
        }
        let n = self.pos.len();
        let contact = 4.0 * self.radius * self.radius;
        for i in 0..n {
            for j in i + 1..n {
                let d = [
                    self.pos[i][0] - self.pos[j][0],
                    self.pos[i][1] - self.pos[j][1],
                    self.pos[i][2] - self.pos[j][2],
                ];
                let dist_sq = dot(&d, &d);
                if dist_sq >= contact || dist_sq == 0.0 {
                    continue;
                }
                let rel = [
                    self.vel[i][0] - self.vel[j][0],
                    self.vel[i][1] - self.vel[j][1],
                    self.vel[i][2] - self.vel[j][2],
                ];
                let approach = dot(&rel, &d);
                if approach >= 0.0 {
                    continue;
                }
                let k = approach / dist_sq;
                for (c, &dc) in d.iter().enumerate() {
                    self.vel[i][c] -= k * dc;
                    self.vel[j][c] += k * dc;
                }
                self.collisions += 1;
            }
        }
    }
}

fn place<R: Rng + ?Sized>(cfg: &GasConfig, rng: &mut R) -> Result<Vec<[f64; 3]>> {
    let r = cfg.radius();
    let span = cfg.box_side - 2.0 * r;
    let mut pos: Vec<[f64; 3]> = Vec::with_capacity(cfg.particles);
    for p in 0..cfg.particles {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let cand = [
                r + span * rng.random::<f64>(),
                r + span * rng.random::<f64>(),
                r + span * rng.random::<f64>(),
            ];
            let free = pos.iter().all(|q| {
                let d = [cand[0] - q[0], cand[1] - q[1], cand[2] - q[2]];
                dot(&d, &d) >= 4.0 * r * r
            });
            if free {
                pos.push(cand);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::config(format!(
                "could not place particle {p} of {} after {PLACEMENT_ATTEMPTS} attempts",
                cfg.particles
            )));
        }
    }
    Ok(pos)
}

fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

/// Simulate one gas at `temperature` (speed `√T` for every particle).
pub fn simulate_gas<R: Rng + ?Sized>(temperature: f64, cfg: &GasConfig, rng: &mut R) -> Result<GasRun> {
    cfg.validate()?;
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::config("temperature must be non-negative"));
    }
    let pos = place(cfg, rng)?;
    let speed = temperature.sqrt();
    let vel = (0..cfg.particles)
        .map(|_| unit_vector(rng).map(|c| c * speed))
        .collect();
    let mut state = State { pos, vel, radius: cfg.radius(), side: cfg.box_side, collisions: 0 };
    let dt = cfg.time_step();
    let len = cfg.steps + 1;
    let mut values = vec![Vec::with_capacity(3 * len); cfg.particles];
    let mut energy = Vec::with_capacity(len);
    let record = |state: &State, values: &mut Vec<Vec<f64>>| {
        for (v, p) in values.iter_mut().zip(&state.pos) {
            v.extend_from_slice(p);
        }
    };
    record(&state, &mut values);
    energy.push(state.energy());
    for _ in 0..cfg.steps {
        state.step(dt);
        record(&state, &mut values);
        energy.push(state.energy());
    }
    let times: Vec<f64> = (0..len).map(|k| k as f64 * dt).collect();
    let trajectories = values
        .into_iter()
        .map(|v| TimeSeries::new(times.clone(), v, 3))
        .collect::<sigdr_core::Result<_>>()?;
    Ok(GasRun { trajectories, collisions: state.collisions, energy })
}

/// `groups` gases labelled by temperature.
pub fn gen_ideal_gas(cfg: &GasConfig) -> Result<Dataset> {
    cfg.validate()?;
    let made: Vec<(EmpiricalMeasure, f64)> = (0..cfg.groups)
        .into_par_iter()
        .map(|g| {
            let mut rng = group_rng(cfg.seed, g);
            let t = uniform(&mut rng, cfg.temp_range);
            let run = simulate_gas(t, cfg, &mut rng)?;
            Ok((EmpiricalMeasure::new(run.trajectories)?, t))
        })
        .collect::<Result<_>>()?;
    let (groups, labels) = made.into_iter().unzip();
    Ok(Dataset::new(groups, labels)?)
}
