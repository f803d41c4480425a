//! Wall-clock scaling measurements: SES featurization and the KES distance
//! matrix against the group size `N`, and the signature-kernel solver against
//! the path length. Everything runs on the calling thread.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sigdr_core::measures::{ses_features, SesOptions};
use sigdr_core::sigkernel::{mmd_matrix, pde_solve};
use sigdr_core::{EmpiricalMeasure, TimeSeries};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub groups: usize,
    pub length: usize,
    pub dim: usize,
    pub ses_members: Vec<usize>,
    pub kes_members: Vec<usize>,
    pub pde_lengths: Vec<usize>,
    pub inner_level: usize,
    pub outer_level: usize,
    pub refinement: u32,
    /// Repetitions per size; the fastest is kept.
    pub reps: usize,
    /// Each repetition loops until at least this much time has passed.
    pub min_millis: u64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            groups: 4,
            length: 32,
            dim: 2,
            ses_members: vec![16, 32, 64, 128],
            kes_members: vec![8, 16, 32, 64],
            pde_lengths: vec![64, 128, 256, 512],
            inner_level: 2,
            outer_level: 2,
            refinement: 0,
            reps: 3,
            min_millis: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub size: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub ses: Vec<Timing>,
    pub kes: Vec<Timing>,
    pub pde: Vec<Timing>,
    /// Least-squares slopes of log time against log size.
    pub ses_exponent: f64,
    pub kes_exponent: f64,
    pub pde_exponent: f64,
}

/// Slope of the least-squares line through `(ln size, ln seconds)`.
pub fn loglog_slope(points: &[Timing]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| (p.size as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.seconds.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn random_walk<R: Rng>(rng: &mut R, len: usize, dim: usize) -> Result<TimeSeries> {
    let step = 1.0 / (len as f64).sqrt();
    let mut values = Vec::with_capacity(len * dim);
    let mut x = vec![0.0; dim];
    for _ in 0..len {
        values.extend_from_slice(&x);
        for c in x.iter_mut() {
            *c += step * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(TimeSeries::from_values(values, dim)?)
}

fn groups<R: Rng>(rng: &mut R, m: usize, n: usize, len: usize, dim: usize) -> Result<Vec<EmpiricalMeasure>> {
    (0..m)
        .map(|_| {
            let series = (0..n).map(|_| random_walk(rng, len, dim)).collect::<Result<Vec<_>>>()?;
            Ok(EmpiricalMeasure::new(series)?)
        })
        .collect()
}

/// Fastest of `reps` averaged runs of `f`.
fn time<F: FnMut() -> Result<()>>(reps: usize, min: Duration, mut f: F) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        let mut count = 0u32;
        while count == 0 || start.elapsed() < min {
            f()?;
            count += 1;
        }
        best = best.min(start.elapsed().as_secs_f64() / count as f64);
    }
    Ok(best)
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    let sizes_ok = |v: &[usize]| v.len() >= 2 && v.iter().all(|&s| s >= 2);
    if !(sizes_ok(&cfg.ses_members) && sizes_ok(&cfg.kes_members) && sizes_ok(&cfg.pde_lengths)) {
        return Err(Error::config("each bench needs at least two sizes, all at least 2"));
    }
    if cfg.groups == 0 || cfg.length < 2 || cfg.dim == 0 {
        return Err(Error::config("bench groups, length and dim must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let min = Duration::from_millis(cfg.min_millis);
    let opts = SesOptions::new(cfg.inner_level, cfg.outer_level);

    let mut ses = Vec::new();
    for &n in &cfg.ses_members {
        let gs = groups(&mut rng, cfg.groups, n, cfg.length, cfg.dim)?;
        let seconds = time(cfg.reps, min, || {
            for g in &gs {
                ses_features(g, &opts)?;
            }
            Ok(())
        })?;
        log::info!("ses N={n}: {seconds:.3e} s");
        ses.push(Timing { size: n, seconds });
    }

    let mut kes = Vec::new();
    for &n in &cfg.kes_members {
        let gs = groups(&mut rng, cfg.groups, n, cfg.length, cfg.dim)?;
        let seconds = time(cfg.reps, min, || {
            mmd_matrix(&gs, cfg.refinement)?;
            Ok(())
        })?;
        log::info!("kes N={n}: {seconds:.3e} s");
        kes.push(Timing { size: n, seconds });
    }

    let mut pde = Vec::new();
    for &len in &cfg.pde_lengths {
        let x = random_walk(&mut rng, len, cfg.dim)?;
        let y = random_walk(&mut rng, len, cfg.dim)?;
        let seconds = time(cfg.reps, min, || {
            pde_solve(&x, &y, cfg.refinement)?;
            Ok(())
        })?;
        log::info!("pde len={len}: {seconds:.3e} s");
        pde.push(Timing { size: len, seconds });
    }

    Ok(BenchReport {
        config: cfg.clone(),
        ses_exponent: loglog_slope(&ses),
        kes_exponent: loglog_slope(&kes),
        pde_exponent: loglog_slope(&pde),
        ses,
        kes,
        pde,
    })
}
