//! Fractional Brownian motion on a uniform grid of `[0, 1]`.
//!
//! Increments (fractional Gaussian noise) are drawn by circulant embedding;
//! if the embedding has an eigenvalue below `-1e-12`, short grids fall back to
//! a Cholesky factor of the increment covariance.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use sigdr_core::linalg::cholesky;
use sigdr_core::TimeSeries;

use crate::{Error, Result};

const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = -1e-12;
const CHOLESKY_MAX_LEN: usize = 2000;

/// `Cov(ΔW_j, ΔW_{j+k})` for increments over a step `h`.
pub fn fgn_autocovariance(hurst: f64, h: f64, k: usize) -> f64 {
    let two_h = 2.0 * hurst;
    let k = k as f64;
    let term = |x: f64| x.abs().powf(two_h);
    0.5 * h.powf(two_h) * (term(k + 1.0) - 2.0 * term(k) + term(k - 1.0))
}

enum Method {
    Spectral {
        /// `sqrt(λ_k / 2n)` for the `2n` circulant eigenvalues.
        weights: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Cholesky {
        factor: Vec<f64>,
    },
}

/// Reusable sampler for paths with `length` points.
pub struct FbmSampler {
    hurst: f64,
    length: usize,
    method: Method,
}

impl FbmSampler {
    pub fn new(hurst: f64, length: usize) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::config(format!("Hurst exponent {hurst} outside (0, 1)")));
        }
        if length < 2 {
            return Err(Error::config("fBM path needs at least 2 points"));
        }
        let n = length - 1;
        let h = 1.0 / n as f64;
        let m = 2 * n;
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                let k = if j <= n { j } else { m - j };
                Complex::new(fgn_autocovariance(hurst, h, k), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);
        let min = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        let method = if min >= NEGATIVE_EIGENVALUE_TOLERANCE {
            Method::Spectral {
                weights: row.iter().map(|c| (c.re.max(0.0) / m as f64).sqrt()).collect(),
                fft,
            }
        } else if length <= CHOLESKY_MAX_LEN {
            return Self::cholesky(hurst, length);
        } else {
            return Err(sigdr_core::Error::Numerical(format!(
                "circulant embedding has eigenvalue {min} and length {length} is too long for Cholesky"
            ))
            .into());
        };
        Ok(FbmSampler { hurst, length, method })
    }

    /// Sampler that always uses the Cholesky factor of the increment covariance.
    pub fn cholesky(hurst: f64, length: usize) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) || length < 2 {
            return Err(Error::config("invalid fBM parameters"));
        }
        let n = length - 1;
        let h = 1.0 / n as f64;
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                cov[i * n + j] = fgn_autocovariance(hurst, h, i.abs_diff(j));
            }
        }
        let factor = cholesky(&cov, n).ok_or_else(|| {
            Error::from(sigdr_core::Error::Numerical(
                "fBM covariance is not positive definite".into(),
            ))
        })?;
        Ok(FbmSampler { hurst, length, method: Method::Cholesky { factor } })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn uses_cholesky(&self) -> bool {
        matches!(self.method, Method::Cholesky { .. })
    }

    /// `length - 1` increments over steps of `1 / (length - 1)`.
    pub fn increments<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.length - 1;
        match &self.method {
            Method::Spectral { weights, fft } => {
                let mut buf: Vec<Complex<f64>> = weights
                    .iter()
                    .map(|w| {
                        let a: f64 = rng.sample(StandardNormal);
                        let b: f64 = rng.sample(StandardNormal);
                        Complex::new(w * a, w * b)
                    })
                    .collect();
                fft.process(&mut buf);
                buf[..n].iter().map(|c| c.re).collect()
            }
            Method::Cholesky { factor } => {
                let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                (0..n)
                    .map(|i| (0..=i).map(|k| factor[i * n + k] * z[k]).sum())
                    .collect()
            }
        }
    }

    /// Path values `W_0 = 0, W_{1/n}, ..., W_1`.
    pub fn path_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.length);
        let mut w = 0.0;
        out.push(w);
        for dw in self.increments(rng) {
            w += dw;
            out.push(w);
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TimeSeries> {
        let n = (self.length - 1) as f64;
        let times = (0..self.length).map(|k| k as f64 / n).collect();
        Ok(TimeSeries::new(times, self.path_values(rng), 1)?)
    }
}

/// One fBM path with `length` points on `[0, 1]`.
pub fn gen_fbm<R: Rng + ?Sized>(hurst: f64, length: usize, rng: &mut R) -> Result<TimeSeries> {
    FbmSampler::new(hurst, length)?.sample(rng)
}
