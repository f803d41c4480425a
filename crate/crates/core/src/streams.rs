//! Time-series containers and the path transforms applied before signatures.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

/// Timestamped samples of a `dim`-dimensional stream, read as a
/// piecewise-linear path through its knots.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    /// Row-major `len x dim`.
    values: Vec<f64>,
    dim: usize,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("time series dimension must be positive"));
        }
        if times.len() < 2 {
            return Err(Error::invalid(format!(
                "time series needs at least 2 points, got {}",
                times.len()
            )));
        }
        if values.len() != times.len() * dim {
            return Err(Error::invalid(format!(
                "values has {} entries, expected {} x {}",
                values.len(),
                times.len(),
                dim
            )));
        }
        if times.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::invalid("time series contains non-finite entries"));
        }
        if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "timestamps not strictly increasing at index {}",
                k + 1
            )));
        }
        Ok(TimeSeries { times, values, dim })
    }

    /// Series on the uniform grid `0, 1, ..., len-1`.
    pub fn from_values(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("time series dimension must be positive"));
        }
        let len = values.len() / dim;
        let times = (0..len).map(|k| k as f64).collect();
        Self::new(times, values, dim)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.times.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> core::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    /// Replace the timestamps, keeping the values.
    pub fn with_times(&self, times: Vec<f64>) -> Result<Self> {
        Self::new(times, self.values.clone(), self.dim)
    }

    /// Prepend a time channel `(t - t_1) / (t_len - t_1)`.
    pub fn time_augment(&self) -> TimeSeries {
        let t0 = self.times[0];
        let span = self.times[self.len() - 1] - t0;
        let d = self.dim + 1;
        let mut values = Vec::with_capacity(self.len() * d);
        for (t, p) in self.times.iter().zip(self.points()) {
            values.push((t - t0) / span);
            values.extend_from_slice(p);
        }
        TimeSeries {
            times: self.times.clone(),
            values,
            dim: d,
        }
    }

    /// Lead-lag transform.
    ///
    /// Each coordinate becomes an adjacent `(lead, lag)` pair; the output has
    /// `2 len - 1` points on the synthetic grid `1, 2, ..., 2 len - 1`.
    pub fn lead_lag(&self) -> TimeSeries {
        let len = self.len();
        let out_len = 2 * len - 1;
        let d = 2 * self.dim;
        let mut values = Vec::with_capacity(out_len * d);
        for p in 1..=out_len {
            // lead_p = x_k for p in {2k-1, 2k-2}; lag_p = x_k for p in {2k-1, 2k}
            let lead_k = if p % 2 == 1 { p.div_ceil(2) } else { (p + 2) / 2 };
            let lag_k = if p % 2 == 1 { p.div_ceil(2) } else { p / 2 };
            let lead = self.point(lead_k - 1);
            let lag = self.point(lag_k - 1);
            for c in 0..self.dim {
                values.push(lead[c]);
                values.push(lag[c]);
            }
        }
        TimeSeries {
            times: (1..=out_len).map(|p| p as f64).collect(),
            values,
            dim: d,
        }
    }

    /// Drop each interior point independently with probability `drop_rate`.
    /// Endpoints always survive.
    pub fn subsample<R: Rng + ?Sized>(&self, drop_rate: f64, rng: &mut R) -> Result<TimeSeries> {
        if !(0.0..1.0).contains(&drop_rate) {
            return Err(Error::invalid(format!(
                "drop rate {drop_rate} outside [0, 1)"
            )));
        }
        let len = self.len();
        if (len as f64) * (1.0 - drop_rate) < 2.0 {
            return Err(Error::invalid(format!(
                "subsampling {len} points at rate {drop_rate} leaves fewer than 2 points"
            )));
        }
        let mut keep = Vec::with_capacity(len);
        keep.push(0);
        for k in 1..len - 1 {
            // always draw so the stream consumption is independent of the outcome
            let u: f64 = rng.random();
            if u >= drop_rate {
                keep.push(k);
            }
        }
        keep.push(len - 1);
        let mut times = Vec::with_capacity(keep.len());
        let mut values = Vec::with_capacity(keep.len() * self.dim);
        for &k in &keep {
            times.push(self.times[k]);
            values.extend_from_slice(self.point(k));
        }
        Ok(TimeSeries {
            times,
            values,
            dim: self.dim,
        })
    }

    /// Linear interpolation onto `grid` (must be strictly increasing). Values
    /// outside the observed time range are held at the nearest endpoint.
    pub fn resample(&self, grid: &[f64]) -> Result<TimeSeries> {
        let d = self.dim;
        let mut values = Vec::with_capacity(grid.len() * d);
        let mut seg = 0;
        let last = self.len() - 1;
        for &t in grid {
            if t <= self.times[0] {
                values.extend_from_slice(self.point(0));
                continue;
            }
            if t >= self.times[last] {
                values.extend_from_slice(self.point(last));
                continue;
            }
            while self.times[seg + 1] < t {
                seg += 1;
            }
            let (t0, t1) = (self.times[seg], self.times[seg + 1]);
            let w = (t - t0) / (t1 - t0);
            let (a, b) = (self.point(seg), self.point(seg + 1));
            for c in 0..d {
                values.push(if w == 1.0 { b[c] } else { a[c] + w * (b[c] - a[c]) });
            }
        }
        TimeSeries::new(grid.to_vec(), values, d)
    }

    /// Apply `(x - shift) / scale` per channel.
    pub fn standardized(&self, scaler: &ChannelScaler) -> Result<TimeSeries> {
        if scaler.mean.len() != self.dim {
            return Err(Error::invalid(format!(
                "scaler has {} channels, series has {}",
                scaler.mean.len(),
                self.dim
            )));
        }
        let mut values = self.values.clone();
        for p in values.chunks_exact_mut(self.dim) {
            for ((x, m), s) in p.iter_mut().zip(&scaler.mean).zip(&scaler.scale) {
                *x = (*x - m) / s;
            }
        }
        Ok(TimeSeries {
            times: self.times.clone(),
            values,
            dim: self.dim,
        })
    }
}

/// A group of series standing for the empirical measure `(1/N) Σ δ_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    series: Vec<TimeSeries>,
}

impl EmpiricalMeasure {
    pub fn new(series: Vec<TimeSeries>) -> Result<Self> {
        let first = series
            .first()
            .ok_or_else(|| Error::invalid("empirical measure needs at least one series"))?;
        let d = first.dim();
        if let Some(k) = series.iter().position(|s| s.dim() != d) {
            return Err(Error::invalid(format!(
                "series {k} has dimension {}, expected {d}",
                series[k].dim()
            )));
        }
        Ok(EmpiricalMeasure { series })
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.series[0].dim()
    }

    pub fn max_len(&self) -> usize {
        self.series.iter().map(TimeSeries::len).max().unwrap_or(0)
    }

    /// Apply a fallible transform to every member series.
    pub fn try_map<F>(&self, f: F) -> Result<EmpiricalMeasure>
    where
        F: FnMut(&TimeSeries) -> Result<TimeSeries>,
    {
        EmpiricalMeasure::new(self.series.iter().map(f).collect::<Result<Vec<_>>>()?)
    }

    /// Whether all members share one time grid.
    pub fn has_common_grid(&self) -> bool {
        let t = self.series[0].times();
        self.series.iter().all(|s| s.times() == t)
    }

    /// Re-sample every member onto the sorted union of all member timestamps.
    pub fn align_to_union_grid(&self) -> Result<EmpiricalMeasure> {
        if self.has_common_grid() {
            return Ok(self.clone());
        }
        let mut grid: Vec<f64> = self
            .series
            .iter()
            .flat_map(|s| s.times().iter().copied())
            .collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        self.try_map(|s| s.resample(&grid))
    }
}

/// Labelled groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    ids: Vec<String>,
    groups: Vec<EmpiricalMeasure>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(groups: Vec<EmpiricalMeasure>, labels: Vec<f64>) -> Result<Self> {
        let ids = (0..groups.len()).map(|i| format!("{i}")).collect();
        Self::with_ids(ids, groups, labels)
    }

    pub fn with_ids(ids: Vec<String>, groups: Vec<EmpiricalMeasure>, labels: Vec<f64>) -> Result<Self> {
        if groups.len() != labels.len() || ids.len() != labels.len() {
            return Err(Error::invalid(format!(
                "dataset has {} groups, {} labels and {} ids",
                groups.len(),
                labels.len(),
                ids.len()
            )));
        }
        if labels.iter().any(|y| !y.is_finite()) {
            return Err(Error::invalid("dataset labels must be finite"));
        }
        Ok(Dataset { ids, groups, labels })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn groups(&self) -> &[EmpiricalMeasure] {
        &self.groups
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Sub-dataset with the given group indices, in order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            groups: idx.iter().map(|&i| self.groups[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Per-channel affine standardization fitted on a set of groups.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ChannelScaler {
    /// Fit mean and standard deviation over every sample of every series.
    /// Constant channels get scale 1.
    pub fn fit<'a, I>(groups: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a EmpiricalMeasure>,
    {
        let mut dim = None;
        let mut count = 0.0;
        let mut sum: Vec<f64> = Vec::new();
        let mut sum_sq: Vec<f64> = Vec::new();
        for g in groups {
            let d = *dim.get_or_insert_with(|| {
                sum = alloc::vec![0.0; g.dim()];
                sum_sq = alloc::vec![0.0; g.dim()];
                g.dim()
            });
            if g.dim() != d {
                return Err(Error::invalid("groups have mixed dimensions"));
            }
            for s in g.series() {
                for p in s.points() {
                    count += 1.0;
                    for c in 0..d {
                        sum[c] += p[c];
                        sum_sq[c] += p[c] * p[c];
                    }
                }
            }
        }
        if dim.is_none() {
            return Err(Error::invalid("cannot fit a scaler on zero groups"));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
        let scale = sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| {
                let var = (sq / count - m * m).max(0.0);
                let sd = libm::sqrt(var);
                if sd > 1e-12 { sd } else { 1.0 }
            })
            .collect();
        Ok(ChannelScaler { mean, scale })
    }

    pub fn identity(dim: usize) -> Self {
        ChannelScaler {
            mean: alloc::vec![0.0; dim],
            scale: alloc::vec![1.0; dim],
        }
    }
}
