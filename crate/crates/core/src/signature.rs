//! Truncated signatures of piecewise-linear paths via Chen's relation.
//!
//! The signature of the path through knots `x_1, ..., x_l` is the ordered
//! product `exp(x_2 - x_1) ⊗ ... ⊗ exp(x_l - x_{l-1})`. Only the knot values
//! matter, so timestamps never enter the computation.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::streams::TimeSeries;
use crate::tensor::{ExpScratch, TruncatedTensor};

/// Incremental signature accumulator: feed knots one at a time.
#[derive(Debug, Clone)]
pub struct SignatureStream {
    sig: TruncatedTensor,
    last: Vec<f64>,
    delta: Vec<f64>,
    scratch: ExpScratch,
}

impl SignatureStream {
    /// Start at `origin` with the unit tensor.
    pub fn new(origin: &[f64], level: usize) -> Self {
        SignatureStream {
            sig: TruncatedTensor::unit(origin.len(), level),
            last: origin.to_vec(),
            delta: alloc::vec![0.0; origin.len()],
            scratch: ExpScratch::new(),
        }
    }

    /// Extend the path linearly to `point`.
    pub fn push(&mut self, point: &[f64]) {
        debug_assert_eq!(point.len(), self.last.len());
        let mut moved = false;
        for ((d, &p), l) in self.delta.iter_mut().zip(point).zip(&mut self.last) {
            *d = p - *l;
            moved |= *d != 0.0;
            *l = p;
        }
        if moved {
            self.sig.mul_exp_assign(&self.delta, &mut self.scratch);
        }
    }

    pub fn current(&self) -> &TruncatedTensor {
        &self.sig
    }

    pub fn into_signature(self) -> TruncatedTensor {
        self.sig
    }
}

/// Signature of the path through row-major `points` (`len x dim`).
pub fn signature_of_points(points: &[f64], dim: usize, level: usize) -> Result<TruncatedTensor> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::invalid("points length is not a multiple of dim"));
    }
    if points.len() < 2 * dim {
        return Err(Error::invalid("a path needs at least 2 points"));
    }
    let mut rows = points.chunks_exact(dim);
    let mut stream = SignatureStream::new(rows.next().unwrap(), level);
    for p in rows {
        stream.push(p);
    }
    Ok(stream.into_signature())
}

/// Truncated signature of a time series.
pub fn signature(ts: &TimeSeries, level: usize) -> Result<TruncatedTensor> {
    signature_of_points(ts.values(), ts.dim(), level)
}

/// Signatures of every prefix `x|[t_1, t_k]`, `k = 1..=len`. The first entry is
/// the unit tensor and the last is the full signature.
pub fn pathwise_signature(ts: &TimeSeries, level: usize) -> Result<Vec<TruncatedTensor>> {
    if ts.len() < 2 {
        return Err(Error::invalid("a path needs at least 2 points"));
    }
    let mut points = ts.points();
    let mut stream = SignatureStream::new(points.next().unwrap(), level);
    let mut out = Vec::with_capacity(ts.len());
    out.push(stream.current().clone());
    for p in points {
        stream.push(p);
        out.push(stream.current().clone());
    }
    Ok(out)
}
