//! Truncated tensor algebra over `R^d`.
//!
//! A [`TruncatedTensor`] stores levels `0..=n` as one contiguous buffer. Level
//! `k` holds `d^k` coefficients in row-major multi-index order, so the word
//! `(i_1, ..., i_k)` (0-based letters) lives at `i_1 d^{k-1} + ... + i_k`
//! inside its level block.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Number of coefficients in the truncated tensor algebra of `R^dim` up to `level`.
///
/// Saturates at `usize::MAX` instead of overflowing.
pub fn term_count(dim: usize, level: usize) -> usize {
    checked_term_count(dim, level).unwrap_or(usize::MAX)
}

/// Like [`term_count`] but returns `None` on overflow.
pub fn checked_term_count(dim: usize, level: usize) -> Option<usize> {
    let mut total: usize = 0;
    let mut block: usize = 1;
    for k in 0..=level {
        total = total.checked_add(block)?;
        if k < level {
            block = block.checked_mul(dim)?;
        }
    }
    Some(total)
}

/// Offset of the first coefficient of level `k`.
#[inline]
fn level_offset(dim: usize, k: usize) -> usize {
    if k == 0 {
        0
    } else {
        term_count(dim, k - 1)
    }
}

/// An element of `T^{<=n}(R^d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedTensor {
    dim: usize,
    level: usize,
    data: Vec<f64>,
}

impl TruncatedTensor {
    pub fn zeros(dim: usize, level: usize) -> Self {
        assert!(dim >= 1, "tensor dimension must be positive");
        TruncatedTensor {
            dim,
            level,
            data: vec![0.0; term_count(dim, level)],
        }
    }

    /// The multiplicative identity `(1, 0, 0, ...)`.
    pub fn unit(dim: usize, level: usize) -> Self {
        let mut t = Self::zeros(dim, level);
        t.data[0] = 1.0;
        t
    }

    pub fn from_vec(dim: usize, level: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("tensor dimension must be positive"));
        }
        let expected = checked_term_count(dim, level)
            .ok_or_else(|| Error::invalid("tensor size overflows usize"))?;
        if data.len() != expected {
            return Err(Error::invalid(alloc::format!(
                "expected {expected} coefficients for dim={dim}, level={level}, got {}",
                data.len()
            )));
        }
        Ok(TruncatedTensor { dim, level, data })
    }

    /// Tensor exponential `(1, v, v^{⊗2}/2!, ..., v^{⊗n}/n!)`.
    pub fn exp(v: &[f64], level: usize) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::invalid("exp of an empty vector"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("exp of a non-finite vector"));
        }
        let dim = v.len();
        let mut t = Self::zeros(dim, level);
        t.data[0] = 1.0;
        for k in 1..=level {
            let (prev, cur) = t.data.split_at_mut(level_offset(dim, k));
            let prev = &prev[level_offset(dim, k - 1)..];
            let cur = &mut cur[..prev.len() * dim];
            let inv_k = 1.0 / k as f64;
            for (a, &p) in prev.iter().enumerate() {
                let p = p * inv_k;
                for (i, &vi) in v.iter().enumerate() {
                    cur[a * dim + i] = p * vi;
                }
            }
        }
        Ok(t)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn level(&self) -> usize {
        self.level
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Coefficients of level `k`.
    pub fn level_slice(&self, k: usize) -> &[f64] {
        assert!(k <= self.level, "level {k} above truncation {}", self.level);
        let start = level_offset(self.dim, k);
        &self.data[start..start + self.dim.pow(k as u32)]
    }

    pub fn level_slice_mut(&mut self, k: usize) -> &mut [f64] {
        assert!(k <= self.level, "level {k} above truncation {}", self.level);
        let start = level_offset(self.dim, k);
        let len = self.dim.pow(k as u32);
        &mut self.data[start..start + len]
    }

    /// Coefficient of the word `word` (0-based letters). The empty word is level 0.
    pub fn coeff(&self, word: &[usize]) -> f64 {
        let idx = word.iter().fold(0usize, |acc, &i| {
            assert!(i < self.dim, "letter {i} out of range");
            acc * self.dim + i
        });
        self.level_slice(word.len())[idx]
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.level != other.level {
            return Err(Error::invalid(alloc::format!(
                "tensor shape mismatch: (dim {}, level {}) vs (dim {}, level {})",
                self.dim, self.level, other.dim, other.level
            )));
        }
        Ok(())
    }

    /// Truncated tensor product `self ⊗ other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let d = self.dim;
        let mut out = Self::zeros(d, self.level);
        for k in 0..=self.level {
            let out_start = level_offset(d, k);
            for i in 0..=k {
                let j = k - i;
                let a = self.level_slice(i);
                let b = other.level_slice(j);
                let blen = b.len();
                let dst = &mut out.data[out_start..out_start + a.len() * blen];
                for (ai, &av) in a.iter().enumerate() {
                    if av == 0.0 {
                        continue;
                    }
                    let row = &mut dst[ai * blen..(ai + 1) * blen];
                    for (r, &bv) in row.iter_mut().zip(b) {
                        *r += av * bv;
                    }
                }
            }
        }
        Ok(out)
    }

    /// In-place `self ← self ⊗ exp(v)`.
    ///
    /// Uses a Horner scheme per level so the cost is `O(d^n)` rather than the
    /// `O(n d^n)` of a full product with a materialized exponential.
    pub fn mul_exp_assign(&mut self, v: &[f64], scratch: &mut ExpScratch) {
        debug_assert_eq!(v.len(), self.dim);
        let d = self.dim;
        let n = self.level;
        if n == 0 {
            return;
        }
        scratch.ensure(d, n);
        let ExpScratch { a, b } = scratch;
        for k in (1..=n).rev() {
            // B_1 = S_0 v / k ; B_{j+1} = (B_j + S_j) ⊗ v / (k - j) ; S_k += B_k
            let s0 = self.data[0] / k as f64;
            let mut len = d;
            for (dst, &vi) in a[..d].iter_mut().zip(v) {
                *dst = s0 * vi;
            }
            for j in 1..k {
                let sj = self.level_slice(j);
                let scale = 1.0 / (k - j) as f64;
                for (idx, &s) in sj.iter().enumerate() {
                    let base = (a[idx] + s) * scale;
                    let row = &mut b[idx * d..(idx + 1) * d];
                    for (r, &vi) in row.iter_mut().zip(v) {
                        *r = base * vi;
                    }
                }
                len *= d;
                core::mem::swap(a, b);
            }
            let sk = self.level_slice_mut(k);
            for (s, &x) in sk.iter_mut().zip(&a[..len]) {
                *s += x;
            }
        }
    }

    /// Inner product summing the Euclidean dot product of every level.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        self.check_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in &mut self.data {
            *a *= alpha;
        }
    }
}

/// Reusable buffers for [`TruncatedTensor::mul_exp_assign`].
#[derive(Debug, Default, Clone)]
pub struct ExpScratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ExpScratch {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure(&mut self, dim: usize, level: usize) {
        let top = dim.pow(level as u32);
        if self.a.len() < top {
            self.a.resize(top, 0.0);
            self.b.resize(top, 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn approx(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn term_counts() {
        assert_eq!(term_count(2, 3), 15);
        assert_eq!(term_count(1, 5), 6);
        assert_eq!(term_count(3, 2), 13);
        assert_eq!(term_count(4, 0), 1);
        assert_eq!(checked_term_count(1 << 20, 8), None);
    }

    #[test]
    fn exp_examples() {
        let e = TruncatedTensor::exp(&[2.0], 3).unwrap();
        assert!(approx(e.as_slice(), &[1.0, 2.0, 2.0, 4.0 / 3.0], 1e-15));

        let z = TruncatedTensor::exp(&[0.0, 0.0], 3).unwrap();
        assert_eq!(z, TruncatedTensor::unit(2, 3));

        let e = TruncatedTensor::exp(&[1.0, 2.0], 2).unwrap();
        assert_eq!(e.level_slice(1), &[1.0, 2.0]);
        assert!(approx(e.level_slice(2), &[0.5, 1.0, 1.0, 2.0], 1e-15));
    }

    #[test]
    fn exp_rejects_non_finite() {
        assert!(TruncatedTensor::exp(&[f64::NAN], 2).is_err());
        assert!(TruncatedTensor::exp(&[1.0, f64::INFINITY], 2).is_err());
    }

    #[test]
    fn mul_examples() {
        let a = TruncatedTensor::exp(&[1.0], 2).unwrap();
        let b = TruncatedTensor::exp(&[2.0], 2).unwrap();
        let c = a.mul(&b).unwrap();
        assert!(approx(c.as_slice(), &[1.0, 3.0, 4.5], 1e-15));

        let e1 = TruncatedTensor::exp(&[1.0, 0.0], 2).unwrap();
        let e2 = TruncatedTensor::exp(&[0.0, 1.0], 2).unwrap();
        let p = e1.mul(&e2).unwrap();
        assert_eq!(p.coeff(&[0, 1]), 1.0);
        assert_eq!(p.coeff(&[1, 0]), 0.0);

        let unit = TruncatedTensor::unit(2, 2);
        assert_eq!(p.mul(&unit).unwrap(), p);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = TruncatedTensor::unit(2, 2);
        let b = TruncatedTensor::unit(3, 2);
        let c = TruncatedTensor::unit(2, 3);
        assert!(matches!(a.mul(&b), Err(Error::InvalidArgument(_))));
        assert!(a.mul(&c).is_err());
        assert!(a.inner(&c).is_err());
        assert!(TruncatedTensor::from_vec(2, 2, vec![0.0; 6]).is_err());
    }

    #[test]
    fn inner_examples() {
        let u = TruncatedTensor::unit(3, 4);
        assert_eq!(u.inner(&u).unwrap(), 1.0);
        let a = TruncatedTensor::exp(&[1.0], 2).unwrap();
        let b = TruncatedTensor::exp(&[-1.0], 2).unwrap();
        assert!((a.inner(&a).unwrap() - 2.25).abs() < 1e-15);
        assert!((a.inner(&b).unwrap() - 0.25).abs() < 1e-15);
    }

    fn tensor_strategy(dim: usize, level: usize) -> impl Strategy<Value = TruncatedTensor> {
        proptest::collection::vec(-1.0f64..1.0, term_count(dim, level))
            .prop_map(move |v| TruncatedTensor::from_vec(dim, level, v).unwrap())
    }

    fn triple() -> impl Strategy<Value = (TruncatedTensor, TruncatedTensor, TruncatedTensor)> {
        (1usize..=3, 0usize..=4).prop_flat_map(|(d, n)| {
            (tensor_strategy(d, n), tensor_strategy(d, n), tensor_strategy(d, n))
        })
    }

    proptest! {
        #[test]
        fn mul_is_associative((a, b, c) in triple()) {
            let left = a.mul(&b).unwrap().mul(&c).unwrap();
            let right = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert!(approx(left.as_slice(), right.as_slice(), 1e-12));
        }

        #[test]
        fn unit_is_two_sided_identity((a, _b, _c) in triple()) {
            let u = TruncatedTensor::unit(a.dim(), a.level());
            prop_assert_eq!(a.mul(&u).unwrap(), a.clone());
            prop_assert_eq!(u.mul(&a).unwrap(), a);
        }

        #[test]
        fn exp_homomorphism_in_one_dim(x in -2.0f64..2.0, y in -2.0f64..2.0, n in 0usize..8) {
            let lhs = TruncatedTensor::exp(&[x], n).unwrap().mul(&TruncatedTensor::exp(&[y], n).unwrap()).unwrap();
            let rhs = TruncatedTensor::exp(&[x + y], n).unwrap();
            prop_assert!(approx(lhs.as_slice(), rhs.as_slice(), 1e-12));
        }

        #[test]
        fn mul_exp_assign_matches_full_product(
            (a, _b, _c) in triple(),
            v in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let v = &v[..a.dim()];
            let expected = a.mul(&TruncatedTensor::exp(v, a.level()).unwrap()).unwrap();
            let mut got = a.clone();
            got.mul_exp_assign(v, &mut ExpScratch::new());
            prop_assert!(approx(got.as_slice(), expected.as_slice(), 1e-12));
        }

        #[test]
        fn inner_is_symmetric_bilinear_positive((a, b, c) in triple(), s in -3.0f64..3.0) {
            let ab = a.inner(&b).unwrap();
            prop_assert!((ab - b.inner(&a).unwrap()).abs() < 1e-12);
            let mut lin = a.clone();
            lin.axpy(s, &c).unwrap();
            let lhs = lin.inner(&b).unwrap();
            let rhs = ab + s * c.inner(&b).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
            if a.as_slice().iter().any(|&x| x != 0.0) {
                prop_assert!(a.inner(&a).unwrap() > 0.0);
            }
        }
    }
}
