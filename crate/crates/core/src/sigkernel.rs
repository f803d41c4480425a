//! Signature kernel by finite differences on the Goursat problem
//! `∂²u/∂s∂t = <x'(s), y'(t)> u`, `u(a, ·) = u(·, a) = 1`, the expected-signature
//! MMD built from it, and Gram matrices over groups.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::streams::{EmpiricalMeasure, TimeSeries};

/// Increments between consecutive knots, row-major `(len - 1) x dim`.
fn increments(ts: &TimeSeries) -> Vec<f64> {
    let d = ts.dim();
    let v = ts.values();
    (d..v.len()).map(|i| v[i] - v[i - d]).collect()
}

/// Corner value of the explicit scheme
/// `U[i+1,j+1] = U[i,j+1] + U[i+1,j] + (Δx·Δy - 1) U[i,j]`
/// on a grid refined `2^refinement` times per data interval.
pub fn pde_solve(x: &TimeSeries, y: &TimeSeries, refinement: u32) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::invalid(alloc::format!(
            "signature kernel of paths with dimensions {} and {}",
            x.dim(),
            y.dim()
        )));
    }
    if refinement > 16 {
        return Err(Error::invalid("refinement above 16 is not supported"));
    }
    let d = x.dim();
    let (dx, dy) = (increments(x), increments(y));
    let (nx, ny) = (x.len() - 1, y.len() - 1);
    let scale = 1.0 / (1u64 << (2 * refinement)) as f64;
    // coarse cell inner products, already divided by 4^refinement
    let mut ip = vec![0.0; nx * ny];
    for (a, xa) in dx.chunks_exact(d).enumerate() {
        for (b, yb) in dy.chunks_exact(d).enumerate() {
            let dot: f64 = xa.iter().zip(yb).map(|(p, q)| p * q).sum();
            ip[a * ny + b] = dot * scale - 1.0;
        }
    }
    let fine = 1usize << refinement;
    let cols = ny * fine;
    let mut prev = vec![1.0; cols + 1];
    let mut cur = vec![1.0; cols + 1];
    for i in 0..nx * fine {
        let row = &ip[(i >> refinement) * ny..(i >> refinement) * ny + ny];
        cur[0] = 1.0;
        for j in 0..cols {
            cur[j + 1] = prev[j + 1] + cur[j] + row[j >> refinement] * prev[j];
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[cols])
}

/// Order-independent sum: sort, then add.
fn canonical_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// `(1/N²) Σ_{p,q} k(x_p, x_q)` over one group. Each unordered pair is solved once.
pub fn within_group_mean(group: &EmpiricalMeasure, refinement: u32) -> Result<f64> {
    let s = group.series();
    let n = s.len();
    let mut vals = Vec::with_capacity(n * n);
    for p in 0..n {
        vals.push(pde_solve(&s[p], &s[p], refinement)?);
        for q in p + 1..n {
            let k = pde_solve(&s[p], &s[q], refinement)?;
            vals.push(k);
            vals.push(k);
        }
    }
    Ok(canonical_sum(vals) / (n * n) as f64)
}

/// `(1/(N_a N_b)) Σ_{p,q} k(a_p, b_q)`.
pub fn cross_group_mean(a: &EmpiricalMeasure, b: &EmpiricalMeasure, refinement: u32) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::invalid("groups have different dimensions"));
    }
    let mut vals = Vec::with_capacity(a.len() * b.len());
    for x in a.series() {
        for y in b.series() {
            vals.push(pde_solve(x, y, refinement)?);
        }
    }
    Ok(canonical_sum(vals) / (a.len() * b.len()) as f64)
}

/// Squared MMD between the expected signatures of two groups,
/// `E_aa + E_bb - 2 E_ab`.
pub fn mmd_sq(a: &EmpiricalMeasure, b: &EmpiricalMeasure, refinement: u32) -> Result<f64> {
    let e_aa = within_group_mean(a, refinement)?;
    let e_bb = within_group_mean(b, refinement)?;
    let e_ab = cross_group_mean(a, b, refinement)?;
    Ok(e_aa + e_bb - 2.0 * e_ab)
}

/// What a [`GramMatrix`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramKind {
    /// Squared distances between group embeddings.
    MmdSq,
    /// Kernel values `exp(-σ² · mmd²)`.
    Kernel,
}

/// Symmetric `M x M` matrix of group-level evaluations, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    size: usize,
    entries: Vec<f64>,
    kind: GramKind,
}

impl GramMatrix {
    pub fn new(size: usize, entries: Vec<f64>, kind: GramKind) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::invalid(alloc::format!(
                "gram matrix of size {size} needs {} entries, got {}",
                size * size,
                entries.len()
            )));
        }
        Ok(GramMatrix { size, entries, kind })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn kind(&self) -> GramKind {
        self.kind
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.size {
            for j in i + 1..self.size {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Row-major block `rows x cols`.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// Square sub-matrix on `idx`, same kind.
    pub fn principal(&self, idx: &[usize]) -> GramMatrix {
        GramMatrix {
            size: idx.len(),
            entries: self.block(idx, idx),
            kind: self.kind,
        }
    }

    /// Gaussian kernel `exp(-σ² D)` from a squared-distance matrix.
    pub fn to_kernel(&self, sigma: f64) -> Result<GramMatrix> {
        if self.kind != GramKind::MmdSq {
            return Err(Error::invalid("to_kernel expects a squared-distance matrix"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma must be positive and finite"));
        }
        let s2 = sigma * sigma;
        Ok(GramMatrix {
            size: self.size,
            entries: self.entries.iter().map(|&d| libm::exp(-s2 * d)).collect(),
            kind: GramKind::Kernel,
        })
    }
}

/// `σ` for lengthscale `l` under `σ² = 1 / (2 l²)`.
pub fn sigma_from_lengthscale(lengthscale: f64) -> f64 {
    1.0 / (libm::sqrt(2.0) * lengthscale)
}

/// Tolerance below zero after which a squared MMD counts as a numerical failure.
pub const NEGATIVE_MMD_TOLERANCE: f64 = 1e-6;

/// Build the squared-distance matrix from per-group self terms and a cross
/// term for every pair `i < j`. Small negative round-off is clamped to zero.
pub fn assemble_mmd<F>(within: &[f64], mut cross: F) -> Result<GramMatrix>
where
    F: FnMut(usize, usize) -> f64,
{
    let m = within.len();
    let mut entries = vec![0.0; m * m];
    for i in 0..m {
        for j in i + 1..m {
            let d = within[i] + within[j] - 2.0 * cross(i, j);
            if !d.is_finite() || d < -NEGATIVE_MMD_TOLERANCE {
                return Err(Error::numerical(alloc::format!(
                    "squared MMD between groups {i} and {j} is {d}"
                )));
            }
            let d = d.max(0.0);
            entries[i * m + j] = d;
            entries[j * m + i] = d;
        }
    }
    GramMatrix::new(m, entries, GramKind::MmdSq)
}

/// Pairwise squared MMD matrix; within-group means are computed once per group.
pub fn mmd_matrix(groups: &[EmpiricalMeasure], refinement: u32) -> Result<GramMatrix> {
    check_groups(groups)?;
    let within = groups
        .iter()
        .map(|g| within_group_mean(g, refinement))
        .collect::<Result<Vec<_>>>()?;
    let m = groups.len();
    let mut cross = vec![0.0; m * m];
    for i in 0..m {
        for j in i + 1..m {
            cross[i * m + j] = cross_group_mean(&groups[i], &groups[j], refinement)?;
        }
    }
    assemble_mmd(&within, |i, j| cross[i * m + j])
}

pub(crate) fn check_groups(groups: &[EmpiricalMeasure]) -> Result<()> {
    let first = groups
        .first()
        .ok_or_else(|| Error::invalid("gram matrix of zero groups"))?;
    if groups.iter().any(|g| g.dim() != first.dim()) {
        return Err(Error::invalid("groups have different dimensions"));
    }
    Ok(())
}

/// KES Gram matrix `exp(-σ² MMD²)`.
pub fn kes_gram(groups: &[EmpiricalMeasure], sigma: f64, refinement: u32) -> Result<GramMatrix> {
    mmd_matrix(groups, refinement)?.to_kernel(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::signature;
    use crate::tensor::TruncatedTensor;

    fn line(values: &[f64], dim: usize) -> TimeSeries {
        TimeSeries::from_values(values.to_vec(), dim).unwrap()
    }

    /// Closed form of the scheme for one 1-d segment pair with product `c`:
    /// `Σ_k C(N,k)² (c/N²)^k`, `N = 2^r`.
    fn scheme_closed_form(c: f64, r: u32) -> f64 {
        let n = 1u64 << r;
        let mut binom = 1.0f64;
        let mut total = 0.0;
        let h = c / (n * n) as f64;
        for k in 0..=n {
            if k > 0 {
                binom = binom * (n - k + 1) as f64 / k as f64;
            }
            total += binom * binom * libm::pow(h, k as f64);
        }
        total
    }

    fn bessel_series(c: f64) -> f64 {
        let x = TruncatedTensor::exp(&[1.0], 20).unwrap();
        let y = TruncatedTensor::exp(&[c], 20).unwrap();
        x.inner(&y).unwrap()
    }

    #[test]
    fn constant_argument_gives_one() {
        let x = line(&[0.0, 0.3, 1.0, -2.0, 0.5, 0.5], 2);
        let y = line(&[1.0, 1.0, 1.0, 1.0], 2);
        for r in 0..4 {
            assert_eq!(pde_solve(&x, &y, r).unwrap(), 1.0);
        }
    }

    #[test]
    fn unit_segments_match_scheme_and_series() {
        let x = line(&[0.0, 1.0], 1);
        let y = line(&[0.0, -1.0], 1);
        assert!((bessel_series(1.0) - 2.27958530).abs() < 1e-8);
        assert!((bessel_series(-1.0) - 0.22389078).abs() < 1e-8);
        let kxx = pde_solve(&x, &x, 6).unwrap();
        let kxy = pde_solve(&x, &y, 6).unwrap();
        assert!((kxx - scheme_closed_form(1.0, 6)).abs() < 1e-12);
        assert!((kxy - scheme_closed_form(-1.0, 6)).abs() < 1e-12);
        // first-order scheme: error ~ c²/2^(r+1) at refinement r
        assert!((kxx - bessel_series(1.0)).abs() < 0.011);
        assert!((kxy - bessel_series(-1.0)).abs() < 0.006);
        assert!((pde_solve(&x, &x, 7).unwrap() - bessel_series(1.0)).abs() < 0.006);
    }

    #[test]
    fn dimension_mismatch() {
        let x = line(&[0.0, 1.0], 1);
        let y = line(&[0.0, 1.0, 2.0, 3.0], 2);
        assert!(matches!(pde_solve(&x, &y, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn timestamps_do_not_matter() {
        let x = line(&[0.0, 0.1, 0.2, -0.1, 0.4, 0.3], 2);
        let y = line(&[0.1, 0.0, -0.2, 0.1, 0.3, 0.2], 2);
        let x2 = x.with_times(alloc::vec![0.0, 0.01, 7.0]).unwrap();
        let y2 = y.with_times(alloc::vec![-3.0, 2.0, 2.5]).unwrap();
        assert_eq!(pde_solve(&x, &y, 2).unwrap(), pde_solve(&x2, &y2, 2).unwrap());
    }

    #[test]
    fn pde_is_close_to_truncated_signature_inner_product() {
        let x = line(&[0.0, 0.0, 0.1, 0.2, 0.3, 0.1, 0.2, -0.1], 2);
        let y = line(&[0.0, 0.0, -0.2, 0.1, 0.1, 0.3], 2);
        let oracle = signature(&x, 12).unwrap().inner(&signature(&y, 12).unwrap()).unwrap();
        let k = pde_solve(&x, &y, 6).unwrap();
        assert!((k - oracle).abs() < 1e-3, "{k} vs {oracle}");
    }

    #[test]
    fn pde_is_symmetric_bit_exact() {
        let x = line(&[0.0, 0.5, 0.1, 0.2, 0.3, 0.1, 0.2, -0.1], 2);
        let y = line(&[0.0, 0.7, -0.2, 0.1, 0.1, 0.3], 2);
        for r in 0..3 {
            assert_eq!(pde_solve(&x, &y, r).unwrap(), pde_solve(&y, &x, r).unwrap());
        }
    }

    #[test]
    fn mmd_examples() {
        let a = EmpiricalMeasure::new(alloc::vec![line(&[0.0, 1.0], 1)]).unwrap();
        let b = EmpiricalMeasure::new(alloc::vec![line(&[0.0, -1.0], 1)]).unwrap();
        let expected = 2.0 * (bessel_series(1.0) - bessel_series(-1.0));
        let got = mmd_sq(&a, &b, 6).unwrap();
        assert!((got - expected).abs() < 0.05, "{got} vs {expected}");
        assert_eq!(mmd_sq(&a, &b, 6).unwrap(), mmd_sq(&b, &a, 6).unwrap());

        let g = EmpiricalMeasure::new(alloc::vec![
            line(&[0.0, 0.1, 0.5, 0.2], 2),
            line(&[0.0, -0.3, 0.2, 0.2, 0.1, 0.0], 2),
            line(&[1.0, 1.0, 0.0, 0.5], 2),
        ])
        .unwrap();
        assert!(mmd_sq(&g, &g, 2).unwrap().abs() <= 1e-9);

        let gram = kes_gram(&[a.clone(), b.clone()], 1.0, 6).unwrap();
        assert_eq!(gram.get(0, 0), 1.0);
        assert_eq!(gram.get(1, 1), 1.0);
        assert!((gram.get(0, 1) - libm::exp(-expected)).abs() < 0.002);
        assert_eq!(gram.get(0, 1), gram.get(1, 0));

        let single = kes_gram(&[g], 0.7, 0).unwrap();
        assert_eq!(single.entries(), &[1.0]);
    }

    #[test]
    fn negative_mmd_is_reported() {
        let err = assemble_mmd(&[1.0, 1.0], |_, _| 2.0).unwrap_err();
        assert!(err.is_numerical());
        let ok = assemble_mmd(&[1.0, 1.0], |_, _| 1.0 + 1e-9).unwrap();
        assert_eq!(ok.get(0, 1), 0.0);
    }

    #[test]
    fn lengthscale_convention() {
        let s = sigma_from_lengthscale(2.0);
        assert!((s * s - 1.0 / 8.0).abs() < 1e-15);
    }
}
