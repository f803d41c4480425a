//! Expected signatures of empirical measures, the pathwise expected signature
//! (PES) and SES features (the signature of the PES).

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::signature::{signature, SignatureStream};
use crate::streams::EmpiricalMeasure;
use crate::tensor::{checked_term_count, term_count, TruncatedTensor};

/// Mean of equally long coefficient blocks by pairwise summation, in the
/// given member order.
fn pairwise_mean(blocks: &[&[f64]]) -> Vec<f64> {
    fn sum(blocks: &[&[f64]], out: &mut [f64]) {
        match blocks.len() {
            0 => out.iter_mut().for_each(|o| *o = 0.0),
            1 => out.copy_from_slice(blocks[0]),
            _ => {
                let mid = blocks.len() / 2;
                sum(&blocks[..mid], out);
                let mut right = alloc::vec![0.0; out.len()];
                sum(&blocks[mid..], &mut right);
                for (o, r) in out.iter_mut().zip(&right) {
                    *o += r;
                }
            }
        }
    }
    let mut out = alloc::vec![0.0; blocks[0].len()];
    sum(blocks, &mut out);
    let inv = 1.0 / blocks.len() as f64;
    out.iter_mut().for_each(|o| *o *= inv);
    out
}

/// Mean of the member signatures.
pub fn expected_signature(group: &EmpiricalMeasure, level: usize) -> Result<TruncatedTensor> {
    if group.is_empty() {
        return Err(Error::invalid("expected signature of an empty group"));
    }
    let sigs = group
        .series()
        .iter()
        .map(|s| signature(s, level))
        .collect::<Result<Vec<_>>>()?;
    let blocks: Vec<&[f64]> = sigs.iter().map(TruncatedTensor::as_slice).collect();
    TruncatedTensor::from_vec(group.dim(), level, pairwise_mean(&blocks))
}

/// The PES of a group sampled on the group's common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSeries {
    pub times: Vec<f64>,
    pub steps: Vec<TruncatedTensor>,
}

/// Walk the PES step by step without materializing it.
///
/// Members on different grids are first re-sampled onto the union grid.
fn walk_pes<F>(group: &EmpiricalMeasure, level: usize, mut visit: F) -> Result<()>
where
    F: FnMut(usize, f64, &[f64]),
{
    if group.is_empty() {
        return Err(Error::invalid("pathwise expected signature of an empty group"));
    }
    let aligned;
    let group = if group.has_common_grid() {
        group
    } else {
        aligned = group.align_to_union_grid()?;
        &aligned
    };
    let members = group.series();
    let len = members[0].len();
    let mut streams: Vec<SignatureStream> = members
        .iter()
        .map(|s| SignatureStream::new(s.point(0), level))
        .collect();
    let times = members[0].times();
    for (k, &t) in times.iter().enumerate().take(len) {
        if k > 0 {
            for (st, s) in streams.iter_mut().zip(members) {
                st.push(s.point(k));
            }
        }
        let blocks: Vec<&[f64]> = streams.iter().map(|s| s.current().as_slice()).collect();
        let mean = pairwise_mean(&blocks);
        visit(k, t, &mean);
    }
    Ok(())
}

/// Pathwise expected signature: step `k` is the mean of the member prefix
/// signatures up to `t_k`.
pub fn pathwise_expected_signature(group: &EmpiricalMeasure, level: usize) -> Result<TensorSeries> {
    let dim = group.dim();
    let mut times = Vec::new();
    let mut steps = Vec::new();
    walk_pes(group, level, |_, t, mean| {
        times.push(t);
        steps.push(TruncatedTensor::from_vec(dim, level, mean.to_vec()).expect("shape"));
    })?;
    Ok(TensorSeries { times, steps })
}

/// Settings for [`ses_features`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SesOptions {
    /// Truncation of the member signatures inside the PES.
    pub inner_level: usize,
    /// Truncation of the outer signature of the PES.
    pub outer_level: usize,
    /// Multiply level-k PES channels by k! before the outer signature.
    pub factorial_scaling: bool,
    /// Prepend a normalized time channel to the outer path.
    pub time_augment_outer: bool,
    /// Refuse to build more than this many features per group.
    pub max_features: usize,
}

impl SesOptions {
    pub fn new(inner_level: usize, outer_level: usize) -> Self {
        SesOptions {
            inner_level,
            outer_level,
            factorial_scaling: false,
            time_augment_outer: false,
            max_features: 1_000_000,
        }
    }

    /// Number of outer-path channels for raw dimension `dim`.
    pub fn channels(&self, dim: usize) -> usize {
        term_count(dim, self.inner_level) - 1 + self.time_augment_outer as usize
    }

    /// Feature count for raw dimension `dim`, or `None` on overflow.
    pub fn feature_len(&self, dim: usize) -> Option<usize> {
        checked_term_count(self.channels(dim), self.outer_level)
    }
}

/// SES features of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub coefficients: Vec<f64>,
    pub inner_level: usize,
    pub outer_level: usize,
    pub raw_dim: usize,
}

/// Signature (level `outer_level`) of the PES (level `inner_level`) with the
/// constant level-0 channel dropped.
pub fn ses_features(group: &EmpiricalMeasure, opts: &SesOptions) -> Result<FeatureVector> {
    let dim = group.dim();
    let channels = opts.channels(dim);
    if channels == 0 {
        return Err(Error::invalid("SES needs at least one PES channel"));
    }
    let size = opts.feature_len(dim);
    match size {
        Some(s) if s <= opts.max_features => {}
        _ => {
            return Err(Error::invalid(alloc::format!(
                "SES feature length {} exceeds cap {}",
                size.map_or_else(|| alloc::string::String::from("overflow"), |s| alloc::format!("{s}")),
                opts.max_features
            )))
        }
    }

    // k! weights per coefficient, level 0 excluded
    let mut weights = Vec::with_capacity(channels);
    if opts.factorial_scaling {
        let mut fact = 1.0;
        for k in 1..=opts.inner_level {
            fact *= k as f64;
            weights.extend(core::iter::repeat_n(fact, dim.pow(k as u32)));
        }
    }

    let (t_first, t_span) = {
        let aligned_times = if group.has_common_grid() {
            group.series()[0].times().to_vec()
        } else {
            let mut g: Vec<f64> = group
                .series()
                .iter()
                .flat_map(|s| s.times().iter().copied())
                .collect();
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        };
        let first = aligned_times[0];
        (first, aligned_times[aligned_times.len() - 1] - first)
    };

    let mut point = alloc::vec![0.0; channels];
    let mut outer: Option<SignatureStream> = None;
    walk_pes(group, opts.inner_level, |_, t, mean| {
        let offset = opts.time_augment_outer as usize;
        if offset == 1 {
            point[0] = (t - t_first) / t_span;
        }
        let chans = &mut point[offset..];
        chans.copy_from_slice(&mean[1..]);
        if opts.factorial_scaling {
            for (c, w) in chans.iter_mut().zip(&weights) {
                *c *= w;
            }
        }
        match outer.as_mut() {
            Some(s) => s.push(&point),
            None => outer = Some(SignatureStream::new(&point, opts.outer_level)),
        }
    })?;
    let sig = outer.expect("PES has at least one step").into_signature();
    Ok(FeatureVector {
        coefficients: sig.into_vec(),
        inner_level: opts.inner_level,
        outer_level: opts.outer_level,
        raw_dim: dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::pathwise_signature;
    use crate::streams::TimeSeries;
    use alloc::vec;
    use proptest::prelude::*;

    fn series(values: &[f64], dim: usize) -> TimeSeries {
        TimeSeries::from_values(values.to_vec(), dim).unwrap()
    }

    fn group(members: Vec<TimeSeries>) -> EmpiricalMeasure {
        EmpiricalMeasure::new(members).unwrap()
    }

    #[test]
    fn expected_signature_examples() {
        let x = series(&[0.0, 0.3, -1.0, 2.0], 2);
        let g = group(vec![x.clone()]);
        assert_eq!(expected_signature(&g, 3).unwrap(), signature(&x, 3).unwrap());

        let g = group(vec![series(&[0.0, 1.0], 1), series(&[0.0, 3.0], 1)]);
        let e = expected_signature(&g, 2).unwrap();
        assert_eq!(e.as_slice(), &[1.0, 2.0, 2.5]);

        let g = group(vec![x.clone(), x.clone(), x.clone()]);
        let e = expected_signature(&g, 3).unwrap();
        let s = signature(&x, 3).unwrap();
        assert!(e.as_slice().iter().zip(s.as_slice()).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn pes_examples() {
        let x = series(&[0.0, 0.0, 1.0, 0.5, 0.2, 2.0], 2);
        let p = pathwise_expected_signature(&group(vec![x.clone()]), 3).unwrap();
        assert_eq!(p.steps, pathwise_signature(&x, 3).unwrap());

        let g = group(vec![series(&[0.0, 1.0, 3.0], 1), series(&[0.0, 3.0, 9.0], 1)]);
        let p = pathwise_expected_signature(&g, 1).unwrap();
        let got: Vec<&[f64]> = p.steps.iter().map(|s| s.as_slice()).collect();
        assert_eq!(got, vec![&[1.0, 0.0][..], &[1.0, 2.0], &[1.0, 6.0]]);
    }

    #[test]
    fn pes_on_unequal_grids_uses_union() {
        let a = TimeSeries::new(vec![0.0, 2.0], vec![0.0, 2.0], 1).unwrap();
        let b = TimeSeries::new(vec![0.0, 1.0, 2.0], vec![0.0, 3.0, 0.0], 1).unwrap();
        let g = group(vec![a, b]);
        let p = pathwise_expected_signature(&g, 2).unwrap();
        assert_eq!(p.times, vec![0.0, 1.0, 2.0]);
        // level 1 at t=1: mean of 1 and 3
        assert_eq!(p.steps[1].level_slice(1), &[2.0]);
        let e = expected_signature(&g, 2).unwrap();
        let last = p.steps.last().unwrap();
        assert!(last.as_slice().iter().zip(e.as_slice()).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn ses_feature_length() {
        let x = series(&[0.0, 0.0, 1.0, 0.5, 0.2, 2.0], 2);
        let f = ses_features(&group(vec![x]), &SesOptions::new(2, 2)).unwrap();
        assert_eq!(f.coefficients.len(), 43);
    }

    #[test]
    fn ses_of_constant_group_is_unit() {
        let g = group(vec![series(&[1.0, 2.0, 1.0, 2.0, 1.0, 2.0], 2), series(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 2)]);
        let f = ses_features(&g, &SesOptions::new(2, 2)).unwrap();
        assert_eq!(f.coefficients[0], 1.0);
        assert!(f.coefficients[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn ses_level_one_is_total_increment() {
        let g = group(vec![series(&[0.5, 1.5, -0.5, 2.25], 1)]);
        let f = ses_features(&g, &SesOptions::new(1, 1)).unwrap();
        assert_eq!(f.coefficients.len(), 2);
        assert!((f.coefficients[1] - 1.75).abs() < 1e-15);
    }

    #[test]
    fn ses_feature_cap() {
        let x = series(&[0.0, 0.0, 0.0, 1.0, 0.5, 0.2, 2.0, 1.0, 1.0], 3);
        let mut opts = SesOptions::new(3, 3);
        opts.max_features = 1000;
        match ses_features(&group(vec![x]), &opts) {
            Err(Error::InvalidArgument(m)) => assert!(m.contains("64000") || m.contains("exceeds")),
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn ses_options_affect_features() {
        let x = series(&[0.0, 0.0, 1.0, 0.5, 0.2, 2.0, -1.0, 0.3], 2);
        let g = group(vec![x]);
        let plain = ses_features(&g, &SesOptions::new(2, 2)).unwrap();
        let mut o = SesOptions::new(2, 2);
        o.factorial_scaling = true;
        let scaled = ses_features(&g, &o).unwrap();
        assert_eq!(plain.coefficients.len(), scaled.coefficients.len());
        // level-1 PES channels are unchanged by 1! scaling, level-2 doubled
        assert_eq!(plain.coefficients[1], scaled.coefficients[1]);
        assert!((2.0 * plain.coefficients[3] - scaled.coefficients[3]).abs() < 1e-14);
        let mut o = SesOptions::new(2, 2);
        o.time_augment_outer = true;
        let timed = ses_features(&g, &o).unwrap();
        assert_eq!(timed.coefficients.len(), term_count(7, 2));
        assert!((timed.coefficients[1] - 1.0).abs() < 1e-15);
    }

    fn group_strategy() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
        (1usize..=2, 2usize..=6, 1usize..=4).prop_flat_map(|(d, len, n)| {
            (Just(d), proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, d * len), n))
        })
    }

    proptest! {
        #[test]
        fn pes_final_step_equals_expected_signature((d, members) in group_strategy()) {
            let g = group(members.iter().map(|v| series(v, d)).collect());
            let p = pathwise_expected_signature(&g, 3).unwrap();
            prop_assert_eq!(p.steps.last().unwrap(), &expected_signature(&g, 3).unwrap());
            prop_assert_eq!(&p.steps[0], &TruncatedTensor::unit(d, 3));
        }

        #[test]
        fn member_permutation_invariance((d, members) in group_strategy(), rot in 0usize..4) {
            let g = group(members.iter().map(|v| series(v, d)).collect());
            let mut perm = members.clone();
            let r = rot % perm.len();
            perm.rotate_left(r);
            perm.reverse();
            let h = group(perm.iter().map(|v| series(v, d)).collect());
            let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
            prop_assert!(close(expected_signature(&g, 3).unwrap().as_slice(), expected_signature(&h, 3).unwrap().as_slice()));
            let (pg, ph) = (pathwise_expected_signature(&g, 2).unwrap(), pathwise_expected_signature(&h, 2).unwrap());
            for (a, b) in pg.steps.iter().zip(&ph.steps) {
                prop_assert!(close(a.as_slice(), b.as_slice()));
            }
            let o = SesOptions::new(2, 2);
            prop_assert!(close(&ses_features(&g, &o).unwrap().coefficients, &ses_features(&h, &o).unwrap().coefficients));
        }

        #[test]
        fn ses_features_are_lipschitz_in_values((d, members) in group_strategy()) {
            let eps = 1e-6;
            let g = group(members.iter().map(|v| series(v, d)).collect());
            let shifted: Vec<Vec<f64>> = members
                .iter()
                .map(|v| v.iter().enumerate().map(|(i, x)| x + eps * (1.0 + (i % 3) as f64)).collect())
                .collect();
            let h = group(shifted.iter().map(|v| series(v, d)).collect());
            let o = SesOptions::new(2, 2);
            let (a, b) = (ses_features(&g, &o).unwrap(), ses_features(&h, &o).unwrap());
            for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
                prop_assert!(((x - y) / eps).abs() < 1e3);
            }
        }
    }
}
