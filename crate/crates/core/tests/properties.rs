use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sigdr_core::measures::{expected_signature, pathwise_expected_signature, ses_features, SesOptions};
use sigdr_core::regress::baseline::baseline_rbf_gram;
use sigdr_core::regress::cv::{grid_search_cv, HyperParams};
use sigdr_core::regress::krr::{krr_fit_raw, krr_predict};
use sigdr_core::regress::lasso::{lasso_fit_with, LassoSettings};
use sigdr_core::signature::signature;
use sigdr_core::sigkernel::pde_solve;
use sigdr_core::{term_count, EmpiricalMeasure, TimeSeries, TruncatedTensor};

fn tensor(dim: usize, level: usize) -> impl Strategy<Value = TruncatedTensor> {
    prop::collection::vec(-1.0..1.0f64, term_count(dim, level))
        .prop_map(move |v| TruncatedTensor::from_vec(dim, level, v).unwrap())
}

fn dim_level() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=3, 1usize..=4)
}

/// Series with `dim` channels and 2..=max_len points on the grid 0, 1, 2, ...
fn series(dim: usize, max_len: usize) -> impl Strategy<Value = TimeSeries> {
    (2..=max_len).prop_flat_map(move |len| {
        prop::collection::vec(-1.0..1.0f64, len * dim).prop_map(move |v| TimeSeries::from_values(v, dim).unwrap())
    })
}

fn group(dim: usize, members: usize, len: usize) -> impl Strategy<Value = EmpiricalMeasure> {
    prop::collection::vec(prop::collection::vec(-1.0..1.0f64, len * dim), 1..=members).prop_map(move |m| {
        EmpiricalMeasure::new(m.into_iter().map(|v| TimeSeries::from_values(v, dim).unwrap()).collect()).unwrap()
    })
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mul_is_associative(((a, b), c) in dim_level().prop_flat_map(|(d, n)| ((tensor(d, n), tensor(d, n)), tensor(d, n)))) {
        let left = a.mul(&b).unwrap().mul(&c).unwrap();
        let right = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(close(left.as_slice(), right.as_slice(), 1e-12));
    }

    #[test]
    fn unit_is_identity(a in dim_level().prop_flat_map(|(d, n)| tensor(d, n))) {
        let e = TruncatedTensor::unit(a.dim(), a.level());
        prop_assert_eq!(&e.mul(&a).unwrap(), &a);
        prop_assert_eq!(&a.mul(&e).unwrap(), &a);
    }

    #[test]
    fn exp_is_homomorphic_in_one_dimension(a in -2.0..2.0f64, b in -2.0..2.0f64, n in 1usize..=8) {
        let lhs = TruncatedTensor::exp(&[a], n).unwrap().mul(&TruncatedTensor::exp(&[b], n).unwrap()).unwrap();
        let rhs = TruncatedTensor::exp(&[a + b], n).unwrap();
        prop_assert!(close(lhs.as_slice(), rhs.as_slice(), 1e-12));
    }

    #[test]
    fn inner_is_symmetric_bilinear_positive(
        ((a, b), c) in dim_level().prop_flat_map(|(d, n)| ((tensor(d, n), tensor(d, n)), tensor(d, n))),
        s in -3.0..3.0f64,
    ) {
        prop_assert_eq!(a.inner(&b).unwrap(), b.inner(&a).unwrap());
        let mut sa_c = a.clone();
        sa_c.scale(s);
        sa_c.axpy(1.0, &c).unwrap();
        let lhs = sa_c.inner(&b).unwrap();
        let rhs = s * a.inner(&b).unwrap() + c.inner(&b).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
        if a.as_slice().iter().any(|&v| v != 0.0) {
            prop_assert!(a.inner(&a).unwrap() > 0.0);
        }
    }

    #[test]
    fn signature_level_zero_and_size(ts in (1usize..=3).prop_flat_map(|d| series(d, 10)), n in 1usize..=4) {
        let s = signature(&ts, n).unwrap();
        prop_assert_eq!(s.as_slice()[0], 1.0);
        let d = ts.dim();
        let want = if d == 1 { n + 1 } else { (d.pow(n as u32 + 1) - 1) / (d - 1) };
        prop_assert_eq!(s.as_slice().len(), want);
    }

    #[test]
    fn subsample_properties(ts in series(2, 40), rate in 0.0..0.9f64, seed in any::<u64>()) {
        prop_assume!(ts.len() as f64 * (1.0 - rate) >= 2.0);
        let a = ts.subsample(rate, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = ts.subsample(rate, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.point(0), ts.point(0));
        prop_assert_eq!(a.point(a.len() - 1), ts.point(ts.len() - 1));
        let aug = a.time_augment();
        let t: Vec<f64> = aug.points().map(|p| p[0]).collect();
        prop_assert!(t.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(a.times().iter().all(|t| ts.times().contains(t)));
    }

    #[test]
    fn zero_drop_rate_is_identity(ts in series(2, 30), seed in any::<u64>()) {
        prop_assert_eq!(ts.subsample(0.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap(), ts);
    }

    #[test]
    fn lead_lag_shape(ts in (1usize..=3).prop_flat_map(|d| series(d, 20))) {
        let ll = ts.lead_lag();
        prop_assert_eq!(ll.dim(), 2 * ts.dim());
        prop_assert_eq!(ll.len(), 2 * ts.len() - 1);
        let first: Vec<f64> = ts.point(0).iter().flat_map(|&v| [v, v]).collect();
        prop_assert_eq!(ll.point(0), first.as_slice());
        let qv: f64 = ts.points().zip(ts.points().skip(1)).map(|(a, b)| (b[0] - a[0]).powi(2)).sum();
        let s = signature(&ll, 2).unwrap();
        prop_assert!(((s.coeff(&[0, 1]) - s.coeff(&[1, 0])).abs() - qv).abs() < 1e-10);
    }

    #[test]
    fn chen_at_every_split(ts in (1usize..=3).prop_flat_map(|d| series(d, 12)), n in 1usize..=4) {
        let d = ts.dim();
        let whole = signature(&ts, n).unwrap();
        for j in 1..ts.len() - 1 {
            let prefix = TimeSeries::from_values(ts.values()[..(j + 1) * d].to_vec(), d).unwrap();
            let base = ts.point(j).to_vec();
            let suffix: Vec<f64> = ts.values()[j * d..].chunks(d).flat_map(|p| p.iter().zip(&base).map(|(v, b)| v - b)).collect();
            let suffix = TimeSeries::from_values(suffix, d).unwrap();
            let joined = signature(&prefix, n).unwrap().mul(&signature(&suffix, n).unwrap()).unwrap();
            prop_assert!(close(whole.as_slice(), joined.as_slice(), 1e-12));
        }
    }

    #[test]
    fn signature_ignores_timestamps(ts in series(2, 15), gaps in prop::collection::vec(0.001..5.0f64, 15), n in 1usize..=4) {
        let mut t = -3.0;
        let times: Vec<f64> = gaps[..ts.len()].iter().map(|g| { t += g; t }).collect();
        let moved = ts.with_times(times).unwrap();
        prop_assert_eq!(signature(&ts, n).unwrap(), signature(&moved, n).unwrap());
    }

    #[test]
    fn linear_path_is_exp(a in prop::collection::vec(-2.0..2.0f64, 3), b in prop::collection::vec(-2.0..2.0f64, 3), n in 1usize..=5) {
        let mut v = a.clone();
        v.extend_from_slice(&b);
        let ts = TimeSeries::from_values(v, 3).unwrap();
        let inc: Vec<f64> = b.iter().zip(&a).map(|(y, x)| y - x).collect();
        let e = TruncatedTensor::exp(&inc, n).unwrap();
        prop_assert!(close(signature(&ts, n).unwrap().as_slice(), e.as_slice(), 1e-12));
    }

    #[test]
    fn factorial_decay(ts in (1usize..=3).prop_flat_map(|d| series(d, 15)), n in 1usize..=6) {
        let tv: f64 = ts
            .points()
            .zip(ts.points().skip(1))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (y - x).powi(2)).sum::<f64>().sqrt())
            .sum();
        let s = signature(&ts, n).unwrap();
        let mut bound = 1.0;
        for k in 1..=n {
            bound *= tv / k as f64;
            let max = s.level_slice(k).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(max <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn pes_ends_at_expected_signature(g in group(2, 5, 6), n in 1usize..=3) {
        let pes = pathwise_expected_signature(&g, n).unwrap();
        prop_assert_eq!(pes.steps.last().unwrap(), &expected_signature(&g, n).unwrap());
        prop_assert_eq!(pes.steps[0].clone(), TruncatedTensor::unit(2, n));
    }

    #[test]
    fn member_order_does_not_matter(g in group(2, 5, 6), shift in 0usize..5) {
        let mut members = g.series().to_vec();
        let k = shift % members.len();
        members.rotate_left(k);
        members.reverse();
        let p = EmpiricalMeasure::new(members).unwrap();
        let es = (expected_signature(&g, 3).unwrap(), expected_signature(&p, 3).unwrap());
        prop_assert!(close(es.0.as_slice(), es.1.as_slice(), 1e-12));
        let pes = (pathwise_expected_signature(&g, 2).unwrap(), pathwise_expected_signature(&p, 2).unwrap());
        for (a, b) in pes.0.steps.iter().zip(&pes.1.steps) {
            prop_assert!(close(a.as_slice(), b.as_slice(), 1e-12));
        }
        let opts = SesOptions::new(2, 2);
        let f = (ses_features(&g, &opts).unwrap(), ses_features(&p, &opts).unwrap());
        prop_assert!(close(&f.0.coefficients, &f.1.coefficients, 1e-12));
    }

    #[test]
    fn ses_features_are_continuous(g in group(2, 4, 6)) {
        let eps = 1e-6;
        let opts = SesOptions::new(2, 2);
        let base = ses_features(&g, &opts).unwrap();
        let moved = g
            .try_map(|s| TimeSeries::from_values(s.values().iter().map(|v| v + eps).collect(), s.dim()))
            .unwrap();
        let moved = ses_features(&moved, &opts).unwrap();
        prop_assert_eq!(base.coefficients.len(), term_count(opts.channels(2), 2));
        for (a, b) in base.coefficients.iter().zip(&moved.coefficients) {
            prop_assert!((a - b).abs() <= 1e3 * eps);
        }
    }

    #[test]
    fn pde_ignores_timestamps(x in series(2, 8), y in series(2, 8), r in 0u32..=2) {
        let shifted: Vec<f64> = x.times().iter().map(|t| 2.5 * t + 7.0).collect();
        let a = pde_solve(&x, &y, r).unwrap();
        let b = pde_solve(&x.with_times(shifted).unwrap(), &y, r).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn krr_is_permutation_equivariant(
        pts in prop::collection::vec(-1.0..1.0f64, 12),
        y in prop::collection::vec(-1.0..1.0f64, 6),
        rot in 1usize..6,
    ) {
        let k = |a: usize, b: usize| (-((pts[2 * a] - pts[2 * b]).powi(2) + (pts[2 * a + 1] - pts[2 * b + 1]).powi(2))).exp();
        let m = 5;
        let perm: Vec<usize> = (0..m).map(|i| (i + rot) % m).collect();
        let gram = |order: &[usize]| -> Vec<f64> { order.iter().flat_map(|&i| order.iter().map(move |&j| k(i, j))).collect() };
        let ident: Vec<usize> = (0..m).collect();
        let f1 = krr_fit_raw(&gram(&ident), m, &y[..m], 0.1).unwrap();
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let f2 = krr_fit_raw(&gram(&perm), m, &yp, 0.1).unwrap();
        let p1 = krr_predict(&f1, &ident.iter().map(|&i| k(i, 5)).collect::<Vec<_>>()).unwrap();
        let p2 = krr_predict(&f2, &perm.iter().map(|&i| k(i, 5)).collect::<Vec<_>>()).unwrap();
        prop_assert!((p1 - p2).abs() < 1e-10);
    }

    #[test]
    fn lasso_objective_never_increases(x in prop::collection::vec(-1.0..1.0f64, 40), y in prop::collection::vec(-1.0..1.0f64, 10), alpha in 0.001..0.5f64) {
        let mut trace = Vec::new();
        lasso_fit_with(&x, &y, alpha, &LassoSettings::default(), None, Some(&mut trace)).unwrap();
        prop_assert!(!trace.is_empty());
        prop_assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn grid_search_is_reproducible(y in prop::collection::vec(-1.0..1.0f64, 12), seed in any::<u64>()) {
        let grid: Vec<HyperParams> = [0.01, 0.1, 1.0].iter().map(|&a| HyperParams::kes(1.0, a)).collect();
        let predict = |p: &HyperParams, tr: &[usize], te: &[usize]| {
            let mean = tr.iter().map(|&i| y[i]).sum::<f64>() / tr.len() as f64;
            Ok(te.iter().map(|_| mean / (1.0 + p.alpha)).collect())
        };
        let a = grid_search_cv(&y, &grid, 3, seed, predict).unwrap();
        let b = grid_search_cv(&y, &grid, 3, seed, predict).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn baseline_gram_symmetric_unit_diagonal(gs in prop::collection::vec(group(2, 3, 5), 2..5), l1 in 0.1..10.0f64, l2 in 0.1..10.0f64) {
        let g = baseline_rbf_gram(&gs, l1, l2).unwrap();
        prop_assert_eq!(g.max_asymmetry(), 0.0);
        for i in 0..g.size() {
            prop_assert_eq!(g.get(i, i), 1.0);
        }
    }
}

#[test]
fn lead_lag_example_quadratic_variation() {
    let x = TimeSeries::from_values(vec![1.0, 5.0, 3.0], 1).unwrap();
    let s = signature(&x.lead_lag(), 2).unwrap();
    assert!(((s.coeff(&[0, 1]) - s.coeff(&[1, 0])).abs() - 20.0).abs() < 1e-10);
}
