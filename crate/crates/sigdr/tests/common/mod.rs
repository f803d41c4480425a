#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;
use sigdr_core::TimeSeries;

/// Increments of a piecewise-linear path given as row-major points.
pub fn increments(ts: &TimeSeries) -> Vec<Vec<f64>> {
    let pts: Vec<&[f64]> = ts.points().collect();
    pts.windows(2).map(|w| w[1].iter().zip(w[0]).map(|(b, a)| b - a).collect()).collect()
}

/// Exact `<S(x), S(y)>` truncated at `level`, for piecewise-linear paths.
///
/// The level-k signature of a piecewise-linear path is a sum over
/// non-decreasing segment sequences, each run of length `a` weighted by
/// `1/a!`. The inner product is then a sum over pairs of such sequences of
/// products of segment inner products, accumulated by tracking the current
/// segment pair and both run lengths.
pub fn truncated_kernel(x: &TimeSeries, y: &TimeSeries, level: usize) -> f64 {
    let dx = increments(x);
    let dy = increments(y);
    let (n, m) = (dx.len(), dy.len());
    let gram: Vec<f64> = dx
        .iter()
        .flat_map(|a| dy.iter().map(move |b| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>()))
        .collect();
    let l = level;
    // a[((i * m + j) * l + ra) * l + rb] holds run lengths ra + 1, rb + 1
    let idx = |i: usize, j: usize, ra: usize, rb: usize| ((i * m + j) * l + ra) * l + rb;
    let mut cur = vec![0.0; n * m * l * l];
    for i in 0..n {
        for j in 0..m {
            cur[idx(i, j, 0, 0)] = gram[i * m + j];
        }
    }
    let mut total = 1.0 + cur.iter().sum::<f64>();
    for _ in 1..level {
        // t[i][j] = sum over run lengths; u[i][j][rb] = sum over ra; v[i][j][ra] = sum over rb
        let mut t = vec![0.0; n * m];
        let mut u = vec![0.0; n * m * l];
        let mut v = vec![0.0; n * m * l];
        for i in 0..n {
            for j in 0..m {
                for ra in 0..l {
                    for rb in 0..l {
                        let w = cur[idx(i, j, ra, rb)];
                        t[i * m + j] += w;
                        u[(i * m + j) * l + rb] += w;
                        v[(i * m + j) * l + ra] += w;
                    }
                }
            }
        }
        // strict prefix sums: pt[i][j] = sum_{i'<i, j'<j} t, pu[i][j][rb] = sum_{i'<i} u, pv[i][j][ra] = sum_{j'<j} v
        let mut pt = vec![0.0; (n + 1) * (m + 1)];
        for i in 0..n {
            for j in 0..m {
                pt[(i + 1) * (m + 1) + j + 1] =
                    t[i * m + j] + pt[i * (m + 1) + j + 1] + pt[(i + 1) * (m + 1) + j] - pt[i * (m + 1) + j];
            }
        }
        let mut pu = vec![0.0; n * m * l];
        for i in 1..n {
            for j in 0..m {
                for rb in 0..l {
                    pu[(i * m + j) * l + rb] = pu[((i - 1) * m + j) * l + rb] + u[((i - 1) * m + j) * l + rb];
                }
            }
        }
        let mut pv = vec![0.0; n * m * l];
        for i in 0..n {
            for j in 1..m {
                for ra in 0..l {
                    pv[(i * m + j) * l + ra] = pv[(i * m + j - 1) * l + ra] + v[(i * m + j - 1) * l + ra];
                }
            }
        }
        let mut next = vec![0.0; n * m * l * l];
        for i in 0..n {
            for j in 0..m {
                let g = gram[i * m + j];
                next[idx(i, j, 0, 0)] = g * pt[i * (m + 1) + j];
                for rb in 1..l {
                    next[idx(i, j, 0, rb)] = g * pu[(i * m + j) * l + rb - 1] / (rb + 1) as f64;
                }
                for ra in 1..l {
                    next[idx(i, j, ra, 0)] = g * pv[(i * m + j) * l + ra - 1] / (ra + 1) as f64;
                    for rb in 1..l {
                        next[idx(i, j, ra, rb)] =
                            g * cur[idx(i, j, ra - 1, rb - 1)] / ((ra + 1) * (rb + 1)) as f64;
                    }
                }
            }
        }
        total += next.iter().sum::<f64>();
        cur = next;
    }
    total
}

/// Random path with `len` points in `dim` dimensions and total variation `tv`.
pub fn path_with_variation<R: Rng>(rng: &mut R, len: usize, dim: usize, tv: f64) -> TimeSeries {
    let steps: Vec<Vec<f64>> = (1..len)
        .map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let raw: f64 = steps.iter().map(|s| s.iter().map(|v| v * v).sum::<f64>().sqrt()).sum();
    let mut values = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    for s in &steps {
        for (c, v) in x.iter_mut().zip(s) {
            *c += v * tv / raw;
        }
        values.extend_from_slice(&x);
    }
    TimeSeries::from_values(values, dim).unwrap()
}

/// Path with i.i.d. standard normal increments scaled by `step`.
pub fn random_walk<R: Rng>(rng: &mut R, len: usize, dim: usize, step: f64) -> TimeSeries {
    let mut values = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    for _ in 1..len {
        for c in x.iter_mut() {
            *c += step * rng.sample::<f64, _>(StandardNormal);
        }
        values.extend_from_slice(&x);
    }
    TimeSeries::from_values(values, dim).unwrap()
}
