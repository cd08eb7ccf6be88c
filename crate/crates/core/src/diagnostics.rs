//! Small statistical helpers shared by samplers, the rate harness and tests:
//! deterministic summation, sample moments, empirical characteristic
//! functions and Kolmogorov–Smirnov statistics.

use num_complex::Complex64;

/// Pairwise (tree) summation with a fixed topology; the result depends only on
/// the order of `xs`, never on how work was scheduled.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        return xs.iter().fold(0.0, |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Binary-tree summation splitting at `len / 2` down to single elements. For
/// power-of-two lengths, summing blocks first and then the block sums gives
/// the same bits as summing everything at once.
pub fn tree_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => tree_sum(&xs[..n / 2]) + tree_sum(&xs[n / 2..]),
    }
}

/// Sample mean and standard error of the mean.
///
/// Deviations from the first sample are summed, so a constant sample has an
/// exactly representable mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let shift = xs[0];
    let dev: Vec<f64> = xs.iter().map(|x| x - shift).collect();
    let mean_dev = pairwise_sum(&dev) / n;
    let mean = shift + mean_dev;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let sq: Vec<f64> = dev.iter().map(|d| (d - mean_dev) * (d - mean_dev)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ma, _) = mean_stderr(a);
    let (mb, _) = mean_stderr(b);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Empirical characteristic function `M⁻¹ Σ exp(iξX_k)`.
pub fn empirical_cf(samples: &[f64], xi: f64) -> Complex64 {
    let re: Vec<f64> = samples.iter().map(|x| (xi * x).cos()).collect();
    let im: Vec<f64> = samples.iter().map(|x| (xi * x).sin()).collect();
    let n = samples.len() as f64;
    Complex64::new(pairwise_sum(&re) / n, pairwise_sum(&im) / n)
}

/// Asymptotic Kolmogorov tail probability `P(K > λ)`.
/// Mean of `cos(ξX)` with its standard error; for symmetric laws this is the
/// real characteristic function and its Monte Carlo uncertainty.
pub fn cos_moment(samples: &[f64], xi: f64) -> (f64, f64) {
    let c: Vec<f64> = samples.iter().map(|x| (xi * x).cos()).collect();
    mean_stderr(&c)
}

pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let sq = ne.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    KsResult {
        statistic: d,
        p_value: ks_p(d, n),
    }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    KsResult {
        statistic: d,
        p_value: ks_p(d, ne),
    }
}
