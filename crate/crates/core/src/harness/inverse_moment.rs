use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::diagnostics::mean_stderr;
use crate::error::{ensure, Error, Result};
use crate::models::SubordinatorSpec;
use crate::rng::RngStream;
use crate::samplers::sample_subordinator;

/// `E|B_1^{(k)}|^{−1} = Γ((k−1)/2) / (√2 Γ(k/2))` for a standard Gaussian in
/// `ℝ^k`, `k ≥ 2`.
pub fn inverse_chi_moment(k: usize) -> f64 {
    let k = k as f64;
    gamma(0.5 * (k - 1.0)) / (std::f64::consts::SQRT_2 * gamma(0.5 * k))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseMomentRow {
    pub t: f64,
    /// Monte Carlo `E[S_t^{−1/2}]`.
    pub subordinator_moment: f64,
    pub subordinator_stderr: f64,
    /// `E[S_t^{−1/2}] · E|B_1^{(d+2)}|^{−1}`.
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseMomentReport {
    pub rho: f64,
    pub dim: usize,
    pub rows: Vec<InverseMomentRow>,
    /// Monte Carlo `E|B_1^{(d+2)}|^{−1}` and its standard error.
    pub chi_moment: f64,
    pub chi_stderr: f64,
    pub chi_exact: f64,
    /// Slope of `log estimate` against `log t`; infinite estimates give NaN.
    pub slope: f64,
    /// `−1/(2ρ)`
    pub predicted_slope: f64,
    /// Set when some draw had `S_t = 0`, so the inverse moment is infinite.
    pub divergent: bool,
}

/// Monte Carlo check of `E|L_t^{(d+2)}|^{−1} = E[S_t^{−1/2}] E|B_1^{(d+2)}|^{−1}
/// ≍ t^{−1/(2ρ)}` for Brownian motion subordinated by `sub`.
pub fn inverse_moment_scaling(
    sub: &SubordinatorSpec,
    d: usize,
    t_list: &[f64],
    paths: usize,
    seed: u64,
) -> Result<InverseMomentReport> {
    ensure(d >= 1, "d", d as f64, "≥ 1")?;
    ensure(paths >= 2, "M", paths as f64, "≥ 2")?;
    if t_list.len() < 2 {
        return Err(Error::Shape("t_list needs at least 2 horizons".into()));
    }
    for &t in t_list {
        ensure(t > 0.0 && t <= 1.0, "t", t, "(0, 1]")?;
    }
    let k = d + 2;
    let chi_exact = inverse_chi_moment(k);
    let mut rng = RngStream::new(seed, t_list.len() as u64);
    let inv_norm: Vec<f64> = (0..paths)
        .map(|_| {
            let s: f64 = (0..k)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * z
                })
                .sum();
            1.0 / s.sqrt()
        })
        .collect();
    let (chi_moment, chi_stderr) = mean_stderr(&inv_norm);

    let per_t: Vec<(f64, f64, bool)> = t_list
        .par_iter()
        .enumerate()
        .map(|(i, &t)| -> Result<(f64, f64, bool)> {
            if sub.is_deterministic() {
                return Ok((t.powf(-0.5), 0.0, false));
            }
            let mut rng = RngStream::new(seed, i as u64);
            let mut v = Vec::with_capacity(paths);
            for _ in 0..paths {
                let s = sample_subordinator(sub, t, &mut rng)?;
                if s <= 0.0 {
                    return Ok((f64::INFINITY, f64::INFINITY, true));
                }
                v.push(1.0 / s.sqrt());
            }
            let (m, se) = mean_stderr(&v);
            Ok((m, se, false))
        })
        .collect::<Result<_>>()?;

    let divergent = per_t.iter().any(|r| r.2);
    let rows: Vec<InverseMomentRow> = t_list
        .iter()
        .zip(&per_t)
        .map(|(&t, &(m, se, _))| InverseMomentRow {
            t,
            subordinator_moment: m,
            subordinator_stderr: se,
            estimate: m * chi_moment,
            // first-order propagation for a product of independent estimates
            stderr: ((se * chi_moment).powi(2) + (m * chi_stderr).powi(2)).sqrt(),
        })
        .collect();
    let slope = if divergent {
        f64::NAN
    } else {
        let x: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.estimate.ln()).collect();
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        sxy / sxx
    };
    Ok(InverseMomentReport {
        rho: sub.rho(),
        dim: d,
        rows,
        chi_moment,
        chi_stderr,
        chi_exact,
        slope,
        predicted_slope: -0.5 / sub.rho(),
        divergent,
    })
}
