//! Estimates of `P(|L_t| > R)` used to size and audit the space grid.

use statrs::function::erf::erfc;

use crate::error::Result;
use crate::models::{pochhammer, LevyModel, ModelKind, RadialDensity, SubordinatorFamily};

/// Upper estimate of `P(|L_t| > R)` for a one-dimensional model.
///
/// Light tails use the Chernoff bound `2 inf_θ exp(−θR + tΦ(θ))` with the
/// log-moment generating function `Φ(θ) = −ψ(−iθ)`. Polynomial tails use the
/// large-deviation form `t ν(|y| > R)`, which is asymptotically exact.
pub fn tail_mass_bound(model: &LevyModel, t: f64, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Ok(1.0);
    }
    let gaussian = |t: f64| erfc(r / (2.0 * t.sqrt()));
    let stable = |alpha: f64| -> f64 {
        let c = match LevyModel::isotropic_stable(alpha, 1).ok().and_then(|m| m.radial_density()) {
            Some(RadialDensity::Stable { c, .. }) => c,
            _ => 1.0,
        };
        (t * 2.0 * c / alpha * r.powf(-alpha)).min(1.0)
    };
    let v = match *model.kind() {
        ModelKind::BrownianMotion => gaussian(t),
        ModelKind::IsotropicStable { alpha } if alpha == 2.0 => gaussian(t),
        ModelKind::IsotropicStable { alpha } => stable(alpha),
        ModelKind::RelativisticStable { alpha, m } => chernoff(r, t, m, |th| {
            m.powf(alpha) - (m * m - th * th).powf(0.5 * alpha)
        }),
        ModelKind::TemperedStable { alpha, m } => chernoff(r, t, m, |th| {
            0.5 * ((m + th).powf(alpha) + (m - th).powf(alpha)) - m.powf(alpha)
        }),
        ModelKind::LampertiStable { alpha, m } => lamperti(r, t, 0.5 * alpha, m),
        ModelKind::TruncatedStable { alpha } => truncated(r, t, alpha)?,
        ModelKind::LayeredStable { lambda_tail, .. } if r >= 1.0 => {
            (t * 2.0 / lambda_tail * r.powf(-lambda_tail)).min(1.0)
        }
        ModelKind::LayeredStable { .. } => 1.0,
        ModelKind::SubordinatedBM(sub) => {
            let rho = sub.rho();
            match sub.family() {
                _ if rho == 1.0 => gaussian(t),
                SubordinatorFamily::Stable => stable(2.0 * rho),
                SubordinatorFamily::TemperedStable { m } => chernoff(r, t, m, |th| {
                    m.powf(2.0 * rho) - (m * m - th * th).powf(rho)
                }),
                SubordinatorFamily::Lamperti { m } => lamperti(r, t, rho, m),
            }
        }
    };
    Ok(v)
}

fn lamperti(r: f64, t: f64, rho: f64, m: f64) -> f64 {
    let pm = pochhammer(m, rho);
    chernoff(r, t, m.sqrt(), |th| pm - pochhammer(m - th * th, rho))
}

fn truncated(r: f64, t: f64, alpha: f64) -> Result<f64> {
    // Φ(θ) = 2∫₀¹ (cosh θu − 1) u^{−1−α} du = 2 Σ_{k≥1} θ^{2k} / ((2k)! (2k − α))
    let phi = |th: f64| -> f64 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..400 {
            let kk = (2 * k) as f64;
            term *= th * th / ((kk - 1.0) * kk);
            let add = term / (kk - alpha);
            sum += add;
            if add < 1e-17 * sum {
                break;
            }
        }
        2.0 * sum
    };
    let hi = 20.0 + 2.0 * (r / t + 1.0).ln();
    Ok(minimize_chernoff(r, t, hi, phi))
}

/// Chernoff bound with `Φ` finite on `[0, θ_max)`.
fn chernoff<F: Fn(f64) -> f64>(r: f64, t: f64, theta_max: f64, phi: F) -> f64 {
    minimize_chernoff(r, t, theta_max * (1.0 - 1e-9), phi)
}

/// Golden-section search of the convex exponent `−θR + tΦ(θ)` on `[0, hi]`.
fn minimize_chernoff<F: Fn(f64) -> f64>(r: f64, t: f64, hi: f64, phi: F) -> f64 {
    let f = |th: f64| -th * r + t * phi(th);
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..120 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let best = fc.min(fd).min(0.0);
    (2.0 * best.exp()).min(1.0)
}
