//! Characteristic exponents and Bernstein functions.
//!
//! Closed forms are used wherever they exist. The truncated and layered
//! families have no elementary exponent; there `ψ(ξ) = 2∫(1 − cos ξr) Q(r) dr`
//! is evaluated with a contour-rotated tail so the cost per frequency stays
//! bounded as `|ξ|` grows.

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use super::{LevyModel, ModelKind, SubordinatorFamily, SubordinatorSpec};
use crate::error::{ensure, Error, Result};
use crate::quadrature::{integrate, integrate_pieces, Tolerance};

const ROTATION_THRESHOLD: f64 = 20.0;

fn quad_tol() -> Tolerance {
    Tolerance::new(1e-15, 1e-12)
}

/// `∫_0^∞ (1 − cos u) u^{−1−a} du` for `a ∈ (0, 2)`.
pub(crate) fn one_minus_cos_constant(a: f64) -> f64 {
    if (a - 1.0).abs() < 1e-12 {
        std::f64::consts::FRAC_PI_2
    } else {
        gamma(1.0 - a) * (std::f64::consts::FRAC_PI_2 * a).cos() / a
    }
}

/// `∫_X^∞ e^{iu} u^{−s} du` for `X ≥ ROTATION_THRESHOLD`, by rotating the
/// contour onto `u = X + iy`.
fn rotated_oscillatory_tail(x: f64, s: f64) -> Complex64 {
    let tol = quad_tol();
    let re = integrate(
        |y| (-y).exp() * Complex64::new(1.0, y / x).powf(-s).re,
        0.0,
        60.0,
        tol,
    )
    .map(|e| e.value)
    .unwrap_or(f64::NAN);
    let im = integrate(
        |y| (-y).exp() * Complex64::new(1.0, y / x).powf(-s).im,
        0.0,
        60.0,
        tol,
    )
    .map(|e| e.value)
    .unwrap_or(f64::NAN);
    Complex64::i() * Complex64::from_polar(1.0, x) * x.powf(-s) * Complex64::new(re, im)
}

/// `∫_X^∞ (1 − cos u) u^{−1−a} du` for `X ≥ ROTATION_THRESHOLD`.
fn one_minus_cos_tail(x: f64, a: f64) -> f64 {
    x.powf(-a) / a - rotated_oscillatory_tail(x, 1.0 + a).re
}

/// `∫_0^1 (1 − cos ξr) r^{−1−a} dr` for `a ∈ (0, 2)`.
pub(crate) fn truncated_stable_integral(xi: f64, a: f64) -> Result<f64> {
    let xi = xi.abs();
    if xi == 0.0 {
        return Ok(0.0);
    }
    if xi >= ROTATION_THRESHOLD {
        return Ok(xi.powf(a) * (one_minus_cos_constant(a) - one_minus_cos_tail(xi, a)));
    }
    // r = v^k with k = 1/(2 − a) removes the r^{1−a} endpoint behaviour.
    let k = 1.0 / (2.0 - a);
    let f = |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let r = v.powf(k);
        let u = xi * r;
        let one_minus_cos = 2.0 * (0.5 * u).sin().powi(2);
        one_minus_cos * r.powf(-1.0 - a) * k * v.powf(k - 1.0)
    };
    let pieces = ((xi / std::f64::consts::PI).ceil() as usize).max(1);
    let breaks: Vec<f64> = (0..=pieces)
        .map(|i| (i as f64 / pieces as f64).powf(1.0 / k))
        .collect();
    Ok(integrate_pieces(f, &breaks, quad_tol())?.value)
}

/// `∫_1^∞ (1 − cos ξr) r^{−1−λ} dr` for `λ > 0`.
pub(crate) fn pareto_tail_integral(xi: f64, lambda: f64) -> Result<f64> {
    let xi = xi.abs();
    if xi == 0.0 {
        return Ok(0.0);
    }
    let s = 1.0 + lambda;
    // ∫_1^A directly, then the rotated remainder from A = max(1, X/ξ).
    let a = (ROTATION_THRESHOLD / xi).max(1.0);
    let mut head = 0.0;
    if a > 1.0 {
        let periods = ((xi * (a - 1.0) / std::f64::consts::PI).ceil() as usize).max(1);
        let breaks: Vec<f64> = (0..=periods)
            .map(|i| 1.0 + (a - 1.0) * i as f64 / periods as f64)
            .collect();
        head = integrate_pieces(
            |r| 2.0 * (0.5 * xi * r).sin().powi(2) * r.powf(-s),
            &breaks,
            quad_tol(),
        )?
        .value;
    }
    // ∫_A^∞ cos(ξr) r^{-s} dr = ξ^{s−1} Re ∫_{ξA}^∞ e^{iu} u^{-s} du
    let cos_tail = xi.powf(s - 1.0) * rotated_oscillatory_tail(xi * a, s).re;
    Ok(head + a.powf(-lambda) / lambda - cos_tail)
}

/// `(t)_ρ = Γ(t + ρ)/Γ(t)`.
pub(crate) fn pochhammer(t: f64, rho: f64) -> f64 {
    // Γ(t+ρ)/Γ(t) = ratio(t+k) · Π_{j<k} (t+j)/(t+ρ+j), Stirling for t+k ≥ 24.
    let mut shift = 1.0;
    let mut x = t;
    while x < 24.0 {
        shift *= x / (x + rho);
        x += 1.0;
    }
    let y = x + rho;
    let tail = |z: f64| {
        let z2 = z * z;
        (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * z2)) / z2) / z2) / z
    };
    let l = (rho / x).ln_1p();
    let log_ratio = (x - 0.5) * l + rho * l + rho * x.ln() - rho + tail(y) - tail(x);
    shift * log_ratio.exp()
}

/// Evaluates the Bernstein function `f(λ)` of a subordinator.
pub fn bernstein_eval(sub: &SubordinatorSpec, lambda: f64) -> Result<f64> {
    ensure(lambda >= 0.0, "lambda", lambda, "[0, ∞)")?;
    let rho = sub.rho();
    Ok(match sub.family() {
        SubordinatorFamily::Stable => lambda.powf(rho),
        SubordinatorFamily::TemperedStable { m } => {
            let m2 = m * m;
            (lambda + m2).powf(rho) - m2.powf(rho)
        }
        SubordinatorFamily::Lamperti { m } => pochhammer(lambda + m, rho) - pochhammer(m, rho),
    })
}

/// Characteristic exponent `ψ(ξ)` with `E e^{iξ·L_t} = e^{−tψ(ξ)}`.
pub fn char_exponent(model: &LevyModel, xi: &[f64]) -> Result<Complex64> {
    if xi.len() != model.dim() {
        return Err(Error::Shape(format!(
            "frequency has length {}, model dimension is {}",
            xi.len(),
            model.dim()
        )));
    }
    let norm2: f64 = xi.iter().map(|x| x * x).sum();
    radial_exponent(model, norm2.sqrt()).map(Complex64::from)
}

/// `ψ` as a function of `|ξ|`; every catalog family is radial.
pub fn radial_exponent(model: &LevyModel, r: f64) -> Result<f64> {
    let r = r.abs();
    Ok(match *model.kind() {
        ModelKind::IsotropicStable { alpha } => r.powf(alpha),
        ModelKind::BrownianMotion => r * r,
        ModelKind::RelativisticStable { alpha, m } => {
            (r * r + m * m).powf(0.5 * alpha) - m.powf(alpha)
        }
        ModelKind::TemperedStable { alpha, m } => {
            let amp = (r * r + m * m).powf(0.5 * alpha);
            m.powf(alpha) - amp * (alpha * (r / m).atan()).cos()
        }
        ModelKind::LampertiStable { alpha, m } => {
            pochhammer(r * r + m, 0.5 * alpha) - pochhammer(m, 0.5 * alpha)
        }
        ModelKind::TruncatedStable { alpha } => 2.0 * truncated_stable_integral(r, alpha)?,
        ModelKind::LayeredStable { alpha, lambda_tail } => {
            2.0 * (truncated_stable_integral(r, alpha)? + pareto_tail_integral(r, lambda_tail)?)
        }
        ModelKind::SubordinatedBM(ref sub) => bernstein_eval(sub, r * r)?,
    })
}
