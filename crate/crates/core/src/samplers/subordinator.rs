//! One-dimensional variates: symmetric stable, stable and tempered-stable
//! subordinators, the Lamperti subordinator, and Gaussian subordination.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson, StandardNormal};
use statrs::function::gamma::gamma;

use crate::error::{ensure, Error, Result};
use crate::models::{SubordinatorFamily, SubordinatorSpec};
use crate::rng::RngStream;

/// Symmetric α-stable variates with `E e^{iξX} = exp(−scale^α |ξ|^α)`.
///
/// Chambers–Mallows–Stuck transform; `α = 2` is returned as `N(0, 2·scale²)`.
pub fn sample_stable(alpha: f64, scale: f64, count: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    ensure(alpha > 0.0 && alpha <= 2.0, "alpha", alpha, "(0, 2]")?;
    ensure(scale > 0.0 && scale.is_finite(), "scale", scale, "(0, ∞)")?;
    ensure(count >= 1, "count", count as f64, "≥ 1")?;
    Ok((0..count).map(|_| scale * standard_stable(alpha, rng)).collect())
}

pub(crate) fn standard_stable(alpha: f64, rng: &mut RngStream) -> f64 {
    if alpha == 2.0 {
        let z: f64 = StandardNormal.sample(rng);
        return std::f64::consts::SQRT_2 * z;
    }
    let v = PI * (rng.open01() - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w = rng.exp1();
    (alpha * v).sin() / v.cos().powf(1.0 / alpha)
        * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Stable subordinator `S_t` with `E e^{−λS_t} = exp(−t λ^ρ)`.
///
/// Kanter's representation of `S_1`, then `S_t = t^{1/ρ} S_1`. `ρ = 1` is the
/// deterministic clock `S_t = t`.
pub fn sample_stable_subordinator(rho: f64, t: f64, rng: &mut RngStream) -> Result<f64> {
    ensure(rho > 0.0 && rho <= 1.0, "rho", rho, "(0, 1]")?;
    ensure(t > 0.0 && t.is_finite(), "t", t, "(0, ∞)")?;
    Ok(stable_subordinator(rho, t, rng))
}

fn stable_subordinator(rho: f64, t: f64, rng: &mut RngStream) -> f64 {
    if rho == 1.0 {
        return t;
    }
    let u = PI * rng.open01();
    let w = rng.exp1();
    let s1 = (rho * u).sin() / u.sin().powf(1.0 / rho)
        * (((1.0 - rho) * u).sin() / w).powf((1.0 - rho) / rho);
    t.powf(1.0 / rho) * s1
}

/// Work counters of the tilting rejection loop.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TiltStats {
    /// Number of sub-intervals the horizon was split into.
    pub pieces: u64,
    /// Total stable proposals drawn.
    pub proposals: u64,
}

/// Tempered stable subordinator with
/// `E e^{−λS_t} = exp(−t((λ + m²)^ρ − m^{2ρ}))`.
///
/// Stable proposals accepted with probability `e^{−m²S}`; the horizon is split
/// into `⌈t m^{2ρ} / 0.7⌉` pieces so each piece accepts with probability at
/// least `e^{−0.7}`.
pub fn sample_tempered_subordinator(rho: f64, m: f64, t: f64, rng: &mut RngStream) -> Result<f64> {
    Ok(sample_tempered_subordinator_counted(rho, m, t, rng)?.0)
}

/// [`sample_tempered_subordinator`] together with its rejection counters.
pub fn sample_tempered_subordinator_counted(
    rho: f64,
    m: f64,
    t: f64,
    rng: &mut RngStream,
) -> Result<(f64, TiltStats)> {
    ensure(rho > 0.0 && rho <= 1.0, "rho", rho, "(0, 1]")?;
    ensure(m >= 0.0 && m.is_finite(), "m", m, "[0, ∞)")?;
    ensure(t > 0.0 && t.is_finite(), "t", t, "(0, ∞)")?;
    Ok(tilted_stable(rho, m * m, t, rng))
}

/// Stable subordinator exponentially tilted by `e^{−θS}`.
pub(crate) fn tilted_stable(rho: f64, theta: f64, t: f64, rng: &mut RngStream) -> (f64, TiltStats) {
    if rho == 1.0 {
        return (t, TiltStats { pieces: 1, proposals: 1 });
    }
    let pieces = ((t * theta.powf(rho) / 0.7).ceil() as u64).max(1);
    let tau = t / pieces as f64;
    let mut stats = TiltStats { pieces, proposals: 0 };
    let mut total = 0.0;
    for _ in 0..pieces {
        loop {
            stats.proposals += 1;
            let s = stable_subordinator(rho, tau, rng);
            if theta == 0.0 || rng.open01() <= (-theta * s).exp() {
                total += s;
                break;
            }
        }
    }
    (total, stats)
}

/// Lamperti subordinator with `f(λ) = (λ+m)_ρ − (m)_ρ`, where
/// `(x)_ρ = Γ(x+ρ)/Γ(x)`.
///
/// The Lévy density `K e^{−(m+ρ)r}(1 − e^{−r})^{−1−ρ}` splits into the tempered
/// stable density `K r^{−1−ρ} e^{−(m+ρ)r}` plus a finite remainder of mass
/// `(m+ρ)^ρ − (m)_ρ`; the remainder is sampled as compound Poisson by rejection
/// from a Gamma/exponential mixture.
pub fn sample_lamperti_subordinator(rho: f64, m: f64, t: f64, rng: &mut RngStream) -> Result<f64> {
    ensure(rho > 0.0 && rho <= 1.0, "rho", rho, "(0, 1]")?;
    ensure(m > 0.0 && m.is_finite(), "m", m, "(0, ∞)")?;
    ensure(t > 0.0 && t.is_finite(), "t", t, "(0, ∞)")?;
    if rho == 1.0 {
        return Ok(t);
    }
    let c = m + rho;
    let (mut s, _) = tilted_stable(rho, c, t, rng);
    let intensity = t * lamperti_remainder_mass(rho, m);
    if intensity > 0.0 {
        let count = Poisson::new(intensity)
            .map_err(|e| Error::Aborted(format!("poisson({intensity}): {e}")))?
            .sample(rng) as u64;
        for _ in 0..count {
            s += lamperti_remainder_jump(rho, c, rng)?;
        }
    }
    Ok(s)
}

pub(crate) fn lamperti_remainder_mass(rho: f64, m: f64) -> f64 {
    (m + rho).powf(rho) - crate::models::pochhammer(m, rho)
}

#[cfg(test)]
pub(crate) fn lamperti_remainder_density(rho: f64, m: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let k = rho / gamma(1.0 - rho);
    k * (-(m + rho) * r).exp() * r.powf(-1.0 - rho) * excess(rho, r)
}

/// `(r / (1 − e^{−r}))^{1+ρ} − 1`
fn excess(rho: f64, r: f64) -> f64 {
    let q = if r < 1e-3 {
        r * (0.5 + r / 12.0)
    } else {
        r / -(-r).exp_m1() - 1.0
    };
    ((1.0 + rho) * q.ln_1p()).exp_m1()
}

/// One jump from the remainder measure. The envelope
/// `K(1+ρ) e^{−cr}(r^{−ρ} + 1)` dominates it because
/// `r/(1 − e^{−r}) ≤ 1 + r` and `(1+r)^ρ ≤ 1 + r^ρ`.
fn lamperti_remainder_jump(rho: f64, c: f64, rng: &mut RngStream) -> Result<f64> {
    let w_gamma = gamma(1.0 - rho) * c.powf(rho - 1.0);
    let w_exp = 1.0 / c;
    let p_gamma = w_gamma / (w_gamma + w_exp);
    let gam = Gamma::new(1.0 - rho, 1.0 / c).map_err(|e| Error::Aborted(e.to_string()))?;
    let exp = Exp::new(c).map_err(|e| Error::Aborted(e.to_string()))?;
    loop {
        let r: f64 = if rng.random::<f64>() < p_gamma {
            gam.sample(rng)
        } else {
            exp.sample(rng)
        };
        if r <= 0.0 {
            continue;
        }
        let accept = excess(rho, r) / ((1.0 + rho) * r * (1.0 + r.powf(rho)));
        if rng.open01() <= accept {
            return Ok(r);
        }
    }
}

/// Draws the subordinator increment over a horizon `t`.
pub fn sample_subordinator(sub: &SubordinatorSpec, t: f64, rng: &mut RngStream) -> Result<f64> {
    match sub.family() {
        SubordinatorFamily::Stable => sample_stable_subordinator(sub.rho(), t, rng),
        SubordinatorFamily::TemperedStable { m } => sample_tempered_subordinator(sub.rho(), m, t, rng),
        SubordinatorFamily::Lamperti { m } => sample_lamperti_subordinator(sub.rho(), m, t, rng),
    }
}

/// `√S · Z` with `Z` a standard `d`-dimensional Gaussian.
///
/// Under the convention `ψ(ξ) = f(|ξ|²)` the increment over `t` is obtained by
/// passing `2S_t`.
pub fn sample_subordinated_bm(s: f64, d: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    ensure(s >= 0.0 && s.is_finite(), "S", s, "[0, ∞)")?;
    ensure(d >= 1, "d", d as f64, "≥ 1")?;
    let mut out = vec![0.0; d];
    fill_subordinated_bm(s, &mut out, rng);
    Ok(out)
}

pub(crate) fn fill_subordinated_bm(s: f64, out: &mut [f64], rng: &mut RngStream) {
    let root = s.sqrt();
    for x in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *x = root * z;
    }
}
