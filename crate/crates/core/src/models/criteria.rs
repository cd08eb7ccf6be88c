//! Balance condition, predicted strong rate and Lévy-measure moment checks.

use serde::{Deserialize, Serialize};

use super::LevyModel;
use crate::error::{ensure, Error, Result};
use crate::quadrature::{integrate, Tolerance};

/// Outcome of `2α − γ₀(1−β) > 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Balance {
    pub ok: bool,
    /// `2α − γ₀(1−β) − 2`
    pub margin: f64,
}

/// Balance condition between noise and drift regularity.
///
/// `β = 0` is accepted and always fails (the margin is then `2α − γ₀ − 2 ≤ 0`).
pub fn balance_check(alpha: f64, gamma0: f64, beta: f64) -> Result<Balance> {
    ensure(alpha > 1.0 && alpha <= 2.0, "alpha", alpha, "(1, 2]")?;
    ensure((1.0..=2.0).contains(&gamma0), "gamma0", gamma0, "[1, 2]")?;
    ensure((0.0..=1.0).contains(&beta), "beta", beta, "[0, 1]")?;
    let margin = 2.0 * alpha - gamma0 * (1.0 - beta) - 2.0;
    Ok(Balance {
        ok: margin > 0.0,
        margin,
    })
}

/// Exponent `κ = (2 + γ₀(1−β)) / (2α)` of the time singularity `t^{−κ}` met
/// when bounding the Hölder norm of the gradient of the resolvent solution;
/// it is integrable exactly when the balance condition holds.
pub fn singularity_exponent(alpha: f64, gamma0: f64, beta: f64) -> f64 {
    (2.0 + gamma0 * (1.0 - beta)) / (2.0 * alpha)
}

/// `β > 2/α − 1`, the balance condition with `γ₀ ↓ α`.
pub fn example52_admissible(alpha: f64, beta: f64) -> Result<bool> {
    ensure(alpha > 1.0 && alpha <= 2.0, "alpha", alpha, "(1, 2]")?;
    ensure(beta > 0.0 && beta <= 1.0, "beta", beta, "(0, 1]")?;
    Ok(alpha * beta > 2.0 - alpha)
}

/// Predicted exponent of `n` in the bound on `E sup_t |X_t − X_t^{(n)}|^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    pub p: f64,
    pub beta: f64,
    pub eta: f64,
    pub gamma0_eff: f64,
    /// `min{1, pβ/γ₀, pη}`
    pub rate: f64,
    /// Balance verdict; only known when the gradient index is known.
    pub balance_ok: Option<bool>,
    /// Set when `γ₀` is an open infimum: the rate is then a supremum over
    /// admissible `γ₀` and is not attained.
    pub limit: bool,
}

pub fn predicted_rate(p: f64, beta: f64, eta: f64, gamma0: f64) -> Result<RatePrediction> {
    ensure(p > 0.0 && p.is_finite(), "p", p, "(0, ∞)")?;
    ensure(beta > 0.0 && beta <= 1.0, "beta", beta, "(0, 1]")?;
    ensure(eta > 0.0 && eta <= 1.0, "eta", eta, "(0, 1]")?;
    ensure((1.0..=2.0).contains(&gamma0), "gamma0", gamma0, "[1, 2]")?;
    let rate = 1f64.min(p * beta / gamma0).min(p * eta);
    Ok(RatePrediction {
        p,
        beta,
        eta,
        gamma0_eff: gamma0,
        rate,
        balance_ok: None,
        limit: false,
    })
}

/// Rate prediction for a catalog model, using `γ₀_eff` (the infimum when
/// `γ₀` is open) and recording the balance verdict.
pub fn predict_for_model(model: &LevyModel, p: f64, beta: f64, eta: f64) -> Result<RatePrediction> {
    let idx = model.moment_indices();
    let gamma0 = idx.gamma0.value;
    let mut pred = predicted_rate(p, beta, eta, gamma0)?;
    pred.limit = idx.gamma0.open;
    pred.balance_ok = Some(balance_check(model.gradient_index(), gamma0, beta)?.ok);
    Ok(pred)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentRegion {
    /// `r ∈ (0, 1)`
    Inner,
    /// `r ∈ (1, ∞)`
    Outer,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MomentCheck {
    Finite(f64),
    Divergent,
}

impl MomentCheck {
    pub fn is_finite(&self) -> bool {
        matches!(self, MomentCheck::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            MomentCheck::Finite(v) => Some(v),
            MomentCheck::Divergent => None,
        }
    }
}

const SHELL_WINDOW: usize = 8;
const MAX_SHELLS: usize = 400;

/// Moment `∫ r^γ Q(r) dr` over the inner or outer region, via dyadic shells.
///
/// Shells `[2^{−k−1}, 2^{−k}]` (inner) or `[2^k, 2^{k+1}]` (outer) are
/// integrated one by one. If the last eight shell ratios are not all below one
/// the moment is declared divergent; once the ratios settle the remaining
/// shells are summed as a geometric series.
pub fn verify_levy_moment<Q: Fn(f64) -> f64>(
    q: Q,
    gamma: f64,
    region: MomentRegion,
) -> Result<MomentCheck> {
    ensure(gamma > 0.0, "gamma", gamma, "(0, ∞)")?;
    let tol = Tolerance::new(1e-300, 1e-13);
    let mut shells: Vec<f64> = Vec::new();
    let mut total = 0.0;
    for k in 0..MAX_SHELLS {
        let (a, b) = match region {
            MomentRegion::Inner => (0.5f64.powi(k as i32 + 1), 0.5f64.powi(k as i32)),
            MomentRegion::Outer => (2f64.powi(k as i32), 2f64.powi(k as i32 + 1)),
        };
        let bad = std::cell::Cell::new(None);
        let s = integrate(
            |r| {
                let v = q(r);
                if v < 0.0 || v.is_nan() {
                    bad.set(Some(r));
                }
                r.powf(gamma) * v
            },
            a,
            b,
            tol,
        );
        if let Some(r) = bad.get() {
            return Err(Error::InvalidDensity(format!(
                "Q({r}) is negative or undefined"
            )));
        }
        let s = match s {
            Ok(e) => e.value,
            Err(_) if region == MomentRegion::Inner => return Ok(MomentCheck::Divergent),
            Err(e) => return Err(e),
        };
        if !s.is_finite() {
            return Ok(MomentCheck::Divergent);
        }
        shells.push(s);
        total += s;
        if let Some(verdict) = settle(&shells, total) {
            return Ok(verdict);
        }
    }
    Ok(MomentCheck::Divergent)
}

/// Decides convergence from the trailing shells, if possible yet.
fn settle(shells: &[f64], total: f64) -> Option<MomentCheck> {
    let n = shells.len();
    if n <= SHELL_WINDOW {
        return None;
    }
    let window = &shells[n - SHELL_WINDOW - 1..];
    if window.iter().all(|&s| s == 0.0) {
        return Some(MomentCheck::Finite(total));
    }
    let last = shells[n - 1];
    if total > 0.0 && last <= 1e-17 * total && window.iter().all(|&s| s <= 1e-12 * total) {
        return Some(MomentCheck::Finite(total));
    }
    let ratios: Vec<f64> = window
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::INFINITY })
        .collect();
    if ratios.iter().any(|&r| r >= 1.0 - 1e-9) {
        // a divergent moment grows shell over shell; wait for a full window of
        // non-decay after any initial transient
        if ratios.iter().all(|&r| r >= 1.0 - 1e-9) {
            return Some(MomentCheck::Divergent);
        }
        return None;
    }
    let r = ratios[ratios.len() - 1];
    let spread = ratios
        .iter()
        .map(|&x| (x - r).abs())
        .fold(0.0f64, f64::max);
    let tail = last * r / (1.0 - r);
    if spread <= 1e-10 * r.max(1e-300) || tail <= 1e-14 * total {
        return Some(MomentCheck::Finite(total + tail));
    }
    None
}
