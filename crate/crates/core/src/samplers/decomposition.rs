//! Small-jump Gaussian / large-jump compound Poisson sampler for
//! one-dimensional symmetric models with a radial Lévy density.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::models::{LevyModel, RadialDensity};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};
use crate::rng::RngStream;

/// How the truncation level ε is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EpsilonRule {
    /// A fixed ε.
    Fixed { epsilon: f64 },
    /// Smallest ε with `√(dt σ²(ε)) ≤ budget · dt^{1/α}`, raised if needed so
    /// that the expected number of large jumps per step is at most
    /// `max_jumps`.
    Budget { budget: f64, max_jumps: f64 },
}

impl Default for EpsilonRule {
    fn default() -> Self {
        EpsilonRule::Budget {
            budget: 0.05,
            max_jumps: 32.0,
        }
    }
}

/// What was replaced by the Gaussian part and how many large jumps remain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationInfo {
    pub epsilon: f64,
    /// `σ²(ε) = ∫_{|y|<ε} y² ν(dy)`, per unit time.
    pub sigma2: f64,
    /// `ν(|y| ≥ ε)`, per unit time.
    pub intensity: f64,
    /// `∫_{|y|<ε} y⁴ ν(dy)`, or an upper bound for it.
    pub fourth_moment: f64,
}

impl TruncationInfo {
    /// Bound on `|E e^{iξX} − exp(−dt ψ(ξ))|` caused by the Gaussian
    /// replacement over a step `dt`: `dt · min(ξ²σ²/2, ξ⁴ m₄/24)`.
    pub fn cf_bias_bound(&self, xi: f64, dt: f64) -> f64 {
        let x2 = xi * xi;
        dt * (0.5 * x2 * self.sigma2).min(x2 * x2 * self.fourth_moment / 24.0)
    }
}

/// Precomputed decomposition of a one-dimensional model at a fixed ε.
#[derive(Clone, Debug)]
pub struct JumpDecomposition {
    density: RadialDensity,
    info: TruncationInfo,
    /// Mass of `[ε, 1)` and of `[1, ∞)` for the layered family.
    layer_mass: (f64, f64),
}

fn tol() -> Tolerance {
    Tolerance::new(1e-300, 1e-12)
}

impl JumpDecomposition {
    pub fn new(model: &LevyModel, epsilon: f64) -> Result<Self> {
        let density = model.radial_density().ok_or_else(|| {
            Error::UnsupportedModel(format!("{model} has no one-dimensional radial density"))
        })?;
        Self::from_density(density, epsilon)
    }

    pub fn from_density(density: RadialDensity, epsilon: f64) -> Result<Self> {
        ensure(epsilon > 0.0 && epsilon.is_finite(), "epsilon", epsilon, "(0, ∞)")?;
        if let RadialDensity::Layered { .. } = density {
            ensure(epsilon <= 1.0, "epsilon", epsilon, "(0, 1]")?;
        }
        let (sigma2, fourth, inner, outer) = match density {
            RadialDensity::Stable { alpha, c } => (
                2.0 * c * epsilon.powf(2.0 - alpha) / (2.0 - alpha),
                2.0 * c * epsilon.powf(4.0 - alpha) / (4.0 - alpha),
                2.0 * c * epsilon.powf(-alpha) / alpha,
                0.0,
            ),
            RadialDensity::Layered { alpha, lambda_tail } => (
                2.0 * epsilon.powf(2.0 - alpha) / (2.0 - alpha),
                2.0 * epsilon.powf(4.0 - alpha) / (4.0 - alpha),
                2.0 * (epsilon.powf(-alpha) - 1.0) / alpha,
                lambda_tail.map_or(0.0, |l| 2.0 / l),
            ),
            RadialDensity::Tempered { alpha, m, c } => {
                // r = ε v^{1/(2−α)} absorbs the r^{1−α} endpoint
                let k = 1.0 / (2.0 - alpha);
                let s = integrate(|v| (-m * epsilon * v.powf(k)).exp(), 0.0, 1.0, tol())
                    .map_err(quad_err)?
                    .value;
                let sigma2 = 2.0 * c * epsilon.powf(2.0 - alpha) * k * s;
                // r = ε e^u maps [ε, ∞) to [0, ∞)
                let tail = integrate_to_infinity(
                    |u| (-m * epsilon * u.exp()).exp() * (-alpha * u).exp(),
                    0.0,
                    tol(),
                )
                .map_err(quad_err)?
                .value;
                (
                    sigma2,
                    2.0 * c * epsilon.powf(4.0 - alpha) / (4.0 - alpha),
                    2.0 * c * epsilon.powf(-alpha) * tail,
                    0.0,
                )
            }
        };
        if !(sigma2.is_finite() && inner.is_finite() && outer.is_finite()) {
            return Err(Error::InvalidDensity(format!(
                "non-finite truncation data at ε = {epsilon}"
            )));
        }
        Ok(Self {
            density,
            info: TruncationInfo {
                epsilon,
                sigma2,
                intensity: inner + outer,
                fourth_moment: fourth,
            },
            layer_mass: (inner, outer),
        })
    }

    /// Chooses ε for a step `dt` according to `rule`.
    pub fn for_step(model: &LevyModel, dt: f64, rule: EpsilonRule) -> Result<Self> {
        ensure(dt > 0.0 && dt.is_finite(), "dt", dt, "(0, ∞)")?;
        let density = model.radial_density().ok_or_else(|| {
            Error::UnsupportedModel(format!("{model} has no one-dimensional radial density"))
        })?;
        let (budget, max_jumps) = match rule {
            EpsilonRule::Fixed { epsilon } => return Self::from_density(density, epsilon),
            EpsilonRule::Budget { budget, max_jumps } => (budget, max_jumps),
        };
        ensure(budget > 0.0, "budget", budget, "(0, ∞)")?;
        ensure(max_jumps > 0.0, "max_jumps", max_jumps, "(0, ∞)")?;
        let alpha = density.small_jump_index();
        let hi = match density {
            RadialDensity::Layered { .. } => 1.0,
            _ => 1e3,
        };
        let target = budget * dt.powf(1.0 / alpha);
        // σ²(ε) increases with ε and the intensity decreases, so both
        // thresholds are found by bisection in log ε.
        let eps_bias = bisect_log(1e-12, hi, |e| {
            Ok((dt * Self::from_density(density, e)?.info.sigma2).sqrt() <= target)
        })?;
        let eps_work = bisect_log(1e-12, hi, |e| {
            Ok(dt * Self::from_density(density, e)?.info.intensity <= max_jumps)
        })?;
        Self::from_density(density, eps_bias.max(eps_work))
    }

    pub fn info(&self) -> TruncationInfo {
        self.info
    }

    /// One increment over `dt` and the number of large jumps it contains.
    pub fn draw(&self, dt: f64, rng: &mut RngStream) -> Result<(f64, u64)> {
        let z: f64 = StandardNormal.sample(rng);
        let mut x = (dt * self.info.sigma2).sqrt() * z;
        let lambda = dt * self.info.intensity;
        let mut count = 0;
        if lambda > 0.0 {
            count = Poisson::new(lambda)
                .map_err(|e| Error::InvalidDensity(format!("poisson({lambda}): {e}")))?
                .sample(rng) as u64;
            for _ in 0..count {
                let r = self.jump_size(rng);
                x += if rng.random::<bool>() { r } else { -r };
            }
        }
        Ok((x, count))
    }

    /// Magnitude of a jump conditioned on `|y| ≥ ε`.
    fn jump_size(&self, rng: &mut RngStream) -> f64 {
        let eps = self.info.epsilon;
        match self.density {
            RadialDensity::Stable { alpha, .. } => eps * rng.open01().powf(-1.0 / alpha),
            RadialDensity::Layered { alpha, lambda_tail } => {
                let (inner, outer) = self.layer_mass;
                if rng.random::<f64>() * (inner + outer) < inner {
                    // inverse CDF of r^{−1−α} on [ε, 1)
                    let a = eps.powf(-alpha);
                    let u = rng.open01();
                    (a - u * (a - 1.0)).powf(-1.0 / alpha)
                } else {
                    rng.open01().powf(-1.0 / lambda_tail.unwrap_or(f64::INFINITY))
                }
            }
            RadialDensity::Tempered { alpha, m, .. } => {
                if m * eps <= 1.0 {
                    // Pareto proposal, accept with e^{−m(r−ε)}
                    loop {
                        let r = eps * rng.open01().powf(-1.0 / alpha);
                        if rng.open01() <= (-m * (r - eps)).exp() {
                            return r;
                        }
                    }
                } else {
                    // shifted exponential proposal, accept with (ε/r)^{1+α}
                    loop {
                        let r = eps + rng.exp1() / m;
                        if rng.open01() <= (eps / r).powf(1.0 + alpha) {
                            return r;
                        }
                    }
                }
            }
        }
    }
}

fn quad_err(e: Error) -> Error {
    Error::InvalidDensity(format!("tail quadrature failed: {e}"))
}

/// Smallest `x ∈ [lo, hi]` (to relative 1e-10) with `ok(x)` true, assuming
/// `ok` is monotone; `hi` if none.
fn bisect_log(lo: f64, hi: f64, ok: impl Fn(f64) -> Result<bool>) -> Result<f64> {
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let upper_ok = ok(hi)?;
    let lower_ok = ok(lo)?;
    if lower_ok {
        return Ok(lo);
    }
    if !upper_ok {
        return Ok(hi);
    }
    while b - a > 1e-10 {
        let mid = 0.5 * (a + b);
        if ok(mid.exp())? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(b.exp())
}

/// One increment over `dt` of a one-dimensional model via the jump
/// decomposition at truncation level `epsilon`.
pub fn sample_jump_decomposition(
    model: &LevyModel,
    epsilon: f64,
    dt: f64,
    rng: &mut RngStream,
) -> Result<(f64, TruncationInfo)> {
    ensure(dt > 0.0 && dt.is_finite(), "dt", dt, "(0, ∞)")?;
    let dec = JumpDecomposition::new(model, epsilon)?;
    let (x, _) = dec.draw(dt, rng)?;
    Ok((x, dec.info()))
}
