//! Catalog of driving Lévy processes.
//!
//! Every model is symmetric and pure-jump with zero drift, except
//! [`ModelKind::BrownianMotion`]. Exponents follow the convention
//! `E e^{iξ·L_t} = e^{−tψ(ξ)}` with `ψ(ξ) = |ξ|^α` for the isotropic stable
//! family, so Brownian motion here has variance `2t` per coordinate.

mod criteria;
mod exponent;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{ensure, Error, Result};

pub use criteria::{
    balance_check, example52_admissible, predict_for_model, predicted_rate,
    singularity_exponent, verify_levy_moment, Balance, MomentCheck, MomentRegion, RatePrediction,
};
pub use exponent::{bernstein_eval, char_exponent, radial_exponent};
pub(crate) use exponent::pochhammer;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    IsotropicStable,
    RelativisticStable,
    TemperedStable,
    LampertiStable,
    TruncatedStable,
    LayeredStable,
    #[serde(rename = "subordinated_bm")]
    SubordinatedBM,
    BrownianMotion,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::IsotropicStable,
        Family::RelativisticStable,
        Family::TemperedStable,
        Family::LampertiStable,
        Family::TruncatedStable,
        Family::LayeredStable,
        Family::SubordinatedBM,
        Family::BrownianMotion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::IsotropicStable => "isotropic_stable",
            Family::RelativisticStable => "relativistic_stable",
            Family::TemperedStable => "tempered_stable",
            Family::LampertiStable => "lamperti_stable",
            Family::TruncatedStable => "truncated_stable",
            Family::LayeredStable => "layered_stable",
            Family::SubordinatedBM => "subordinated_bm",
            Family::BrownianMotion => "brownian_motion",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnsupportedModel(format!("unknown family `{s}`")))
    }
}

/// A moment index that may be an open infimum/supremum.
///
/// `open = true` means the moment condition holds for every exponent strictly
/// on the admissible side of `value` but not at `value` itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentIndex {
    pub value: f64,
    pub open: bool,
}

impl MomentIndex {
    pub const INFINITE: MomentIndex = MomentIndex {
        value: f64::INFINITY,
        open: false,
    };

    pub fn closed(value: f64) -> Self {
        Self { value, open: false }
    }

    pub fn open(value: f64) -> Self {
        Self { value, open: true }
    }
}

/// Small-jump index `γ₀ ∈ [1,2]` and big-jump index `γ∞ > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentIndices {
    pub gamma0: MomentIndex,
    pub gamma_inf: MomentIndex,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubordinatorFamily {
    /// `f(λ) = λ^ρ`
    Stable,
    /// `f(λ) = (λ + m²)^ρ − m^{2ρ}`
    TemperedStable { m: f64 },
    /// `f(λ) = (λ + m)_ρ − (m)_ρ` with the Pochhammer symbol `(t)_ρ = Γ(t+ρ)/Γ(t)`
    Lamperti { m: f64 },
}

/// A subordinator given by its Bernstein function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubordinatorSpec {
    family: SubordinatorFamily,
    rho: f64,
}

impl SubordinatorSpec {
    pub fn stable(rho: f64) -> Result<Self> {
        Self::new(SubordinatorFamily::Stable, rho)
    }

    pub fn tempered(rho: f64, m: f64) -> Result<Self> {
        Self::new(SubordinatorFamily::TemperedStable { m }, rho)
    }

    pub fn lamperti(rho: f64, m: f64) -> Result<Self> {
        Self::new(SubordinatorFamily::Lamperti { m }, rho)
    }

    pub fn new(family: SubordinatorFamily, rho: f64) -> Result<Self> {
        ensure(rho > 0.5 && rho <= 1.0, "rho", rho, "(1/2, 1]")?;
        match family {
            SubordinatorFamily::Stable => {}
            SubordinatorFamily::TemperedStable { m } | SubordinatorFamily::Lamperti { m } => {
                ensure(m > 0.0 && m.is_finite(), "m", m, "(0, ∞)")?
            }
        }
        Ok(Self { family, rho })
    }

    pub fn family(&self) -> SubordinatorFamily {
        self.family
    }

    /// Lower growth index: `liminf f(λ)/λ^ρ > 0`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Is the subordinator the deterministic clock `S_t = t`?
    pub fn is_deterministic(&self) -> bool {
        self.rho == 1.0
    }

    /// Moment index of `μ` near zero: `∫_{(0,1)} r^{δ₀} μ(dr) < ∞`.
    pub fn delta0(&self) -> MomentIndex {
        if self.is_deterministic() {
            MomentIndex::closed(1.0)
        } else {
            MomentIndex::open(self.rho)
        }
    }

    /// Moment index of `μ` at infinity: `∫_{(1,∞)} r^{δ∞} μ(dr) < ∞`.
    pub fn delta_inf(&self) -> MomentIndex {
        match self.family {
            SubordinatorFamily::Stable if !self.is_deterministic() => MomentIndex::open(self.rho),
            _ => MomentIndex::INFINITE,
        }
    }

    /// Lévy density of `μ`, when the subordinator has jumps.
    pub fn levy_density(&self, r: f64) -> f64 {
        if self.is_deterministic() || r <= 0.0 {
            return 0.0;
        }
        let rho = self.rho;
        let k = rho / gamma(1.0 - rho);
        match self.family {
            SubordinatorFamily::Stable => k * r.powf(-1.0 - rho),
            SubordinatorFamily::TemperedStable { m } => k * (-m * m * r).exp() * r.powf(-1.0 - rho),
            SubordinatorFamily::Lamperti { m } => {
                k * (-(m + rho) * r).exp() * (-(-r).exp_m1()).powf(-1.0 - rho)
            }
        }
    }
}

/// Family-specific parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    /// `ψ(ξ) = |ξ|^α`
    IsotropicStable { alpha: f64 },
    /// `ψ(ξ) = (|ξ|² + m²)^{α/2} − m^α`
    RelativisticStable { alpha: f64, m: f64 },
    /// `ψ(ξ) = m^α − (|ξ|² + m²)^{α/2} cos(α arctan(|ξ|/m))`
    TemperedStable { alpha: f64, m: f64 },
    /// `ψ(ξ) = (|ξ|² + m)_{α/2} − (m)_{α/2}`
    LampertiStable { alpha: f64, m: f64 },
    /// Radial density `Q(r) = r^{−1−α} 1_{(0,1)}(r)`
    TruncatedStable { alpha: f64 },
    /// Radial density `Q(r) = r^{−1−α} 1_{(0,1)}(r) + r^{−1−λ} 1_{[1,∞)}(r)`
    LayeredStable { alpha: f64, lambda_tail: f64 },
    /// `ψ(ξ) = f(|ξ|²)`
    SubordinatedBM(SubordinatorSpec),
    /// `ψ(ξ) = |ξ|²`
    BrownianMotion,
}

/// A driving Lévy process: family parameters plus dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyModel {
    kind: ModelKind,
    dim: usize,
}

fn check_alpha_open(alpha: f64) -> Result<()> {
    ensure(alpha > 1.0 && alpha < 2.0, "alpha", alpha, "(1, 2)")
}

fn check_m(m: f64) -> Result<()> {
    ensure(m > 0.0 && m.is_finite(), "m", m, "(0, ∞)")
}

impl LevyModel {
    /// Isotropic stable. `α ∈ (0, 2]` is accepted so that Cauchy-type checks
    /// are expressible; the rate theory itself needs `α > 1`.
    pub fn isotropic_stable(alpha: f64, dim: usize) -> Result<Self> {
        ensure(alpha > 0.0 && alpha <= 2.0, "alpha", alpha, "(0, 2]")?;
        Self::with_dim(ModelKind::IsotropicStable { alpha }, dim)
    }

    pub fn relativistic_stable(alpha: f64, m: f64, dim: usize) -> Result<Self> {
        ensure(alpha > 1.0 && alpha <= 2.0, "alpha", alpha, "(1, 2]")?;
        check_m(m)?;
        Self::with_dim(ModelKind::RelativisticStable { alpha, m }, dim)
    }

    pub fn tempered_stable(alpha: f64, m: f64) -> Result<Self> {
        check_alpha_open(alpha)?;
        check_m(m)?;
        Self::with_dim(ModelKind::TemperedStable { alpha, m }, 1)
    }

    pub fn lamperti_stable(alpha: f64, m: f64, dim: usize) -> Result<Self> {
        check_alpha_open(alpha)?;
        check_m(m)?;
        Self::with_dim(ModelKind::LampertiStable { alpha, m }, dim)
    }

    pub fn truncated_stable(alpha: f64) -> Result<Self> {
        check_alpha_open(alpha)?;
        Self::with_dim(ModelKind::TruncatedStable { alpha }, 1)
    }

    pub fn layered_stable(alpha: f64, lambda_tail: f64) -> Result<Self> {
        check_alpha_open(alpha)?;
        ensure(
            lambda_tail > 0.0 && lambda_tail.is_finite(),
            "lambda_tail",
            lambda_tail,
            "(0, ∞)",
        )?;
        Self::with_dim(ModelKind::LayeredStable { alpha, lambda_tail }, 1)
    }

    pub fn subordinated_bm(sub: SubordinatorSpec, dim: usize) -> Result<Self> {
        Self::with_dim(ModelKind::SubordinatedBM(sub), dim)
    }

    pub fn brownian_motion(dim: usize) -> Result<Self> {
        Self::with_dim(ModelKind::BrownianMotion, dim)
    }

    fn with_dim(kind: ModelKind, dim: usize) -> Result<Self> {
        ensure(dim >= 1, "dim", dim as f64, "{1, 2, ...}")?;
        Ok(Self { kind, dim })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> Family {
        match self.kind {
            ModelKind::IsotropicStable { .. } => Family::IsotropicStable,
            ModelKind::RelativisticStable { .. } => Family::RelativisticStable,
            ModelKind::TemperedStable { .. } => Family::TemperedStable,
            ModelKind::LampertiStable { .. } => Family::LampertiStable,
            ModelKind::TruncatedStable { .. } => Family::TruncatedStable,
            ModelKind::LayeredStable { .. } => Family::LayeredStable,
            ModelKind::SubordinatedBM(_) => Family::SubordinatedBM,
            ModelKind::BrownianMotion => Family::BrownianMotion,
        }
    }

    /// `α` in the heat-kernel gradient bound `∫|∂p_t| ≤ c t^{−1/α}`.
    pub fn gradient_index(&self) -> f64 {
        match self.kind {
            ModelKind::IsotropicStable { alpha }
            | ModelKind::RelativisticStable { alpha, .. }
            | ModelKind::TemperedStable { alpha, .. }
            | ModelKind::LampertiStable { alpha, .. }
            | ModelKind::TruncatedStable { alpha }
            | ModelKind::LayeredStable { alpha, .. } => alpha,
            ModelKind::SubordinatedBM(sub) => 2.0 * sub.rho(),
            ModelKind::BrownianMotion => 2.0,
        }
    }

    pub fn moment_indices(&self) -> MomentIndices {
        let inf = MomentIndex::INFINITE;
        let (gamma0, gamma_inf) = match self.kind {
            ModelKind::BrownianMotion => (MomentIndex::closed(2.0), inf),
            ModelKind::IsotropicStable { alpha } if alpha == 2.0 => (MomentIndex::closed(2.0), inf),
            ModelKind::IsotropicStable { alpha } => {
                let g0 = if alpha < 1.0 {
                    MomentIndex::closed(1.0)
                } else {
                    MomentIndex::open(alpha)
                };
                (g0, MomentIndex::open(alpha))
            }
            ModelKind::RelativisticStable { alpha, .. } if alpha == 2.0 => {
                (MomentIndex::closed(2.0), inf)
            }
            ModelKind::RelativisticStable { alpha, .. }
            | ModelKind::TemperedStable { alpha, .. }
            | ModelKind::LampertiStable { alpha, .. }
            | ModelKind::TruncatedStable { alpha } => (MomentIndex::open(alpha), inf),
            ModelKind::LayeredStable { alpha, lambda_tail } => {
                (MomentIndex::open(alpha), MomentIndex::open(lambda_tail))
            }
            ModelKind::SubordinatedBM(sub) => {
                let d0 = sub.delta0();
                let di = sub.delta_inf();
                (
                    MomentIndex {
                        value: 2.0 * d0.value,
                        open: d0.open,
                    },
                    MomentIndex {
                        value: 2.0 * di.value,
                        open: di.open,
                    },
                )
            }
        };
        MomentIndices { gamma0, gamma_inf }
    }

    /// Subordinator representation `ψ(ξ) = f(|ξ|²)`, when the model has one.
    pub fn subordinator(&self) -> Option<SubordinatorSpec> {
        match self.kind {
            ModelKind::IsotropicStable { alpha } if alpha < 2.0 => {
                SubordinatorSpec::stable(0.5 * alpha).ok()
            }
            ModelKind::RelativisticStable { alpha, m } if alpha < 2.0 => {
                SubordinatorSpec::tempered(0.5 * alpha, m).ok()
            }
            ModelKind::LampertiStable { alpha, m } => SubordinatorSpec::lamperti(0.5 * alpha, m).ok(),
            ModelKind::SubordinatedBM(sub) => Some(sub),
            _ => None,
        }
    }

    /// One-dimensional Lévy density `ν(y) = Q(|y|)` where known in closed form.
    pub fn radial_density(&self) -> Option<RadialDensity> {
        if self.dim != 1 {
            return None;
        }
        match self.kind {
            ModelKind::IsotropicStable { alpha } if alpha < 2.0 => {
                let c = alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (alpha + 1.0))
                    / (std::f64::consts::PI.sqrt() * gamma(1.0 - 0.5 * alpha));
                Some(RadialDensity::Stable { alpha, c })
            }
            ModelKind::TemperedStable { alpha, m } => Some(RadialDensity::Tempered {
                alpha,
                m,
                c: 0.5 * alpha * (alpha - 1.0) / gamma(2.0 - alpha),
            }),
            ModelKind::TruncatedStable { alpha } => Some(RadialDensity::Layered {
                alpha,
                lambda_tail: None,
            }),
            ModelKind::LayeredStable { alpha, lambda_tail } => Some(RadialDensity::Layered {
                alpha,
                lambda_tail: Some(lambda_tail),
            }),
            _ => None,
        }
    }

    /// Canonical flat configuration of this model.
    pub fn to_config(&self) -> ModelConfig {
        let mut c = ModelConfig {
            family: self.family().name().to_string(),
            dim: Some(self.dim),
            ..ModelConfig::default()
        };
        match self.kind {
            ModelKind::IsotropicStable { alpha }
            | ModelKind::TruncatedStable { alpha } => c.alpha = Some(alpha),
            ModelKind::RelativisticStable { alpha, m }
            | ModelKind::TemperedStable { alpha, m }
            | ModelKind::LampertiStable { alpha, m } => {
                c.alpha = Some(alpha);
                c.m = Some(m);
            }
            ModelKind::LayeredStable { alpha, lambda_tail } => {
                c.alpha = Some(alpha);
                c.lambda_tail = Some(lambda_tail);
            }
            ModelKind::SubordinatedBM(sub) => {
                c.rho = Some(sub.rho());
                match sub.family() {
                    SubordinatorFamily::Stable => c.subordinator = Some("stable".into()),
                    SubordinatorFamily::TemperedStable { m } => {
                        c.subordinator = Some("tempered_stable".into());
                        c.m = Some(m);
                    }
                    SubordinatorFamily::Lamperti { m } => {
                        c.subordinator = Some("lamperti".into());
                        c.m = Some(m);
                    }
                }
            }
            ModelKind::BrownianMotion => {}
        }
        c
    }

    /// Stable 64-bit FNV-1a fingerprint of the canonical configuration.
    pub fn fingerprint(&self) -> u64 {
        let text = serde_json::to_string(&self.to_config()).expect("config serializes");
        text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

impl fmt::Display for LevyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(d={}", self.family(), self.dim)?;
        let c = self.to_config();
        for (k, v) in [
            ("alpha", c.alpha),
            ("m", c.m),
            ("lambda_tail", c.lambda_tail),
            ("rho", c.rho),
        ] {
            if let Some(v) = v {
                write!(f, ", {k}={v}")?;
            }
        }
        write!(f, ")")
    }
}

/// One-sided radial Lévy density for one-dimensional symmetric models.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialDensity {
    /// `c r^{−1−α}`
    Stable { alpha: f64, c: f64 },
    /// `c e^{−mr} r^{−1−α}`
    Tempered { alpha: f64, m: f64, c: f64 },
    /// `r^{−1−α}` on `(0,1)`, then `r^{−1−λ}` on `[1,∞)` (zero if `λ` is absent)
    Layered { alpha: f64, lambda_tail: Option<f64> },
}

impl RadialDensity {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match *self {
            RadialDensity::Stable { alpha, c } => c * r.powf(-1.0 - alpha),
            RadialDensity::Tempered { alpha, m, c } => c * (-m * r).exp() * r.powf(-1.0 - alpha),
            RadialDensity::Layered { alpha, lambda_tail } => {
                if r < 1.0 {
                    r.powf(-1.0 - alpha)
                } else {
                    lambda_tail.map_or(0.0, |l| r.powf(-1.0 - l))
                }
            }
        }
    }

    pub fn small_jump_index(&self) -> f64 {
        match *self {
            RadialDensity::Stable { alpha, .. }
            | RadialDensity::Tempered { alpha, .. }
            | RadialDensity::Layered { alpha, .. } => alpha,
        }
    }
}

/// Flat key/value form of a model, as it appears in run configurations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_tail: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// `stable`, `tempered_stable` or `lamperti`; only for `subordinated_bm`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subordinator: Option<String>,
}

fn required(v: Option<f64>, key: &'static str, family: Family) -> Result<f64> {
    v.ok_or_else(|| Error::UnsupportedModel(format!("family `{family}` requires key `{key}`")))
}

impl TryFrom<&ModelConfig> for LevyModel {
    type Error = Error;

    fn try_from(c: &ModelConfig) -> Result<Self> {
        let family: Family = c.family.parse()?;
        let dim = c.dim.unwrap_or(1);
        match family {
            Family::IsotropicStable => {
                LevyModel::isotropic_stable(required(c.alpha, "alpha", family)?, dim)
            }
            Family::RelativisticStable => LevyModel::relativistic_stable(
                required(c.alpha, "alpha", family)?,
                required(c.m, "m", family)?,
                dim,
            ),
            Family::TemperedStable => {
                check_one_dim(dim, family)?;
                LevyModel::tempered_stable(required(c.alpha, "alpha", family)?, required(c.m, "m", family)?)
            }
            Family::LampertiStable => LevyModel::lamperti_stable(
                required(c.alpha, "alpha", family)?,
                required(c.m, "m", family)?,
                dim,
            ),
            Family::TruncatedStable => {
                check_one_dim(dim, family)?;
                LevyModel::truncated_stable(required(c.alpha, "alpha", family)?)
            }
            Family::LayeredStable => {
                check_one_dim(dim, family)?;
                LevyModel::layered_stable(
                    required(c.alpha, "alpha", family)?,
                    required(c.lambda_tail, "lambda_tail", family)?,
                )
            }
            Family::SubordinatedBM => {
                let rho = required(c.rho, "rho", family)?;
                let sub = match c.subordinator.as_deref().unwrap_or("stable") {
                    "stable" => SubordinatorSpec::stable(rho)?,
                    "tempered_stable" => SubordinatorSpec::tempered(rho, required(c.m, "m", family)?)?,
                    "lamperti" => SubordinatorSpec::lamperti(rho, required(c.m, "m", family)?)?,
                    other => {
                        return Err(Error::UnsupportedModel(format!(
                            "unknown subordinator `{other}`"
                        )))
                    }
                };
                LevyModel::subordinated_bm(sub, dim)
            }
            Family::BrownianMotion => LevyModel::brownian_motion(dim),
        }
    }
}

fn check_one_dim(dim: usize, family: Family) -> Result<()> {
    if dim == 1 {
        Ok(())
    } else {
        Err(Error::UnsupportedModel(format!(
            "family `{family}` is one-dimensional (got dim = {dim})"
        )))
    }
}
