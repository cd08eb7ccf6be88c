use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::RngStream;

type DriftFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;

/// Catalog drifts, applied coordinatewise in `d > 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftConfig {
    Zero,
    Constant { value: Vec<f64> },
    /// `a cos(ωx)`
    Cosine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
    },
    /// `a cos(ωx) cos(νt)`
    CosineTime {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default = "one")]
        time_frequency: f64,
    },
    /// `a sgn(sin x)|sin x|^β`
    RoughSine {
        beta: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// A drift `b(t, x)` with declared space and time Hölder exponents and a sup
/// bound.
#[derive(Clone)]
pub struct DriftSpec {
    label: String,
    dim: usize,
    beta: f64,
    eta: f64,
    bound: f64,
    zero: bool,
    eval: Arc<DriftFn>,
}

impl fmt::Debug for DriftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftSpec")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("beta", &self.beta)
            .field("eta", &self.eta)
            .field("bound", &self.bound)
            .finish()
    }
}

impl DriftSpec {
    /// A user-supplied drift. `f(t, x, out)` writes `b(t, x)` into `out`.
    pub fn custom(
        label: impl Into<String>,
        dim: usize,
        beta: f64,
        eta: f64,
        bound: f64,
        f: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        ensure(dim >= 1, "dim", dim as f64, "≥ 1")?;
        ensure(beta > 0.0 && beta <= 1.0, "beta", beta, "(0, 1]")?;
        ensure(eta > 0.0 && eta <= 1.0, "eta", eta, "(0, 1]")?;
        ensure(bound >= 0.0 && bound.is_finite(), "bound", bound, "[0, ∞)")?;
        Ok(Self {
            label: label.into(),
            dim,
            beta,
            eta,
            bound,
            zero: false,
            eval: Arc::new(f),
        })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        let mut d = Self::custom("zero", dim, 1.0, 1.0, 0.0, |_, _, out| out.fill(0.0))?;
        d.zero = true;
        Ok(d)
    }

    pub fn constant(value: Vec<f64>) -> Result<Self> {
        ensure(value.iter().all(|v| v.is_finite()), "value", f64::NAN, "finite")?;
        let bound = value.iter().map(|v| v * v).sum::<f64>().sqrt();
        let v = value.clone();
        Self::custom("constant", value.len(), 1.0, 1.0, bound, move |_, _, out| {
            out.copy_from_slice(&v)
        })
    }

    pub fn cosine(amplitude: f64, frequency: f64, dim: usize) -> Result<Self> {
        let beta = 1.0;
        let bound = amplitude.abs() * (dim as f64).sqrt();
        Self::custom("cosine", dim, beta, 1.0, bound, move |_, x, out| {
            for (o, xi) in out.iter_mut().zip(x) {
                *o = amplitude * (frequency * xi).cos();
            }
        })
    }

    pub fn cosine_time(amplitude: f64, frequency: f64, time_frequency: f64, dim: usize) -> Result<Self> {
        let bound = amplitude.abs() * (dim as f64).sqrt();
        Self::custom("cosine_time", dim, 1.0, 1.0, bound, move |t, x, out| {
            let ct = (time_frequency * t).cos();
            for (o, xi) in out.iter_mut().zip(x) {
                *o = amplitude * (frequency * xi).cos() * ct;
            }
        })
    }

    pub fn rough_sine(beta: f64, amplitude: f64, dim: usize) -> Result<Self> {
        let bound = amplitude.abs() * (dim as f64).sqrt();
        Self::custom("rough_sine", dim, beta, 1.0, bound, move |_, x, out| {
            for (o, xi) in out.iter_mut().zip(x) {
                let s = xi.sin();
                *o = amplitude * s.signum() * s.abs().powf(beta);
            }
        })
    }

    pub fn from_config(cfg: &DriftConfig, dim: usize) -> Result<Self> {
        match cfg {
            DriftConfig::Zero => Self::zero(dim),
            DriftConfig::Constant { value } => {
                if value.len() != dim {
                    return Err(Error::Shape(format!(
                        "constant drift has {} components, model dimension is {dim}",
                        value.len()
                    )));
                }
                Self::constant(value.clone())
            }
            DriftConfig::Cosine { amplitude, frequency } => Self::cosine(*amplitude, *frequency, dim),
            DriftConfig::CosineTime {
                amplitude,
                frequency,
                time_frequency,
            } => Self::cosine_time(*amplitude, *frequency, *time_frequency, dim),
            DriftConfig::RoughSine { beta, amplitude } => Self::rough_sine(*beta, *amplitude, dim),
        }
    }

    /// `x ↦ b(t, x − v)`, keeping the declared exponents and bound.
    pub fn shifted(&self, v: Vec<f64>) -> Result<Self> {
        if v.len() != self.dim {
            return Err(Error::Shape("shift has the wrong dimension".into()));
        }
        let inner = self.eval.clone();
        let mut s = Self::custom(
            format!("{}(x − v)", self.label),
            self.dim,
            self.beta,
            self.eta,
            self.bound,
            move |t, x, out| {
                let y: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - b).collect();
                inner(t, &y, out)
            },
        )?;
        s.zero = self.zero;
        Ok(s)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// True for the identically zero drift.
    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.eval)(t, x, out)
    }

    /// Empirical sup and Hölder quotients on random points, pairs with
    /// `|x − y| ≤ 1` and `|s − t| ≤ 1` inside `[−radius, radius]^d × [0, horizon]`.
    pub fn holder_probe(&self, pairs: usize, radius: f64, horizon: f64, rng: &mut RngStream) -> HolderProbe {
        let d = self.dim;
        let mut probe = HolderProbe::default();
        let (mut bx, mut by) = (vec![0.0; d], vec![0.0; d]);
        let mut x = vec![0.0; d];
        let mut y = vec![0.0; d];
        let dist = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
        };
        for _ in 0..pairs {
            let t = horizon * rng.random::<f64>();
            for k in 0..d {
                x[k] = radius * (2.0 * rng.random::<f64>() - 1.0);
            }
            // a direction on the sphere scaled to a log-uniform length in (1e-6, 1]
            let len = 10f64.powf(-6.0 * rng.random::<f64>());
            let mut dir: Vec<f64> = (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            dir.iter_mut().for_each(|v| *v *= len / n);
            for k in 0..d {
                y[k] = x[k] + dir[k];
            }
            self.eval(t, &x, &mut bx);
            self.eval(t, &y, &mut by);
            let nb = bx.iter().map(|v| v * v).sum::<f64>().sqrt();
            probe.max_abs = probe.max_abs.max(nb);
            let r = dist(&x, &y);
            if r > 0.0 {
                probe.space_quotient = probe.space_quotient.max(dist(&bx, &by) / r.powf(self.beta));
            }
            let s = (t + len * if rng.random::<bool>() { 1.0 } else { -1.0 }).clamp(0.0, horizon);
            if s != t {
                self.eval(s, &x, &mut by);
                probe.time_quotient =
                    probe.time_quotient.max(dist(&bx, &by) / (s - t).abs().powf(self.eta));
            }
        }
        probe
    }
}

/// Largest observed `|b|` and Hölder quotients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HolderProbe {
    pub max_abs: f64,
    pub space_quotient: f64,
    pub time_quotient: f64,
}
