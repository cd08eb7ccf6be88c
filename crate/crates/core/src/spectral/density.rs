use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{tail_mass_bound, AutoGrid, SpaceGrid, Spectrum};
use crate::diagnostics::pairwise_sum;
use crate::error::{ensure, Error, Result};
use crate::models::LevyModel;

const RINGING: f64 = 1e-10;
const MASS_TOL: f64 = 1e-6;

/// `p_t` and its first two derivatives on a [`SpaceGrid`].
#[derive(Clone, Debug, Serialize)]
pub struct DensityTable {
    pub t: f64,
    pub grid: SpaceGrid,
    pub values: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    /// Trapezoid mass of `values`.
    pub mass: f64,
    /// `e^{−tψ}` at the Nyquist frequency.
    pub cutoff_weight: f64,
    /// Upper estimate of the mass of `p_t` outside `[−R, R]`.
    pub tail_mass: f64,
}

impl DensityTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,p,dp,d2p")?;
        for j in 0..self.values.len() {
            writeln!(
                w,
                "{},{},{},{}",
                self.grid.node(j),
                self.values[j],
                self.first[j],
                self.second[j]
            )?;
        }
        Ok(())
    }

    /// Table of the mirrored density `x ↦ p(−x)`.
    pub fn reflected(&self) -> Self {
        let n = self.values.len();
        let mirror = |v: &[f64], sign: f64| (0..n).map(|j| sign * v[(n - j) % n]).collect();
        Self {
            values: mirror(&self.values, 1.0),
            first: mirror(&self.first, -1.0),
            second: mirror(&self.second, 1.0),
            ..self.clone()
        }
    }
}

/// Inverts `e^{−tψ}` on the dual grid: `p_j = (2R)^{−1} Σ_k (−1)^k e^{−tψ(ξ_k)} e^{−2πijk/N}`.
pub fn density_fft(model: &LevyModel, t: f64, grid: SpaceGrid) -> Result<DensityTable> {
    let spec = Spectrum::new(model, grid)?;
    density_with(&spec, model, t)
}

pub(crate) fn density_with(spec: &Spectrum, model: &LevyModel, t: f64) -> Result<DensityTable> {
    ensure(t > 0.0 && t.is_finite(), "t", t, "(0, ∞)")?;
    let grid = *spec.grid();
    let n = grid.len();
    let nyq = n / 2;
    let scale = 1.0 / (2.0 * grid.half_width());
    let base: Vec<f64> = spec
        .psi()
        .iter()
        .enumerate()
        .map(|(k, &psi)| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * scale * (-t * psi).exp()
        })
        .collect();
    let invert = |mult: &dyn Fn(usize) -> Complex64| -> Vec<f64> {
        let mut buf: Vec<Complex64> = base.iter().enumerate().map(|(k, &a)| mult(k) * a).collect();
        spec.forward.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    };
    let mut values = invert(&|_| Complex64::new(1.0, 0.0));
    let first = invert(&|k| {
        if k == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -spec.xi[k])
        }
    });
    let second = invert(&|k| Complex64::new(-spec.xi[k] * spec.xi[k], 0.0));

    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -RINGING {
        return Err(Error::Resolution(format!(
            "density at t = {t} dips to {min:.3e}; refine h (N = {n}, R = {})",
            grid.half_width()
        )));
    }
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let mass = grid.spacing() * pairwise_sum(&values);
    let cutoff_weight = spec.cutoff_weight(t);
    let defect = (mass - 1.0).abs().max(cutoff_weight);
    if defect > MASS_TOL {
        return Err(Error::Resolution(format!(
            "mass defect {defect:.3e} at t = {t}; increase N (now {n}) or R (now {})",
            grid.half_width()
        )));
    }
    Ok(DensityTable {
        t,
        grid,
        values,
        first,
        second,
        mass,
        cutoff_weight,
        tail_mass: tail_mass_bound(model, t, grid.half_width())?,
    })
}

/// `h Σ |f_j|`, summed in mirror pairs so that reflection leaves it unchanged.
fn mirrored_l1(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    let mut terms = Vec::with_capacity(n / 2 + 1);
    terms.push(f[0].abs());
    terms.push(f[n / 2].abs());
    for j in 1..n / 2 {
        terms.push(f[j].abs() + f[n - j].abs());
    }
    h * pairwise_sum(&terms)
}

/// `∫ |p_t′|` by the trapezoid rule on the spectral derivative.
pub fn grad_l1_norm(table: &DensityTable) -> f64 {
    mirrored_l1(&table.first, table.grid.spacing())
}

/// `∫ |p_t″|`.
pub fn second_l1_norm(table: &DensityTable) -> f64 {
    mirrored_l1(&table.second, table.grid.spacing())
}

/// `‖p″_{2t}‖₁` against `‖p′_t‖₁²`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PropagationCheck {
    pub t: f64,
    pub second_at_2t: f64,
    pub grad_squared: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradientScaling {
    pub t: Vec<f64>,
    pub grad_l1: Vec<f64>,
    pub second_l1_at_2t: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub propagation: Vec<PropagationCheck>,
    pub grid: SpaceGrid,
    /// Largest tail-mass estimate over the tables used.
    pub tail_mass: f64,
}

/// Relative slack in the propagation inequality.
pub const PROPAGATION_SLACK: f64 = 1e-3;

/// Least-squares slope of `log ‖p_t′‖₁` against `log t`, with the
/// second-derivative propagation check at every `t`.
pub fn gradient_scaling_exponent(model: &LevyModel, t_list: &[f64]) -> Result<GradientScaling> {
    ensure(t_list.len() >= 4, "t_list.len", t_list.len() as f64, "≥ 4")?;
    for &t in t_list {
        ensure(t > 0.0 && t <= 1.0, "t", t, "(0, 1]")?;
    }
    let t_min = t_list.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = t_list.iter().copied().fold(0.0, f64::max);
    let grid = SpaceGrid::auto(model, t_min, 2.0 * t_max, AutoGrid::default())?;
    let spec = Spectrum::new(model, grid)?;
    let rows = t_list
        .par_iter()
        .map(|&t| {
            let p = density_with(&spec, model, t)?;
            let p2 = density_with(&spec, model, 2.0 * t)?;
            Ok((grad_l1_norm(&p), second_l1_norm(&p2), p.tail_mass.max(p2.tail_mass)))
        })
        .collect::<Result<Vec<_>>>()?;
    let grad: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let second: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let tail_mass = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let xs: Vec<f64> = t_list.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = grad.iter().map(|g| g.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let propagation = t_list
        .iter()
        .zip(grad.iter().zip(&second))
        .map(|(&t, (&g, &s))| PropagationCheck {
            t,
            second_at_2t: s,
            grad_squared: g * g,
            holds: s <= g * g * (1.0 + PROPAGATION_SLACK),
        })
        .collect();
    Ok(GradientScaling {
        t: t_list.to_vec(),
        grad_l1: grad,
        second_l1_at_2t: second,
        slope,
        intercept,
        propagation,
        grid,
        tail_mass,
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
