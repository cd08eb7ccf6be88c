//! One-dimensional Fourier-side tools: transition densities by inversion of
//! `e^{−tψ}`, the transition semigroup, the time-integrated resolvent and a
//! Picard solver for the backward Kolmogorov equation with drift.
//!
//! A grid function `g_j = g(x_j)` on `x_j = −R + jh` is treated as periodic on
//! `[−R, R)`. Discrete mode `k` (signed, `−N/2 ≤ k < N/2`) carries frequency
//! `ξ_k = πk/R`.

mod density;
mod picard;
mod semigroup;
mod tail;
#[cfg(test)]
mod tests;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::models::{radial_exponent, LevyModel};

pub use density::{
    density_fft, grad_l1_norm, gradient_scaling_exponent, second_l1_norm, DensityTable,
    GradientScaling, PropagationCheck,
};
pub use picard::{
    certificate, holder_seminorm, kolmogorov_residual, picard_solve, Certificate, PicardOptions,
    PicardSolution,
};
pub use semigroup::{resolvent_source, resolvent_source_with, semigroup_apply, semigroup_apply_with};
pub use tail::tail_mass_bound;

/// Uniform periodic grid `x_j = −R + jh`, `h = 2R/N`, `N` a power of two.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpaceGrid {
    half_width: f64,
    n: usize,
}

/// Targets for [`SpaceGrid::auto`].
#[derive(Clone, Copy, Debug)]
pub struct AutoGrid {
    /// Bound on `e^{−t_min ψ}` at the largest resolved frequency.
    pub cutoff: f64,
    /// Target for the mass of `p_{t_max}` outside `[−R, R]`.
    pub tail_mass: f64,
    /// Nodes per characteristic width of `p_{t_min}`.
    pub points_per_width: f64,
    /// `R` is at least this many widths of `p_{t_max}`.
    pub min_widths: f64,
    pub max_nodes: usize,
}

impl Default for AutoGrid {
    fn default() -> Self {
        Self {
            cutoff: 1e-14,
            tail_mass: 1e-8,
            points_per_width: 24.0,
            min_widths: 20.0,
            max_nodes: 1 << 20,
        }
    }
}

impl SpaceGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        ensure(
            half_width > 0.0 && half_width.is_finite(),
            "half_width",
            half_width,
            "(0, ∞)",
        )?;
        ensure(n >= 8 && n.is_power_of_two(), "n", n as f64, "a power of two ≥ 8")?;
        Ok(Self { half_width, n })
    }

    /// Picks `R` and `N` for densities at times in `[t_min, t_max]`.
    ///
    /// `h` resolves both the width of `p_{t_min}` and the decay of
    /// `e^{−t_min ψ}`; `R` covers the tail of `p_{t_max}` unless that would
    /// exceed `max_nodes`, in which case the tail estimate is left to the
    /// caller via [`tail_mass_bound`].
    pub fn auto(model: &LevyModel, t_min: f64, t_max: f64, opts: AutoGrid) -> Result<Self> {
        one_dimensional(model)?;
        ensure(t_min > 0.0, "t_min", t_min, "(0, ∞)")?;
        ensure(t_max >= t_min, "t_max", t_max, "[t_min, ∞)")?;
        let w_min = width(model, t_min)?;
        let w_max = width(model, t_max)?;
        let xi_cut = frequency_where(model, t_min, -opts.cutoff.ln())?;
        let h = (w_min / opts.points_per_width).min(std::f64::consts::PI / xi_cut);
        let mut r = opts.min_widths * w_max;
        if tail_mass_bound(model, t_max, r)? > opts.tail_mass {
            let (mut lo, mut hi) = (r, r);
            while tail_mass_bound(model, t_max, hi)? > opts.tail_mass && hi < 1e12 {
                lo = hi;
                hi *= 2.0;
            }
            for _ in 0..60 {
                let mid = (lo * hi).sqrt();
                if tail_mass_bound(model, t_max, mid)? > opts.tail_mass {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            r = hi;
        }
        let want = (2.0 * r / h).ceil().max(8.0);
        if want >= opts.max_nodes as f64 {
            let n = opts.max_nodes.next_power_of_two();
            return Self::new(0.5 * n as f64 * h, n);
        }
        let n = (want as usize).next_power_of_two();
        Self::new(r, n)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Signed frequency of FFT bin `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        let n = self.n as isize;
        let mut s = k as isize;
        if s >= n / 2 {
            s -= n;
        }
        std::f64::consts::PI * s as f64 / self.half_width
    }

    /// The largest resolved frequency `πN/(2R)`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI * (self.n / 2) as f64 / self.half_width
    }
}

pub(crate) fn one_dimensional(model: &LevyModel) -> Result<()> {
    if model.dim() != 1 {
        return Err(Error::Shape(format!(
            "spectral tools are one-dimensional, model has dimension {}",
            model.dim()
        )));
    }
    Ok(())
}

/// Smallest `ξ` with `t ψ(ξ) ≥ level`.
fn frequency_where(model: &LevyModel, t: f64, level: f64) -> Result<f64> {
    let target = level / t;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while radial_exponent(model, hi)? < target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::Resolution(format!(
                "exponent stays below {target:.3e}; e^(−tψ) is not integrable enough"
            )));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if radial_exponent(model, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Characteristic width `w` with `t ψ(1/w) = 1`.
pub(crate) fn width(model: &LevyModel, t: f64) -> Result<f64> {
    Ok(1.0 / frequency_where(model, t, 1.0)?)
}

/// FFT plans and the exponent sampled on the dual grid.
#[derive(Clone)]
pub struct Spectrum {
    grid: SpaceGrid,
    psi: Vec<f64>,
    xi: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectrum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectrum").field("grid", &self.grid).finish()
    }
}

impl Spectrum {
    pub fn new(model: &LevyModel, grid: SpaceGrid) -> Result<Self> {
        one_dimensional(model)?;
        let xi: Vec<f64> = (0..grid.len()).map(|k| grid.frequency(k)).collect();
        let psi = xi
            .par_iter()
            .map(|&x| radial_exponent(model, x))
            .collect::<Result<Vec<_>>>()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid,
            psi,
            xi,
            forward: planner.plan_fft_forward(grid.len()),
            inverse: planner.plan_fft_inverse(grid.len()),
        })
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// `e^{−tψ}` at the Nyquist frequency.
    pub fn cutoff_weight(&self, t: f64) -> f64 {
        (-t * self.psi[self.grid.len() / 2]).exp()
    }

    pub(crate) fn to_modes(&self, g: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform, normalized, real part.
    pub(crate) fn from_modes(&self, mut modes: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut modes);
        let scale = 1.0 / self.grid.len() as f64;
        modes.into_iter().map(|c| c.re * scale).collect()
    }

    /// Spectral derivative of a grid function.
    pub fn derivative(&self, g: &[f64]) -> Vec<f64> {
        let mut modes = self.to_modes(g);
        self.differentiate_modes(&mut modes);
        self.from_modes(modes)
    }

    pub(crate) fn differentiate_modes(&self, modes: &mut [Complex64]) {
        let nyq = self.grid.len() / 2;
        for (k, (m, &xi)) in modes.iter_mut().zip(&self.xi).enumerate() {
            *m = if k == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                *m * Complex64::new(0.0, xi)
            };
        }
    }
}
