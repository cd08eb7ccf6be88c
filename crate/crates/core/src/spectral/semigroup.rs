use num_complex::Complex64;

use super::{SpaceGrid, Spectrum};
use crate::error::{ensure, Error, Result};
use crate::models::LevyModel;

/// Default number of graded panels in [`resolvent_source`].
pub const GRADED_PANELS: usize = 256;

fn check_len(spec: &Spectrum, g: &[f64]) -> Result<()> {
    if g.len() != spec.grid().len() {
        return Err(Error::Shape(format!(
            "grid function has {} values, grid has {} nodes",
            g.len(),
            spec.grid().len()
        )));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Shape("grid function has non-finite values".into()));
    }
    Ok(())
}

/// `(P_t g)(x) = E g(x + L_t)`: multiply each mode by `e^{−tψ(ξ_k)}`.
pub fn semigroup_apply(g: &[f64], t: f64, model: &LevyModel, grid: SpaceGrid) -> Result<Vec<f64>> {
    semigroup_apply_with(&Spectrum::new(model, grid)?, g, t)
}

pub fn semigroup_apply_with(spec: &Spectrum, g: &[f64], t: f64) -> Result<Vec<f64>> {
    ensure(t >= 0.0 && t.is_finite(), "t", t, "[0, ∞)")?;
    check_len(spec, g)?;
    let mut modes = spec.to_modes(g);
    for (m, &psi) in modes.iter_mut().zip(spec.psi()) {
        *m *= (-t * psi).exp();
    }
    Ok(spec.from_modes(modes))
}

/// `φ₁(z) = (1 − e^{−z})/z` and `φ₂(z) = (1 − (1+z)e^{−z})/z²`.
pub(crate) fn etd_weights(z: f64) -> (f64, f64) {
    if z < 0.1 {
        let (mut p1, mut p2) = (0.0, 0.0);
        let mut term = 1.0;
        for n in 0..14 {
            let nf = n as f64;
            term = if n == 0 { 1.0 } else { -term * z / nf };
            p1 += term / (nf + 1.0);
            p2 += term / ((nf + 1.0) * (nf + 2.0));
        }
        (p1, p2)
    } else {
        let em = -(-z).exp_m1();
        (em / z, (em - z * (-z).exp()) / (z * z))
    }
}

/// `u(t) = ∫₀ᵗ P_{t−s} g(s) ds` with nodes `s_k = t(1 − (k/K)²)`.
///
/// Between nodes `g` is interpolated linearly in `s` and the semigroup factor
/// is integrated exactly per mode, so time-constant sources are reproduced up
/// to rounding.
pub fn resolvent_source<G: Fn(f64) -> Vec<f64>>(
    g: G,
    t: f64,
    model: &LevyModel,
    grid: SpaceGrid,
) -> Result<Vec<f64>> {
    resolvent_source_with(&Spectrum::new(model, grid)?, g, t, GRADED_PANELS)
}

pub fn resolvent_source_with<G: Fn(f64) -> Vec<f64>>(
    spec: &Spectrum,
    g: G,
    t: f64,
    panels: usize,
) -> Result<Vec<f64>> {
    ensure(t >= 0.0 && t.is_finite(), "t", t, "[0, ∞)")?;
    ensure(panels >= 1, "panels", panels as f64, "≥ 1")?;
    let n = spec.grid().len();
    if t == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let tau = |k: usize| t * (k as f64 / panels as f64).powi(2);
    let modes_at = |k: usize| -> Result<Vec<Complex64>> {
        let gs = g(t - tau(k));
        check_len(spec, &gs)?;
        Ok(spec.to_modes(&gs))
    };
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    let mut left = modes_at(0)?;
    for k in 0..panels {
        let right = modes_at(k + 1)?;
        let (a, b) = (tau(k), tau(k + 1));
        let d = b - a;
        for (i, &psi) in spec.psi().iter().enumerate() {
            let (p1, p2) = etd_weights(psi * d);
            let damp = (-psi * a).exp() * d;
            acc[i] += damp * ((p1 - p2) * left[i] + p2 * right[i]);
        }
        left = right;
    }
    Ok(spec.from_modes(acc))
}
