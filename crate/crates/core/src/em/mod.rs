//! Euler–Maruyama scheme `X_{i+1} = X_i + b(t_i, X_i) dt + ΔL_i` and the
//! common-noise coupling of a coarse scheme with a fine reference.
//!
//! On a grid the increment is added after the drift step, so the left limit
//! `X_{t−}` in the continuous-time scheme and `X_t` coincide at the nodes.

mod drift;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use drift::{DriftConfig, DriftSpec, HolderProbe};

use crate::diagnostics::tree_sum;
use crate::error::{ensure, Error, Result};
use crate::samplers::IncrementBatch;

/// Uniform grid `t_i = T i / n` on `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationGrid {
    horizon: f64,
    n: usize,
}

impl SimulationGrid {
    pub fn new(horizon: f64, n: usize) -> Result<Self> {
        ensure(horizon > 0.0 && horizon.is_finite(), "T", horizon, "(0, ∞)")?;
        ensure(n >= 1, "n", n as f64, "≥ 1")?;
        Ok(Self { horizon, n })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.horizon * i as f64 / self.n as f64
    }

    /// Index of the grid cell containing `s`, i.e. `⌊ns/T⌋` clamped to `[0, n]`.
    pub fn cell(&self, s: f64) -> usize {
        let guess = (self.n as f64 * s / self.horizon).floor();
        let mut i = if guess <= 0.0 { 0 } else { (guess as usize).min(self.n) };
        while i < self.n && self.time(i + 1) <= s {
            i += 1;
        }
        while i > 0 && self.time(i) > s {
            i -= 1;
        }
        i
    }

    /// `η_n(s) = T⌊ns/T⌋/n`, exact at the nodes.
    pub fn eta(&self, s: f64) -> f64 {
        self.time(self.cell(s))
    }
}

/// Drift evaluation inside a step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode {
    /// `b(η_n(s), X_{η_n(s)})`: time and state frozen at the left node.
    #[default]
    Frozen,
    /// `b(s, X_{η_n(s)})`: state frozen, time running; the step integral
    /// uses two-point Gauss–Legendre.
    TimeVarying,
}

/// States of a scheme on its grid, row-major `(n+1) × d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub grid: SimulationGrid,
    pub dim: usize,
    pub states: Vec<f64>,
}

impl GridPath {
    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn initial(&self) -> &[f64] {
        self.state(0)
    }

    /// CSV with header `t,x_1,…,x_d`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.dim).map(|k| format!("x_{k}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..=self.grid.steps() {
            write!(w, "{}", self.grid.time(i))?;
            for v in self.state(i) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

struct Stepper<'a> {
    drift: &'a DriftSpec,
    mode: DriftMode,
    buf: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(drift: &'a DriftSpec, mode: DriftMode) -> Self {
        let d = drift.dim();
        Self {
            drift,
            mode,
            buf: vec![0.0; d],
            tmp: vec![0.0; d],
        }
    }

    /// Adds `∫_{t}^{t+h} b(·, frozen) ds` into `x`, with `t_frozen` the time
    /// argument for the frozen form.
    fn drift_step(&mut self, x: &mut [f64], frozen: &[f64], t_frozen: f64, t: f64, h: f64) {
        if self.drift.is_zero() {
            return;
        }
        match self.mode {
            DriftMode::Frozen => {
                self.drift.eval(t_frozen, frozen, &mut self.buf);
                for (xi, bi) in x.iter_mut().zip(&self.buf) {
                    *xi += bi * h;
                }
            }
            DriftMode::TimeVarying => {
                let off = 0.5 * h / 3f64.sqrt();
                let mid = t + 0.5 * h;
                self.drift.eval(mid - off, frozen, &mut self.buf);
                self.drift.eval(mid + off, frozen, &mut self.tmp);
                for ((xi, a), b) in x.iter_mut().zip(&self.buf).zip(&self.tmp) {
                    *xi += 0.5 * (a + b) * h;
                }
            }
        }
    }
}

fn check_shapes(drift: &DriftSpec, x0: &[f64], batch: &IncrementBatch, rows: usize) -> Result<()> {
    if x0.len() != drift.dim() || batch.dim != drift.dim() {
        return Err(Error::Shape(format!(
            "x0 has dimension {}, drift {}, increments {}",
            x0.len(),
            drift.dim(),
            batch.dim
        )));
    }
    if batch.rows() != rows {
        return Err(Error::Shape(format!(
            "grid has {rows} steps but the batch has {} increments",
            batch.rows()
        )));
    }
    Ok(())
}

/// Runs the scheme with the drift frozen at the left node of each step.
pub fn em_path(drift: &DriftSpec, x0: &[f64], grid: &SimulationGrid, batch: &IncrementBatch) -> Result<GridPath> {
    em_path_with(drift, x0, grid, batch, DriftMode::Frozen)
}

pub fn em_path_with(
    drift: &DriftSpec,
    x0: &[f64],
    grid: &SimulationGrid,
    batch: &IncrementBatch,
    mode: DriftMode,
) -> Result<GridPath> {
    let n = grid.steps();
    check_shapes(drift, x0, batch, n)?;
    let d = x0.len();
    let dt = grid.dt();
    let mut states = Vec::with_capacity((n + 1) * d);
    states.extend_from_slice(x0);
    let mut step = Stepper::new(drift, mode);
    let mut x = x0.to_vec();
    let mut frozen = x0.to_vec();
    for i in 0..n {
        let t = grid.time(i);
        frozen.copy_from_slice(&x);
        step.drift_step(&mut x, &frozen, t, t, dt);
        for (xi, li) in x.iter_mut().zip(batch.row(i)) {
            *xi += li;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow { step: i + 1 });
        }
        states.extend_from_slice(&x);
    }
    Ok(GridPath {
        grid: *grid,
        dim: d,
        states,
    })
}

/// Sums consecutive blocks of `factor` rows with a fixed binary tree, so
/// coarsening by 2 twice equals coarsening by 4 bit for bit.
pub fn coarsen(batch: &IncrementBatch, factor: usize) -> Result<IncrementBatch> {
    ensure(factor >= 2, "factor", factor as f64, "≥ 2")?;
    let rows = batch.rows();
    if rows % factor != 0 {
        return Err(Error::Shape(format!("{factor} does not divide {rows} rows")));
    }
    let d = batch.dim;
    let mut values = Vec::with_capacity(rows / factor * d);
    let mut col = vec![0.0; factor];
    for j in 0..rows / factor {
        for k in 0..d {
            for (r, c) in col.iter_mut().enumerate() {
                *c = batch.values[(j * factor + r) * d + k];
            }
            values.push(tree_sum(&col));
        }
    }
    IncrementBatch::new(batch.model, batch.dt * factor as f64, values, batch.truncation)
}

/// `max_k |X^{fine}_{t_k} − X^{coarse}_{t_k}|` over the fine grid, with the
/// coarse scheme run on the fine grid under the same increments.
pub fn coupled_sup_error(
    drift: &DriftSpec,
    x0: &[f64],
    horizon: f64,
    n_fine: usize,
    n_coarse: usize,
    batch_fine: &IncrementBatch,
) -> Result<f64> {
    Ok(coupled_sup_errors(drift, x0, horizon, n_fine, &[n_coarse], batch_fine, DriftMode::Frozen)?[0])
}

/// [`coupled_sup_error`] for several coarse step counts sharing one fine path.
pub fn coupled_sup_errors(
    drift: &DriftSpec,
    x0: &[f64],
    horizon: f64,
    n_fine: usize,
    n_coarse: &[usize],
    batch_fine: &IncrementBatch,
    mode: DriftMode,
) -> Result<Vec<f64>> {
    let fine = SimulationGrid::new(horizon, n_fine)?;
    check_shapes(drift, x0, batch_fine, n_fine)?;
    for &nc in n_coarse {
        ensure(nc >= 1, "n_coarse", nc as f64, "≥ 1")?;
        if n_fine % nc != 0 {
            return Err(Error::Shape(format!("{nc} does not divide {n_fine}")));
        }
    }
    if drift.is_zero() {
        return Ok(vec![0.0; n_coarse.len()]);
    }
    let dt = fine.dt();
    let k = n_coarse.len();
    let ratios: Vec<usize> = n_coarse.iter().map(|&nc| n_fine / nc).collect();
    let mut x = x0.to_vec();
    let mut frozen_fine = x0.to_vec();
    let mut ys: Vec<Vec<f64>> = vec![x0.to_vec(); k];
    let mut frozen: Vec<Vec<f64>> = vec![x0.to_vec(); k];
    let mut frozen_t = vec![0.0; k];
    let mut sup = vec![0.0f64; k];
    let mut step = Stepper::new(drift, mode);
    for i in 0..n_fine {
        let t = fine.time(i);
        frozen_fine.copy_from_slice(&x);
        step.drift_step(&mut x, &frozen_fine, t, t, dt);
        let l = batch_fine.row(i);
        for (xi, li) in x.iter_mut().zip(l) {
            *xi += li;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow { step: i + 1 });
        }
        for j in 0..k {
            if i % ratios[j] == 0 {
                frozen[j].copy_from_slice(&ys[j]);
                frozen_t[j] = t;
            }
            step.drift_step(&mut ys[j], &frozen[j], frozen_t[j], t, dt);
            for (yi, li) in ys[j].iter_mut().zip(l) {
                *yi += li;
            }
            if ys[j].iter().any(|v| !v.is_finite()) {
                return Err(Error::Overflow { step: i + 1 });
            }
            let dist = x
                .iter()
                .zip(&ys[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            sup[j] = sup[j].max(dist);
        }
    }
    Ok(sup)
}

/// Upper bound on how much the sup over the fine grid can underestimate the
/// continuous-time sup of the drift part: `2‖b‖∞ T / n_fine`.
pub fn sup_discretization_bound(drift: &DriftSpec, horizon: f64, n_fine: usize) -> f64 {
    2.0 * drift.bound() * horizon / n_fine as f64
}
