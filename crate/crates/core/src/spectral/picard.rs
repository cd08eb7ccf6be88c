use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::semigroup::etd_weights;
use super::{one_dimensional, SpaceGrid, Spectrum};
use crate::em::DriftSpec;
use crate::error::{ensure, Error, Result};
use crate::models::{balance_check, singularity_exponent, LevyModel};

/// Settings for [`picard_solve`].
#[derive(Clone, Copy, Debug)]
pub struct PicardOptions {
    pub grid: SpaceGrid,
    /// Uniform steps on `[0, T]`.
    pub time_steps: usize,
    pub max_iter: usize,
    /// Stop once the sup-difference falls below `tol` times the first one.
    pub tol: f64,
    /// Largest accepted ratio of successive sup-differences.
    pub contraction: f64,
    pub max_halvings: usize,
    /// Run even when the balance condition fails; the certificate is then
    /// withheld.
    pub force: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            grid: SpaceGrid {
                half_width: 4.0 * std::f64::consts::PI,
                n: 256,
            },
            time_steps: 128,
            max_iter: 100,
            tol: 1e-10,
            contraction: 0.5,
            max_halvings: 5,
            force: false,
        }
    }
}

/// `‖u‖∞ + [∇u]_β + [∇u]_{γ₀/2}` over `‖g‖∞`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Certificate {
    pub horizon: f64,
    pub sup_u: f64,
    pub holder_beta: f64,
    pub holder_gamma: f64,
    pub source_sup: f64,
    pub constant: f64,
}

/// Solution of `∂_t u + A u + b·∇u = −g` on `[0,T) × ℝ`, `u(T,·) = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct PicardSolution {
    pub requested_horizon: f64,
    /// Horizon actually solved, after any halving.
    pub horizon: f64,
    pub halvings: usize,
    pub grid: SpaceGrid,
    pub times: Vec<f64>,
    /// `u(t_i, ·)` for each time node.
    pub u: Vec<Vec<f64>>,
    pub grad: Vec<Vec<f64>>,
    /// `u^{(k)}(0, ·)` for each iterate.
    #[serde(skip)]
    pub iterates: Vec<Vec<f64>>,
    /// `sup_{t,x} |u^{(k)} − u^{(k−1)}|`, starting from `u^{(0)} = 0`.
    pub history: Vec<f64>,
    pub ratios: Vec<f64>,
    pub beta: f64,
    pub gamma0: f64,
    pub kappa: f64,
    pub balance_ok: bool,
    pub certificate: Option<Certificate>,
}

impl PicardSolution {
    pub fn dt(&self) -> f64 {
        self.horizon / (self.times.len() - 1) as f64
    }

    /// Longest run of consecutive ratios at or below `cap`.
    pub fn contracting_run(&self, cap: f64) -> usize {
        let mut best = 0;
        let mut run = 0;
        for &r in &self.ratios {
            if r <= cap {
                run += 1;
                best = best.max(run);
            } else {
                run = 0;
            }
        }
        best
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x,u,grad_u")?;
        for (i, &t) in self.times.iter().enumerate() {
            for j in 0..self.grid.len() {
                writeln!(w, "{},{},{},{}", t, self.grid.node(j), self.u[i][j], self.grad[i][j])?;
            }
        }
        Ok(())
    }

    /// Summary without the solution arrays.
    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            requested_horizon: f64,
            horizon: f64,
            halvings: usize,
            grid: SpaceGrid,
            time_steps: usize,
            history: &'a [f64],
            ratios: &'a [f64],
            beta: f64,
            gamma0: f64,
            kappa: f64,
            balance_ok: bool,
            certificate: Option<Certificate>,
        }
        serde_json::to_string_pretty(&Summary {
            requested_horizon: self.requested_horizon,
            horizon: self.horizon,
            halvings: self.halvings,
            grid: self.grid,
            time_steps: self.times.len() - 1,
            history: &self.history,
            ratios: &self.ratios,
            beta: self.beta,
            gamma0: self.gamma0,
            kappa: self.kappa,
            balance_ok: self.balance_ok,
            certificate: self.certificate,
        })
        .map_err(|e| Error::Io(e.to_string()))
    }
}

fn sample(f: &DriftSpec, t: f64, nodes: &[f64]) -> Vec<f64> {
    let mut out = [0.0];
    nodes
        .iter()
        .map(|&x| {
            f.eval(t, &[x], &mut out);
            out[0]
        })
        .collect()
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Attempt {
    u: Vec<Vec<f64>>,
    grad: Vec<Vec<f64>>,
    iterates: Vec<Vec<f64>>,
    history: Vec<f64>,
    ratios: Vec<f64>,
}

enum Outcome {
    Done(Attempt),
    NoContraction(f64),
}

/// Picard iteration in reversed time `τ = T − t`:
/// `v^{(k+1)}(τ) = ∫₀^τ P_{τ−σ}[b·∇v^{(k)} + g](σ) dσ`, each step integrated
/// per mode with the source interpolated linearly between time nodes.
pub fn picard_solve(
    b: &DriftSpec,
    g: &DriftSpec,
    horizon: f64,
    model: &LevyModel,
    opts: PicardOptions,
) -> Result<PicardSolution> {
    one_dimensional(model)?;
    if b.dim() != 1 || g.dim() != 1 {
        return Err(Error::Shape("drift and source must be one-dimensional".into()));
    }
    ensure(horizon > 0.0 && horizon.is_finite(), "horizon", horizon, "(0, ∞)")?;
    ensure(opts.time_steps >= 2, "time_steps", opts.time_steps as f64, "≥ 2")?;
    ensure(
        opts.contraction > 0.0 && opts.contraction < 1.0,
        "contraction",
        opts.contraction,
        "(0, 1)",
    )?;
    let alpha = model.gradient_index();
    let gamma0 = model.moment_indices().gamma0.value;
    let beta = b.beta();
    let balance = balance_check(alpha, gamma0, beta)?;
    let kappa = singularity_exponent(alpha, gamma0, beta);
    if !balance.ok && !opts.force {
        return Err(Error::Domain {
            name: "kappa",
            value: kappa,
            expected: "< 1 (balance condition fails; set force to run uncertified)",
        });
    }
    let spec = Spectrum::new(model, opts.grid)?;
    let mut t_cur = horizon;
    let mut last_ratio = f64::NAN;
    for halvings in 0..=opts.max_halvings {
        match attempt(&spec, b, g, t_cur, &opts)? {
            Outcome::Done(a) => {
                let steps = opts.time_steps;
                let times = (0..=steps).map(|i| t_cur * i as f64 / steps as f64).collect();
                let mut sol = PicardSolution {
                    requested_horizon: horizon,
                    horizon: t_cur,
                    halvings,
                    grid: opts.grid,
                    times,
                    u: a.u,
                    grad: a.grad,
                    iterates: a.iterates,
                    history: a.history,
                    ratios: a.ratios,
                    beta,
                    gamma0,
                    kappa,
                    balance_ok: balance.ok,
                    certificate: None,
                };
                if balance.ok {
                    sol.certificate = Some(certificate(&sol, g));
                }
                return Ok(sol);
            }
            Outcome::NoContraction(r) => {
                last_ratio = r;
                t_cur *= 0.5;
            }
        }
    }
    Err(Error::Stiffness(format!(
        "difference ratio {last_ratio:.3} > {} after halving T {} times (T = {horizon})",
        opts.contraction, opts.max_halvings
    )))
}

fn attempt(
    spec: &Spectrum,
    b: &DriftSpec,
    g: &DriftSpec,
    horizon: f64,
    opts: &PicardOptions,
) -> Result<Outcome> {
    let steps = opts.time_steps;
    let n = spec.grid().len();
    let nodes = spec.grid().nodes();
    let dt = horizon / steps as f64;
    // Index m is reversed time τ_m = m·dt, i.e. forward time T − τ_m.
    let fwd = |m: usize| horizon - m as f64 * dt;
    let b_vals: Vec<Vec<f64>> = (0..=steps).map(|m| sample(b, fwd(m), &nodes)).collect();
    let g_modes: Vec<Vec<Complex64>> = (0..=steps)
        .map(|m| spec.to_modes(&sample(g, fwd(m), &nodes)))
        .collect();
    let weights: Vec<(f64, f64, f64)> = spec
        .psi()
        .iter()
        .map(|&psi| {
            let z = psi * dt;
            let (p1, p2) = etd_weights(z);
            ((-z).exp(), dt * p2, dt * (p1 - p2))
        })
        .collect();

    let mut v = vec![vec![0.0; n]; steps + 1];
    let mut grad = vec![vec![0.0; n]; steps + 1];
    let mut iterates = Vec::new();
    let mut history: Vec<f64> = Vec::new();
    let mut ratios = Vec::new();
    for k in 1..=opts.max_iter.max(1) {
        let h_modes: Vec<Vec<Complex64>> = (0..=steps)
            .map(|m| {
                if k == 1 || b.is_zero() {
                    return g_modes[m].clone();
                }
                let h: Vec<f64> = b_vals[m].iter().zip(&grad[m]).map(|(bv, gv)| bv * gv).collect();
                let mut hm = spec.to_modes(&h);
                for (x, y) in hm.iter_mut().zip(&g_modes[m]) {
                    *x += y;
                }
                hm
            })
            .collect();
        let mut state = vec![Complex64::new(0.0, 0.0); n];
        let mut new_v = Vec::with_capacity(steps + 1);
        let mut new_grad = Vec::with_capacity(steps + 1);
        new_v.push(vec![0.0; n]);
        new_grad.push(vec![0.0; n]);
        for m in 0..steps {
            for (i, s) in state.iter_mut().enumerate() {
                let (e, w0, w1) = weights[i];
                *s = e * *s + w0 * h_modes[m][i] + w1 * h_modes[m + 1][i];
            }
            new_v.push(spec.from_modes(state.clone()));
            let mut dm = state.clone();
            spec.differentiate_modes(&mut dm);
            new_grad.push(spec.from_modes(dm));
        }
        let diff = new_v
            .iter()
            .zip(&v)
            .map(|(a, c)| a.iter().zip(c).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs())))
            .fold(0.0, f64::max);
        v = new_v;
        grad = new_grad;
        iterates.push(v[steps].clone());
        if let Some(&prev) = history.last() {
            if prev > 0.0 {
                ratios.push(diff / prev);
            }
        }
        history.push(diff);
        if b.is_zero() || diff == 0.0 {
            break;
        }
        let floor = 1e3 * f64::EPSILON * v.iter().map(|r| sup_abs(r)).fold(0.0, f64::max);
        if let Some(&r) = ratios.last() {
            if r > opts.contraction && diff > floor {
                return Ok(Outcome::NoContraction(r));
            }
        }
        if diff <= opts.tol * history[0] || diff <= floor {
            break;
        }
        if k == opts.max_iter {
            return Ok(Outcome::NoContraction(ratios.last().copied().unwrap_or(f64::NAN)));
        }
    }
    v.reverse();
    grad.reverse();
    Ok(Outcome::Done(Attempt {
        u: v,
        grad,
        iterates,
        history,
        ratios,
    }))
}

/// Largest Hölder quotient `|f(x) − f(y)| / |x − y|^θ` over node pairs at
/// dyadic separations `2^k h ≤ 2`.
pub fn holder_seminorm(values: &[f64], spacing: f64, theta: f64) -> Result<f64> {
    ensure(theta > 0.0 && theta <= 1.0, "theta", theta, "(0, 1]")?;
    ensure(spacing > 0.0, "spacing", spacing, "(0, ∞)")?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Shape("grid function has non-finite values".into()));
    }
    let mut best = 0.0_f64;
    let mut s = 1;
    while s < values.len() && s as f64 * spacing <= 2.0 * (1.0 + 1e-12) {
        let denom = (s as f64 * spacing).powf(theta);
        for j in 0..values.len() - s {
            best = best.max((values[j + s] - values[j]).abs() / denom);
        }
        s *= 2;
    }
    Ok(best)
}

/// Measured constant `c(T)` in `‖u‖∞ + [∇u]_β + [∇u]_{γ₀/2} ≤ c(T) ‖g‖∞`.
pub fn certificate(sol: &PicardSolution, g: &DriftSpec) -> Certificate {
    let h = sol.grid.spacing();
    let nodes = sol.grid.nodes();
    let sup_u = sol.u.iter().map(|r| sup_abs(r)).fold(0.0, f64::max);
    let seminorm = |theta: f64| {
        sol.grad
            .iter()
            .map(|r| holder_seminorm(r, h, theta).unwrap_or(f64::NAN))
            .fold(0.0, f64::max)
    };
    let holder_beta = seminorm(sol.beta);
    let holder_gamma = seminorm((0.5 * sol.gamma0).min(1.0));
    let source_sup = sol
        .times
        .iter()
        .map(|&t| sup_abs(&sample(g, t, &nodes)))
        .fold(0.0, f64::max);
    let total = sup_u + holder_beta + holder_gamma;
    Certificate {
        horizon: sol.horizon,
        sup_u,
        holder_beta,
        holder_gamma,
        source_sup,
        constant: if source_sup > 0.0 { total / source_sup } else { 0.0 },
    }
}

/// `sup |∂_t u + A u + b·∇u + g| / ‖g‖∞` over interior time nodes, with
/// `A u` applied spectrally and `∂_t u` by central differences.
pub fn kolmogorov_residual(
    sol: &PicardSolution,
    b: &DriftSpec,
    g: &DriftSpec,
    model: &LevyModel,
) -> Result<f64> {
    let spec = Spectrum::new(model, sol.grid)?;
    let nodes = sol.grid.nodes();
    let dt = sol.dt();
    let steps = sol.times.len() - 1;
    let mut worst = 0.0_f64;
    let mut g_sup = 0.0_f64;
    for i in 1..steps {
        let t = sol.times[i];
        let mut modes = spec.to_modes(&sol.u[i]);
        for (m, &psi) in modes.iter_mut().zip(spec.psi()) {
            *m *= -psi;
        }
        let au = spec.from_modes(modes);
        let bv = sample(b, t, &nodes);
        let gv = sample(g, t, &nodes);
        g_sup = g_sup.max(sup_abs(&gv));
        for j in 0..nodes.len() {
            let du = (sol.u[i + 1][j] - sol.u[i - 1][j]) / (2.0 * dt);
            let r = du + au[j] + bv[j] * sol.grad[i][j] + gv[j];
            worst = worst.max(r.abs());
        }
    }
    Ok(if g_sup > 0.0 { worst / g_sup } else { worst })
}
