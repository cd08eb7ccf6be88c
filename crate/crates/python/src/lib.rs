//! Python module `levysde`: models, drifts, samplers, the strong-rate
//! harness and the spectral tools.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use levysde::em::{em_path, DriftSpec, SimulationGrid};
use levysde::harness::{run_experiment as run, ExperimentConfig, DEFAULT_TOLERANCE};
use levysde::models::{self, radial_exponent, SubordinatorSpec};
use levysde::samplers::IncrementSampler;
use levysde::spectral::{
    density_fft, grad_l1_norm, gradient_scaling_exponent, kolmogorov_residual, picard_solve,
    PicardOptions, SpaceGrid,
};
use levysde::RngStream;

fn err(e: levysde::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A driving Lévy process.
#[pyclass(name = "LevyModel", frozen)]
struct PyLevyModel {
    inner: levysde::LevyModel,
}

#[pymethods]
impl PyLevyModel {
    #[staticmethod]
    #[pyo3(signature = (alpha, dim = 1))]
    fn isotropic_stable(alpha: f64, dim: usize) -> PyResult<Self> {
        wrap(levysde::LevyModel::isotropic_stable(alpha, dim))
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, m, dim = 1))]
    fn relativistic_stable(alpha: f64, m: f64, dim: usize) -> PyResult<Self> {
        wrap(levysde::LevyModel::relativistic_stable(alpha, m, dim))
    }

    #[staticmethod]
    fn tempered_stable(alpha: f64, m: f64) -> PyResult<Self> {
        wrap(levysde::LevyModel::tempered_stable(alpha, m))
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, m, dim = 1))]
    fn lamperti_stable(alpha: f64, m: f64, dim: usize) -> PyResult<Self> {
        wrap(levysde::LevyModel::lamperti_stable(alpha, m, dim))
    }

    #[staticmethod]
    fn truncated_stable(alpha: f64) -> PyResult<Self> {
        wrap(levysde::LevyModel::truncated_stable(alpha))
    }

    #[staticmethod]
    fn layered_stable(alpha: f64, lambda_tail: f64) -> PyResult<Self> {
        wrap(levysde::LevyModel::layered_stable(alpha, lambda_tail))
    }

    /// `subordinator` is `"stable"`, `"tempered_stable"` or `"lamperti"`.
    #[staticmethod]
    #[pyo3(signature = (subordinator, rho, m = None, dim = 1))]
    fn subordinated_bm(subordinator: &str, rho: f64, m: Option<f64>, dim: usize) -> PyResult<Self> {
        let need_m = || m.ok_or_else(|| PyValueError::new_err("this subordinator needs `m`"));
        let sub = match subordinator {
            "stable" => SubordinatorSpec::stable(rho),
            "tempered_stable" => SubordinatorSpec::tempered(rho, need_m()?),
            "lamperti" => SubordinatorSpec::lamperti(rho, need_m()?),
            other => return Err(PyValueError::new_err(format!("unknown subordinator `{other}`"))),
        }
        .map_err(err)?;
        wrap(levysde::LevyModel::subordinated_bm(sub, dim))
    }

    #[staticmethod]
    #[pyo3(signature = (dim = 1))]
    fn brownian_motion(dim: usize) -> PyResult<Self> {
        wrap(levysde::LevyModel::brownian_motion(dim))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family().name()
    }

    #[getter]
    fn gradient_index(&self) -> f64 {
        self.inner.gradient_index()
    }

    /// `(γ₀, γ₀ is open, γ∞)`
    fn moment_indices(&self) -> (f64, bool, f64) {
        let i = self.inner.moment_indices();
        (i.gamma0.value, i.gamma0.open, i.gamma_inf.value)
    }

    /// `ψ` at `|ξ| = r`.
    fn exponent(&self, r: f64) -> PyResult<f64> {
        radial_exponent(&self.inner, r).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("LevyModel({})", self.inner)
    }
}

fn wrap(m: levysde::Result<levysde::LevyModel>) -> PyResult<PyLevyModel> {
    m.map(|inner| PyLevyModel { inner }).map_err(err)
}

/// A drift `b(t, x)` from the catalog.
#[pyclass(name = "Drift", frozen)]
struct PyDrift {
    inner: DriftSpec,
}

#[pymethods]
impl PyDrift {
    #[staticmethod]
    #[pyo3(signature = (dim = 1))]
    fn zero(dim: usize) -> PyResult<Self> {
        drift(DriftSpec::zero(dim))
    }

    #[staticmethod]
    fn constant(value: Vec<f64>) -> PyResult<Self> {
        drift(DriftSpec::constant(value))
    }

    #[staticmethod]
    #[pyo3(signature = (amplitude = 1.0, frequency = 1.0, dim = 1))]
    fn cosine(amplitude: f64, frequency: f64, dim: usize) -> PyResult<Self> {
        drift(DriftSpec::cosine(amplitude, frequency, dim))
    }

    #[staticmethod]
    #[pyo3(signature = (beta, amplitude = 1.0, dim = 1))]
    fn rough_sine(beta: f64, amplitude: f64, dim: usize) -> PyResult<Self> {
        drift(DriftSpec::rough_sine(beta, amplitude, dim))
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    fn __call__(&self, t: f64, x: Vec<f64>) -> PyResult<Vec<f64>> {
        if x.len() != self.inner.dim() {
            return Err(PyValueError::new_err("x has the wrong dimension"));
        }
        let mut out = vec![0.0; x.len()];
        self.inner.eval(t, &x, &mut out);
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("Drift({})", self.inner.label())
    }
}

fn drift(d: levysde::Result<DriftSpec>) -> PyResult<PyDrift> {
    d.map(|inner| PyDrift { inner }).map_err(err)
}

/// `(ok, margin)` of the balance condition `2α − γ₀(1−β) > 2`.
#[pyfunction]
fn balance_check(alpha: f64, gamma0: f64, beta: f64) -> PyResult<(bool, f64)> {
    let b = models::balance_check(alpha, gamma0, beta).map_err(err)?;
    Ok((b.ok, b.margin))
}

/// `min{1, pβ/γ₀, pη}`
#[pyfunction]
fn predicted_rate(p: f64, beta: f64, eta: f64, gamma0: f64) -> PyResult<f64> {
    models::predicted_rate(p, beta, eta, gamma0).map(|r| r.rate).map_err(err)
}

/// `n` increments over `[0, horizon]`, one row per step.
#[pyfunction]
#[pyo3(signature = (model, horizon, n, seed, stream = 0))]
fn sample_increments(model: &PyLevyModel, horizon: f64, n: usize, seed: u64, stream: u64) -> PyResult<Vec<Vec<f64>>> {
    let sampler = IncrementSampler::new(&model.inner, horizon / n.max(1) as f64).map_err(err)?;
    let batch = sampler.sample(n, &mut RngStream::new(seed, stream)).map_err(err)?;
    Ok((0..batch.rows()).map(|i| batch.row(i).to_vec()).collect())
}

/// Euler–Maruyama states at the `n + 1` grid times.
#[pyfunction]
#[pyo3(signature = (model, drift, x0, horizon, n, seed, stream = 0))]
fn simulate(
    model: &PyLevyModel,
    drift: &PyDrift,
    x0: Vec<f64>,
    horizon: f64,
    n: usize,
    seed: u64,
    stream: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let grid = SimulationGrid::new(horizon, n).map_err(err)?;
    let sampler = IncrementSampler::new(&model.inner, grid.dt()).map_err(err)?;
    let batch = sampler.sample(n, &mut RngStream::new(seed, stream)).map_err(err)?;
    let path = em_path(&drift.inner, &x0, &grid, &batch).map_err(err)?;
    Ok((0..=n).map(|i| path.state(i).to_vec()).collect())
}

/// Monte Carlo strong-rate experiment; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (model, drift, p, n_list, n_ref, paths, seed, horizon = 1.0, x0 = None, tolerance = DEFAULT_TOLERANCE))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    model: &PyLevyModel,
    drift: &PyDrift,
    p: f64,
    n_list: Vec<usize>,
    n_ref: usize,
    paths: usize,
    seed: u64,
    horizon: f64,
    x0: Option<Vec<f64>>,
    tolerance: f64,
) -> PyResult<String> {
    let x0 = x0.unwrap_or_else(|| vec![0.0; model.inner.dim()]);
    let cfg = ExperimentConfig::new(model.inner, drift.inner.clone(), x0, horizon, p, n_list, n_ref, paths, seed);
    run(&cfg, tolerance).and_then(|r| r.to_json()).map_err(err)
}

/// `(x, p_t(x))` on `N` nodes of `[−R, R)`.
#[pyfunction]
fn density(model: &PyLevyModel, t: f64, half_width: f64, n: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let grid = SpaceGrid::new(half_width, n).map_err(err)?;
    let table = density_fft(&model.inner, t, grid).map_err(err)?;
    Ok((grid.nodes(), table.values))
}

/// `∫ |∂ₓ p_t|` on the given grid.
#[pyfunction]
fn gradient_l1(model: &PyLevyModel, t: f64, half_width: f64, n: usize) -> PyResult<f64> {
    let grid = SpaceGrid::new(half_width, n).map_err(err)?;
    density_fft(&model.inner, t, grid).map(|d| grad_l1_norm(&d)).map_err(err)
}

/// `(slope, ‖p_t′‖₁ per t, propagation bound holds)`.
#[pyfunction]
fn gradient_scaling(model: &PyLevyModel, t_list: Vec<f64>) -> PyResult<(f64, Vec<f64>, bool)> {
    let s = gradient_scaling_exponent(&model.inner, &t_list).map_err(err)?;
    let holds = s.propagation.iter().all(|c| c.holds);
    Ok((s.slope, s.grad_l1, holds))
}

/// Picard solve of `∂ₜu + Au + b·∇u = −g`, `u(T) = 0`; returns a JSON
/// summary including the Kolmogorov residual.
#[pyfunction]
#[pyo3(signature = (model, drift, source, horizon, force = false))]
fn kolmogorov(model: &PyLevyModel, drift: &PyDrift, source: &PyDrift, horizon: f64, force: bool) -> PyResult<String> {
    let opts = PicardOptions {
        force,
        ..PicardOptions::default()
    };
    let sol = picard_solve(&drift.inner, &source.inner, horizon, &model.inner, opts).map_err(err)?;
    let residual = kolmogorov_residual(&sol, &drift.inner, &source.inner, &model.inner).map_err(err)?;
    let summary = sol.summary_json().map_err(err)?;
    // append the residual as a last field
    let trimmed = summary.trim_end().trim_end_matches('}').trim_end();
    Ok(format!("{trimmed},\n  \"residual\": {residual:e}\n}}"))
}

#[pymodule]
#[pyo3(name = "levysde")]
fn levysde_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLevyModel>()?;
    m.add_class::<PyDrift>()?;
    m.add_function(wrap_pyfunction!(balance_check, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_rate, m)?)?;
    m.add_function(wrap_pyfunction!(sample_increments, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(density, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_l1, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(kolmogorov, m)?)?;
    Ok(())
}
