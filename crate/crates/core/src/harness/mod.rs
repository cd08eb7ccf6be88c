//! Monte Carlo estimation of `E[sup_{t≤T} |X^{ref}_t − X^{(n)}_t|^p]` over a
//! ladder of step counts, log-log rate fitting and comparison with the
//! predicted exponent.

mod inverse_moment;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use inverse_moment::{inverse_chi_moment, inverse_moment_scaling, InverseMomentReport, InverseMomentRow};

use crate::diagnostics::mean_stderr;
use crate::em::{coupled_sup_errors, DriftMode, DriftSpec};
use crate::error::{ensure, Error, Result};
use crate::models::{predict_for_model, LevyModel, ModelConfig, RatePrediction};
use crate::rng::RngStream;
use crate::samplers::{EpsilonRule, IncrementSampler, TruncationInfo};

/// Replaces the error functional by `constant · n^{−rate}` on every path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Synthetic {
    pub constant: f64,
    pub rate: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub model: LevyModel,
    pub drift: DriftSpec,
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub p: f64,
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    pub paths: usize,
    pub seed: u64,
    pub mode: DriftMode,
    pub epsilon_rule: EpsilonRule,
    pub synthetic: Option<Synthetic>,
}

impl ExperimentConfig {
    /// Experiment with frozen drift, the default ε rule and no injection.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: LevyModel,
        drift: DriftSpec,
        x0: Vec<f64>,
        horizon: f64,
        p: f64,
        n_list: Vec<usize>,
        n_ref: usize,
        paths: usize,
        seed: u64,
    ) -> Self {
        Self {
            model,
            drift,
            x0,
            horizon,
            p,
            n_list,
            n_ref,
            paths,
            seed,
            mode: DriftMode::Frozen,
            epsilon_rule: EpsilonRule::default(),
            synthetic: None,
        }
    }

    /// Checks the invariants and returns the moment order actually used with
    /// any warnings (`p` is clamped to `γ∞`).
    pub fn validate(&self) -> Result<(f64, Vec<String>)> {
        let mut warnings = Vec::new();
        ensure(self.horizon > 0.0 && self.horizon.is_finite(), "T", self.horizon, "(0, ∞)")?;
        ensure(self.p > 0.0 && self.p.is_finite(), "p", self.p, "(0, ∞)")?;
        ensure(self.paths >= 100, "M", self.paths as f64, "≥ 100")?;
        if self.n_list.len() < 3 {
            return Err(Error::Shape("n_list needs at least 3 step counts".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Shape("n_list must be strictly ascending".into()));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n == 0 || self.n_ref % n != 0) {
            return Err(Error::Shape(format!("n_ref = {} is not divisible by {n}", self.n_ref)));
        }
        if self.x0.len() != self.model.dim() || self.drift.dim() != self.model.dim() {
            return Err(Error::Shape(format!(
                "x0 has dimension {}, drift {}, model {}",
                self.x0.len(),
                self.drift.dim(),
                self.model.dim()
            )));
        }
        let max_n = *self.n_list.last().unwrap();
        if self.n_ref < 8 * max_n {
            warnings.push(format!("n_ref = {} is below 8 × max(n_list) = {}", self.n_ref, 8 * max_n));
        }
        if self.n_list[0] < 8 {
            warnings.push("step counts below 8 are dominated by pre-asymptotic constants".into());
        }
        let gamma_inf = self.model.moment_indices().gamma_inf;
        let mut p = self.p;
        if p > gamma_inf.value || (gamma_inf.open && p >= gamma_inf.value) {
            warnings.push(format!(
                "p = {p} exceeds the big-jump moment index γ∞ = {}; clamped",
                gamma_inf.value
            ));
            p = gamma_inf.value;
        }
        Ok((p, warnings))
    }
}

/// Per-step-count Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub p: f64,
    pub rows: Vec<ErrorRow>,
    pub paths: usize,
    /// Paths dropped because the state became non-finite.
    pub flagged: usize,
    pub truncation: Option<TruncationInfo>,
    pub warnings: Vec<String>,
}

/// Estimates `E[sup |X^{ref} − X^{(n)}|^p]` for every `n` in the ladder.
///
/// Path `m` draws its reference increments from stream `(seed, m)`; per-path
/// results are collected in path order and reduced with a fixed tree, so the
/// table does not depend on the number of worker threads.
pub fn mc_strong_error(config: &ExperimentConfig) -> Result<ErrorTable> {
    let (p, warnings) = config.validate()?;
    let m = config.paths;
    if let Some(s) = config.synthetic {
        let rows = config
            .n_list
            .iter()
            .map(|&n| {
                let v = vec![s.constant * (n as f64).powf(-s.rate); m];
                let (mean, stderr) = mean_stderr(&v);
                ErrorRow { n, mean, stderr }
            })
            .collect();
        return Ok(ErrorTable {
            p,
            rows,
            paths: m,
            flagged: 0,
            truncation: None,
            warnings,
        });
    }
    let sampler = IncrementSampler::with_rule(
        &config.model,
        config.horizon / config.n_ref as f64,
        config.epsilon_rule,
    )?;
    let per_path: Vec<Option<Vec<f64>>> = (0..m as u64)
        .into_par_iter()
        .map(|path| -> Result<Option<Vec<f64>>> {
            let mut rng = RngStream::new(config.seed, path);
            let batch = sampler.sample(config.n_ref, &mut rng)?;
            match coupled_sup_errors(
                &config.drift,
                &config.x0,
                config.horizon,
                config.n_ref,
                &config.n_list,
                &batch,
                config.mode,
            ) {
                Ok(sups) => Ok(Some(sups.iter().map(|e| e.powf(p)).collect())),
                Err(Error::Overflow { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let flagged = per_path.iter().filter(|r| r.is_none()).count();
    if flagged as f64 > 1e-3 * m as f64 {
        return Err(Error::Aborted(format!("{flagged} of {m} paths overflowed")));
    }
    let kept: Vec<&Vec<f64>> = per_path.iter().flatten().collect();
    let rows = config
        .n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let col: Vec<f64> = kept.iter().map(|r| r[k]).collect();
            let (mean, stderr) = mean_stderr(&col);
            ErrorRow { n, mean, stderr }
        })
        .collect();
    Ok(ErrorTable {
        p,
        rows,
        paths: m,
        flagged,
        truncation: sampler.truncation(),
        warnings,
    })
}

/// Least-squares fit of `log mean = intercept + slope · (−log n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Twice the standard error of the slope.
    pub half_width: f64,
    pub residual: f64,
}

/// Returns `None` when some mean is not positive (the degenerate exact case).
pub fn fit_rate(n_list: &[usize], means: &[f64]) -> Result<Option<RateFit>> {
    if n_list.len() != means.len() {
        return Err(Error::Shape("n_list and means differ in length".into()));
    }
    if means.len() < 3 {
        return Err(Error::Shape("a rate fit needs at least 3 points".into()));
    }
    if means.iter().any(|&m| !(m > 0.0)) {
        return Ok(None);
    }
    let x: Vec<f64> = n_list.iter().map(|&n| -(n as f64).ln()).collect();
    let y: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let se = if x.len() > 2 { (rss / (k - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(Some(RateFit {
        slope,
        intercept,
        half_width: 2.0 * se,
        residual: rss.sqrt(),
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Consistent,
    FasterThanBound,
    ViolatesBound,
    DegenerateExact,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "consistent",
            Verdict::FasterThanBound => "faster-than-bound",
            Verdict::ViolatesBound => "violates-bound",
            Verdict::DegenerateExact => "degenerate-exact",
        })
    }
}

pub const DEFAULT_TOLERANCE: f64 = 0.15;

/// The bound is one-sided: a fitted rate above the prediction is allowed.
pub fn compare_to_theory(fitted: f64, predicted: f64, tol: f64) -> Verdict {
    if fitted < predicted - tol {
        Verdict::ViolatesBound
    } else if fitted > predicted + tol {
        Verdict::FasterThanBound
    } else {
        Verdict::Consistent
    }
}

/// Echo of the experiment inputs as they appear in the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub model: ModelConfig,
    pub drift: String,
    pub beta: f64,
    pub eta: f64,
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub p: f64,
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    pub paths: usize,
    pub seed: u64,
    pub mode: DriftMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: ConfigEcho,
    pub table: ErrorTable,
    pub fit: Option<RateFit>,
    pub predicted: RatePrediction,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl ConvergenceReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    /// `n,mean,stderr,predicted_line`; the predicted line has the predicted
    /// slope and passes through the first estimate.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "n,mean,stderr,predicted_line")?;
        let first = self.table.rows.first();
        for row in &self.table.rows {
            let line = first.map_or(f64::NAN, |f| {
                f.mean * (row.n as f64 / f.n as f64).powf(-self.predicted.rate)
            });
            writeln!(w, "{},{},{},{}", row.n, row.mean, row.stderr, line)?;
        }
        Ok(())
    }
}

/// Runs the Monte Carlo ladder, fits the rate and compares with the model's
/// predicted exponent.
pub fn run_experiment(config: &ExperimentConfig, tol: f64) -> Result<ConvergenceReport> {
    let table = mc_strong_error(config)?;
    let predicted = predict_for_model(&config.model, table.p, config.drift.beta(), config.drift.eta())?;
    let ns: Vec<usize> = table.rows.iter().map(|r| r.n).collect();
    let means: Vec<f64> = table.rows.iter().map(|r| r.mean).collect();
    let fit = if config.drift.is_zero() && config.synthetic.is_none() {
        None
    } else {
        fit_rate(&ns, &means)?
    };
    let verdict = match fit {
        Some(f) => compare_to_theory(f.slope, predicted.rate, tol),
        None => Verdict::DegenerateExact,
    };
    Ok(ConvergenceReport {
        config: ConfigEcho {
            model: config.model.to_config(),
            drift: config.drift.label().to_string(),
            beta: config.drift.beta(),
            eta: config.drift.eta(),
            x0: config.x0.clone(),
            horizon: config.horizon,
            p: table.p,
            n_list: config.n_list.clone(),
            n_ref: config.n_ref,
            paths: config.paths,
            seed: config.seed,
            mode: config.mode,
        },
        table,
        fit,
        predicted,
        tolerance: tol,
        verdict,
    })
}
