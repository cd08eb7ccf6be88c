//! Run configuration files: TOML with one experiment per file.
//!
//! ```toml
//! seed = 42
//!
//! [model]
//! family = "isotropic_stable"
//! alpha = 1.5
//!
//! [drift]
//! kind = "cosine"
//!
//! [converge]
//! p = 1.0
//! n_list = [8, 16, 32, 64]
//! n_ref = 512
//! paths = 1000
//! ```

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use levysde::em::{DriftConfig, DriftMode};
use levysde::models::ModelConfig;
use levysde::samplers::EpsilonRule;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converge: Option<ConvergeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kolmogorov: Option<KolmogorovSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSection>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSection {
    /// Defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub horizon: f64,
    pub p: f64,
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    pub paths: usize,
    #[serde(default)]
    pub mode: DriftMode,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonRule>,
}

fn default_tolerance() -> f64 {
    levysde::harness::DEFAULT_TOLERANCE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    /// Defaults to the drift's declared exponent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "one")]
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub t_list: Vec<f64>,
    /// Also write `p_t`, `p_t′`, `p_t″` for every `t`.
    #[serde(default)]
    pub tables: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KolmogorovSection {
    pub horizon: f64,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_time_steps")]
    pub time_steps: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub force: bool,
    /// Defaults to the drift itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<DriftConfig>,
}

fn default_half_width() -> f64 {
    4.0 * PI
}
fn default_nodes() -> usize {
    256
}
fn default_time_steps() -> usize {
    128
}
fn default_max_iter() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-10
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleFormat {
    Binary,
    Csv,
    #[default]
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    #[serde(default = "one")]
    pub horizon: f64,
    pub n: usize,
    #[serde(default)]
    pub stream: u64,
    #[serde(default)]
    pub format: SampleFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonRule>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 7

[model]
family = "subordinated_bm"
subordinator = "tempered_stable"
rho = 0.8
m = 1.5
dim = 2

[drift]
kind = "rough_sine"
beta = 0.5

[converge]
x0 = [0.1, -0.2]
p = 1.0
n_list = [8, 16, 32]
n_ref = 256
paths = 200
mode = "time_varying"
epsilon = { rule = "fixed", epsilon = 0.01 }

[check]
beta = 0.5
p = 2.0

[density]
t_list = [0.1, 0.2, 0.4, 0.8]

[kolmogorov]
horizon = 0.5
force = true
source = { kind = "cosine", amplitude = 2.0 }

[sample]
n = 16
format = "csv"
"#;

    #[test]
    fn full_config_round_trips() {
        let cfg = RunConfig::parse(FULL).unwrap();
        assert_eq!(cfg.converge.as_ref().unwrap().mode, DriftMode::TimeVarying);
        assert_eq!(cfg.kolmogorov.as_ref().unwrap().nodes, 256);
        let again = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = FULL.replace("n_ref = 256", "n_ref = 256\nn_reff = 3");
        let err = RunConfig::parse(&text).unwrap_err();
        assert!(err.contains("n_reff"), "{err}");
        let text = FULL.replace("seed = 7", "seed = 7\ncolour = 1");
        assert!(RunConfig::parse(&text).unwrap_err().contains("colour"));
    }

    #[test]
    fn seed_is_mandatory() {
        let text = FULL.replace("seed = 7", "");
        let err = RunConfig::parse(&text).unwrap_err();
        assert!(err.contains("seed"), "{err}");
    }
}
