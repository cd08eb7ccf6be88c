use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use levysde::em::DriftSpec;
use levysde::harness::{run_experiment, ExperimentConfig};
use levysde::samplers::{read_batch, IncrementSampler};
use levysde::{LevyModel, RngStream};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levysde"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_config(dir: &Path, command: &str, text: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, text).unwrap();
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

const BROWNIAN_COS: &str = r#"
seed = 20240101

[model]
family = "brownian_motion"

[drift]
kind = "cosine"

[converge]
p = 2.0
n_list = [8, 16, 32, 64, 128, 256]
n_ref = 2048
paths = 2000
"#;

#[test]
fn check_prints_rate_and_passes_balance() {
    let o = run(&["check", "--family", "isotropic_stable", "--alpha", "1.5", "--beta", "0.5", "--p", "1", "--eta", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("rate         0.3333"), "{out}");
    assert!(out.contains("balance      pass"));
}

#[test]
fn check_fails_balance_with_exit_two() {
    let o = run(&["check", "--family", "isotropic_stable", "--alpha", "1.1", "--beta", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("balance      fail"));
}

#[test]
fn check_reports_infinite_big_jump_index_for_tempered() {
    let o = run(&["check", "--family", "tempered_stable", "--alpha", "1.5", "--m", "1", "--beta", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("gamma_inf    +inf"), "{}", stdout(&o));
}

#[test]
fn check_domain_error_exits_one() {
    let o = run(&["check", "--family", "isotropic_stable", "--alpha", "2.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn zero_drift_converge_is_degenerate_exact() {
    let dir = tempfile::tempdir().unwrap();
    let text = BROWNIAN_COS.replace("kind = \"cosine\"", "kind = \"zero\"").replace("2000", "100");
    let o = run_config(dir.path(), "converge", &text, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(dir.path(), "converge_report.json")["verdict"], "degenerate-exact");
}

#[test]
fn malformed_key_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = BROWNIAN_COS.replace("paths = 2000", "pathz = 2000");
    let o = run_config(dir.path(), "converge", &text, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("pathz"), "{}", stderr(&o));
}

#[test]
fn missing_seed_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = BROWNIAN_COS.replace("seed = 20240101", "");
    let o = run_config(dir.path(), "converge", &text, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn brownian_converge_matches_library_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(dir.path(), "converge", BROWNIAN_COS, &["--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(dir.path(), "converge_report.json");
    assert!(report["fit"]["slope"].as_f64().unwrap() >= 0.85);

    let exp = ExperimentConfig::new(
        LevyModel::brownian_motion(1).unwrap(),
        DriftSpec::cosine(1.0, 1.0, 1).unwrap(),
        vec![0.0],
        1.0,
        2.0,
        vec![8, 16, 32, 64, 128, 256],
        2048,
        2000,
        20240101,
    );
    let lib = run_experiment(&exp, 0.15).unwrap().to_json().unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("converge_report.json")).unwrap(), lib);
    let csv = fs::read_to_string(dir.path().join("converge_errors.csv")).unwrap();
    assert!(csv.starts_with("n,mean,stderr,predicted_line\n8,"));
    assert!(!csv.contains('\r'));
}

#[test]
fn seed_override_replaces_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let text = BROWNIAN_COS.replace("2000", "100");
    let o = run_config(dir.path(), "converge", &text, &["--seed-override", "99"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(dir.path(), "converge_report.json")["config"]["seed"], 99);
}

#[test]
fn stable_density_slope_in_json() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
seed = 1
[model]
family = "isotropic_stable"
alpha = 1.5
[density]
t_list = [0.05, 0.1, 0.2, 0.4, 0.8]
"#;
    let o = run_config(dir.path(), "density", text, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let slope = json(dir.path(), "density_scaling.json")["slope"].as_f64().unwrap();
    assert!((slope + 2.0 / 3.0).abs() < 0.01, "{slope}");
    assert!(dir.path().join("density_scaling.csv").exists());
}

const PICARD: &str = r#"
seed = 1
[model]
family = "isotropic_stable"
alpha = 1.5
[drift]
kind = "zero"
[kolmogorov]
horizon = 0.5
source = { kind = "cosine" }
"#;

#[test]
fn zero_drift_picard_has_one_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(dir.path(), "kolmogorov", PICARD, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = json(dir.path(), "kolmogorov_summary.json");
    assert_eq!(s["history"].as_array().unwrap().len(), 1);
    assert!(s["residual"].as_f64().unwrap() < 1e-4);
}

#[test]
fn unbalanced_picard_refuses_certification() {
    let dir = tempfile::tempdir().unwrap();
    let text = PICARD
        .replace("alpha = 1.5", "alpha = 1.2")
        .replace("kind = \"zero\"", "kind = \"rough_sine\"\nbeta = 0.1");
    let o = run_config(dir.path(), "kolmogorov", &text, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kappa"));
    let forced = text.replace("horizon = 0.5", "horizon = 0.5\nforce = true");
    let o = run_config(dir.path(), "kolmogorov", &forced, &[]);
    assert_eq!(o.status.code(), Some(2));
    let s = json(dir.path(), "kolmogorov_summary.json");
    assert!(s["kappa"].as_f64().unwrap() >= 1.0);
    assert!(s["certificate"].is_null());
}

#[test]
fn sample_dump_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
seed = 5
[model]
family = "isotropic_stable"
alpha = 1.7
dim = 2
[sample]
n = 32
stream = 3
"#;
    let o = run_config(dir.path(), "sample", text, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let model = LevyModel::isotropic_stable(1.7, 2).unwrap();
    let (batch, header) = read_batch(&model, fs::File::open(dir.path().join("increments.bin")).unwrap()).unwrap();
    assert_eq!((header.seed, header.stream_id), (5, 3));
    let lib = IncrementSampler::new(&model, 1.0 / 32.0)
        .unwrap()
        .sample(32, &mut RngStream::new(5, 3))
        .unwrap();
    assert_eq!(batch.values, lib.values);
    let csv = fs::read_to_string(dir.path().join("increments.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,dl_1,dl_2"));
    assert_eq!(csv.lines().count(), 33);
}
