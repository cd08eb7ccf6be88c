//! `levysde` command-line front end.
//!
//! Exit codes: 0 on success, 2 when a theoretical bound or the balance
//! condition fails, 1 on any operational error.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use levysde::em::{DriftConfig, DriftSpec};
use levysde::harness::{run_experiment, ExperimentConfig, Verdict};
use levysde::models::{balance_check, predict_for_model, singularity_exponent, MomentIndex, ModelConfig};
use levysde::samplers::{write_batch, IncrementSampler};
use levysde::spectral::{
    density_fft, gradient_scaling_exponent, kolmogorov_residual, picard_solve, PicardOptions,
    SpaceGrid,
};
use levysde::{Error, LevyModel, RngStream};

use config::{RunConfig, SampleFormat};

#[derive(Parser, Debug)]
#[command(name = "levysde", version, about = "Lévy-driven SDE simulation and verification")]
struct Cli {
    /// Worker threads for Monte Carlo runs (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Directory for report files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Replaces the seed given in the configuration.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print moment indices, the balance condition and the predicted rate.
    Check(CheckArgs),
    /// Estimate the strong convergence rate by Monte Carlo.
    Converge(ConfigArg),
    /// Gradient-norm scaling of transition densities.
    Density(ConfigArg),
    /// Solve the backward Kolmogorov equation by Picard iteration.
    Kolmogorov(ConfigArg),
    /// Dump increments of the driving process.
    Sample(ConfigArg),
}

#[derive(Args, Debug)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Read model, drift and `[check]` from a file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    lambda_tail: Option<f64>,
    #[arg(long)]
    subordinator: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
}

enum Failure {
    /// A bound or the balance condition failed.
    Violation(String),
    Operational(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Operational(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Operational(e.to_string())
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Self {
        Failure::Operational(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Converge(a) => load(&cli, &a.config).and_then(|c| cmd_converge(&cli, &c)),
        Command::Density(a) => load(&cli, &a.config).and_then(|c| cmd_density(&cli, &c)),
        Command::Kolmogorov(a) => load(&cli, &a.config).and_then(|c| cmd_kolmogorov(&cli, &c)),
        Command::Sample(a) => load(&cli, &a.config).and_then(|c| cmd_sample(&cli, &c)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
        Err(Failure::Operational(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load(cli: &Cli, path: &Path) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed_override {
        cfg.seed = seed;
    }
    write_text(cli, "config_echo.toml", &cfg.to_toml())?;
    Ok(cfg)
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, Failure> {
    s.as_ref()
        .ok_or_else(|| Failure::Operational(format!("configuration has no [{name}] section")))
}

fn out_file(cli: &Cli, name: &str) -> Result<BufWriter<File>, Failure> {
    fs::create_dir_all(&cli.out_dir)?;
    Ok(BufWriter::new(File::create(cli.out_dir.join(name))?))
}

fn write_text(cli: &Cli, name: &str, text: &str) -> Outcome {
    let mut f = out_file(cli, name)?;
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

fn json<T: Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::Operational(e.to_string()))
}

fn drift_for(cfg: &Option<DriftConfig>, dim: usize) -> Result<DriftSpec, Failure> {
    match cfg {
        Some(d) => Ok(DriftSpec::from_config(d, dim)?),
        None => Err(Failure::Operational("configuration has no [drift] section".into())),
    }
}

fn show_index(i: MomentIndex) -> String {
    if i.value.is_infinite() {
        "+inf".into()
    } else if i.open {
        format!("{} (open)", i.value)
    } else {
        format!("{}", i.value)
    }
}

fn cmd_check(args: &CheckArgs) -> Outcome {
    let file = match &args.config {
        Some(p) => Some(RunConfig::load(p)?),
        None => None,
    };
    let mut model_cfg = file.as_ref().map(|c| c.model.clone()).unwrap_or_default();
    let set = |slot: &mut Option<f64>, v: Option<f64>| {
        if v.is_some() {
            *slot = v;
        }
    };
    if let Some(f) = &args.family {
        model_cfg.family = f.clone();
    }
    set(&mut model_cfg.alpha, args.alpha);
    set(&mut model_cfg.m, args.m);
    set(&mut model_cfg.rho, args.rho);
    set(&mut model_cfg.lambda_tail, args.lambda_tail);
    if args.subordinator.is_some() {
        model_cfg.subordinator = args.subordinator.clone();
    }
    if args.dim.is_some() {
        model_cfg.dim = args.dim;
    }
    if model_cfg == ModelConfig::default() {
        return Err(Failure::Operational("no model given (use --config or --family)".into()));
    }
    let model = LevyModel::try_from(&model_cfg)?;
    let section = file.as_ref().and_then(|c| c.check.clone());
    let drift_beta = match file.as_ref().and_then(|c| c.drift.as_ref()) {
        Some(d) => Some(DriftSpec::from_config(d, model.dim())?.beta()),
        None => None,
    };
    let beta = args
        .beta
        .or(section.as_ref().and_then(|s| s.beta))
        .or(drift_beta)
        .unwrap_or(1.0);
    let eta = args.eta.or(section.as_ref().map(|s| s.eta)).unwrap_or(1.0);
    let p = args.p.or(section.as_ref().map(|s| s.p)).unwrap_or(1.0);

    let idx = model.moment_indices();
    let alpha = model.gradient_index();
    let gamma0 = idx.gamma0.value;
    let balance = balance_check(alpha, gamma0, beta)?;
    let pred = predict_for_model(&model, p, beta, eta)?;
    println!("model        {model}");
    println!("alpha        {alpha}");
    println!("gamma0       {}", show_index(idx.gamma0));
    println!("gamma_inf    {}", show_index(idx.gamma_inf));
    println!("beta         {beta}");
    println!("eta          {eta}");
    println!("p            {p}");
    println!("kappa        {:.4}", singularity_exponent(alpha, gamma0, beta));
    println!("margin       {:.4}", balance.margin);
    println!(
        "rate         {:.4}{}",
        pred.rate,
        if pred.limit { " (supremum, not attained)" } else { "" }
    );
    if balance.ok {
        println!("balance      pass");
        Ok(())
    } else {
        println!("balance      fail");
        Err(Failure::Violation("balance condition fails".into()))
    }
}

fn cmd_converge(cli: &Cli, cfg: &RunConfig) -> Outcome {
    let conv = section(&cfg.converge, "converge")?;
    let model = LevyModel::try_from(&cfg.model)?;
    let drift = drift_for(&cfg.drift, model.dim())?;
    let mut exp = ExperimentConfig::new(
        model,
        drift,
        conv.x0.clone().unwrap_or_else(|| vec![0.0; model.dim()]),
        conv.horizon,
        conv.p,
        conv.n_list.clone(),
        conv.n_ref,
        conv.paths,
        cfg.seed,
    );
    exp.mode = conv.mode;
    if let Some(rule) = conv.epsilon {
        exp.epsilon_rule = rule;
    }
    eprintln!(
        "converge: {model}, drift {}, M = {}, n = {:?}, n_ref = {}",
        exp.drift.label(),
        exp.paths,
        exp.n_list,
        exp.n_ref
    );
    let report = run_experiment(&exp, conv.tolerance)?;
    write_text(cli, "converge_report.json", &report.to_json()?)?;
    let mut csv = out_file(cli, "converge_errors.csv")?;
    report.write_csv(&mut csv)?;
    csv.flush()?;
    for w in &report.table.warnings {
        eprintln!("warning: {w}");
    }
    match report.fit {
        Some(f) => println!(
            "fitted {:.4} ± {:.4}, predicted {:.4}: {}",
            f.slope, f.half_width, report.predicted.rate, report.verdict
        ),
        None => println!("predicted {:.4}: {}", report.predicted.rate, report.verdict),
    }
    if report.verdict == Verdict::ViolatesBound {
        return Err(Failure::Violation("fitted rate violates the predicted bound".into()));
    }
    Ok(())
}

fn cmd_density(cli: &Cli, cfg: &RunConfig) -> Outcome {
    let sec = section(&cfg.density, "density")?;
    let model = LevyModel::try_from(&cfg.model)?;
    eprintln!("density: {model}, t = {:?}", sec.t_list);
    let s = gradient_scaling_exponent(&model, &sec.t_list)?;
    write_text(cli, "density_scaling.json", &json(&s)?)?;
    let mut csv = out_file(cli, "density_scaling.csv")?;
    writeln!(csv, "t,grad_l1,second_l1_at_2t,grad_l1_squared,propagation_holds")?;
    for (i, c) in s.propagation.iter().enumerate() {
        writeln!(
            csv,
            "{},{},{},{},{}",
            c.t, s.grad_l1[i], c.second_at_2t, c.grad_squared, c.holds
        )?;
    }
    csv.flush()?;
    if sec.tables {
        for (i, &t) in sec.t_list.iter().enumerate() {
            let table = density_fft(&model, t, s.grid)?;
            let mut f = out_file(cli, &format!("density_table_{i}.csv"))?;
            table.write_csv(&mut f)?;
            f.flush()?;
        }
    }
    println!(
        "slope {:.5}, grid R = {} N = {}, tail mass ≤ {:.1e}",
        s.slope,
        s.grid.half_width(),
        s.grid.len(),
        s.tail_mass
    );
    if s.propagation.iter().any(|c| !c.holds) {
        return Err(Failure::Violation("second-derivative propagation bound fails".into()));
    }
    Ok(())
}

fn cmd_kolmogorov(cli: &Cli, cfg: &RunConfig) -> Outcome {
    let sec = section(&cfg.kolmogorov, "kolmogorov")?;
    let model = LevyModel::try_from(&cfg.model)?;
    let b = drift_for(&cfg.drift, 1)?;
    let g = match &sec.source {
        Some(s) => DriftSpec::from_config(s, 1)?,
        None => b.clone(),
    };
    let opts = PicardOptions {
        grid: SpaceGrid::new(sec.half_width, sec.nodes)?,
        time_steps: sec.time_steps,
        max_iter: sec.max_iter,
        tol: sec.tol,
        force: sec.force,
        ..PicardOptions::default()
    };
    eprintln!("kolmogorov: {model}, drift {}, T = {}", b.label(), sec.horizon);
    let sol = match picard_solve(&b, &g, sec.horizon, &model, opts) {
        Err(Error::Domain { name: "kappa", value, .. }) => {
            return Err(Failure::Violation(format!(
                "balance condition fails: kappa = {value:.4} ≥ 1 (set force = true to run uncertified)"
            )))
        }
        other => other?,
    };
    let residual = kolmogorov_residual(&sol, &b, &g, &model)?;
    let mut summary: serde_json::Value =
        serde_json::from_str(&sol.summary_json()?).map_err(|e| Failure::Operational(e.to_string()))?;
    summary["residual"] = serde_json::json!(residual);
    write_text(cli, "kolmogorov_summary.json", &json(&summary)?)?;
    let mut csv = out_file(cli, "kolmogorov_solution.csv")?;
    sol.write_csv(&mut csv)?;
    csv.flush()?;
    println!(
        "T = {} ({} halvings), {} iterates, residual {:.2e}, kappa {:.4}",
        sol.horizon,
        sol.halvings,
        sol.history.len(),
        residual,
        sol.kappa
    );
    match sol.certificate {
        Some(c) => {
            println!("certificate c(T) = {:.4}", c.constant);
            Ok(())
        }
        None => Err(Failure::Violation(format!(
            "kappa = {:.4} ≥ 1: certification refused",
            sol.kappa
        ))),
    }
}

fn cmd_sample(cli: &Cli, cfg: &RunConfig) -> Outcome {
    let sec = section(&cfg.sample, "sample")?;
    let model = LevyModel::try_from(&cfg.model)?;
    if sec.n == 0 {
        return Err(Failure::Operational("[sample] n must be positive".into()));
    }
    let dt = sec.horizon / sec.n as f64;
    let sampler = match sec.epsilon {
        Some(rule) => IncrementSampler::with_rule(&model, dt, rule)?,
        None => IncrementSampler::new(&model, dt)?,
    };
    let mut rng = RngStream::new(cfg.seed, sec.stream);
    let batch = sampler.sample(sec.n, &mut rng)?;
    if matches!(sec.format, SampleFormat::Binary | SampleFormat::Both) {
        let mut f = out_file(cli, "increments.bin")?;
        write_batch(&batch, cfg.seed, sec.stream, &mut f)?;
        f.flush()?;
    }
    if matches!(sec.format, SampleFormat::Csv | SampleFormat::Both) {
        let mut f = out_file(cli, "increments.csv")?;
        let d = model.dim();
        let header: Vec<String> = (1..=d).map(|i| format!("dl_{i}")).collect();
        writeln!(f, "t,{}", header.join(","))?;
        for i in 0..batch.rows() {
            let row: Vec<String> = batch.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(f, "{},{}", (i + 1) as f64 * dt, row.join(","))?;
        }
        f.flush()?;
    }
    println!("{} increments of {model} with dt = {dt}", sec.n);
    Ok(())
}
