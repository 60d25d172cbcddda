//! Command-line front end: config assembly, dispatch, and artifact output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;

use crate::certifier::{certify_all, certify_kato, SweepSpec};
use crate::config::{config_error, ExperimentConfig, Subcommand, CONFIG_KEYS, SUBCOMMANDS};
use crate::decaylab::{
    difference_experiment, kato_experiment, ledger_csv, ledger_experiment, persistence_experiment,
    DecayReport, ExperimentSetup, InitialData, LedgerOptions,
};
use crate::error::{Error, Result};
use crate::kernel::{fit_decay_envelope, predicted_right_rate, KernelTable};
use crate::solver::{checkpoint_csv, DEFAULT_SENTINEL};
use crate::weights::{PiecewiseWeight, WeightParams};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    ConfigError = 1,
    CertificationFailure = 2,
    NumericalDefect = 3,
}

impl Status {
    pub fn of(e: &Error) -> Status {
        match e {
            Error::InvalidParameter { .. } | Error::Config { .. } | Error::KernelOutOfWindow { .. } => {
                Status::ConfigError
            }
            Error::NumericalDefect(_) | Error::IllConditionedFit(_) | Error::Wraparound { .. } => {
                Status::NumericalDefect
            }
        }
    }
}

/// Relative ledger residual accepted on the linear flow.
pub const LEDGER_LINEAR_TOLERANCE: f64 = 1e-6;
/// Relative ledger residual accepted with a nonlinearity.
pub const LEDGER_NONLINEAR_TOLERANCE: f64 = 1e-4;

/// Files and fitted constants of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    /// `(file name, contents)`.
    pub files: Vec<(String, String)>,
    pub results: Vec<(String, String)>,
    pub pass: bool,
}

impl Artifacts {
    fn result(&mut self, key: impl Into<String>, value: impl ToString) {
        self.results.push((key.into(), value.to_string()));
    }

    fn report(&mut self, name: String, r: &DecayReport) {
        for (k, v) in r.summary() {
            if k != "kind" && k != "preset" {
                self.result(format!("{name}.{k}"), v);
            }
        }
        self.files.push((format!("{name}.csv"), r.to_csv()));
    }
}

fn setup(c: &ExperimentConfig) -> Result<ExperimentSetup> {
    Ok(ExperimentSetup {
        l: c.l,
        m: c.m,
        dt: c.dt,
        t_final: c.t_final,
        cadence: c.cadence_or_default(),
        preset: c.model()?,
        dealias: None,
        sentinel: Some(DEFAULT_SENTINEL),
    })
}

fn data(key: &str, text: &str) -> Result<InitialData> {
    text.parse().map_err(|e: Error| config_error(key, e.to_string()))
}

fn weights_check(c: &ExperimentConfig) -> Artifacts {
    let sweep = SweepSpec {
        x_step: c.x_step,
        t_step: c.t_step,
        t_max: c.t_final,
        ..Default::default()
    };
    let mut report = certify_all(&c.a0, &c.epsilon, &c.n, &sweep);
    let betas: Vec<f64> = c.beta.iter().copied().filter(|&b| b > 0.0).collect();
    if !betas.is_empty() {
        let xs: Vec<f64> = (0..=1600).map(|i| -40.0 + i as f64 * 0.05).collect();
        for &eps in &c.epsilon {
            report.merge(certify_kato(&betas, &c.delta, &xs, eps));
        }
    }
    let mut a = Artifacts {
        pass: report.all_pass(),
        ..Default::default()
    };
    a.result("sweep", &report.sweep);
    let f = &report.fitted;
    let named = [("c0", f.c0), ("c0_tilde", f.c0_tilde), ("kato_c0", f.kato_c0), ("bridge_c", f.bridge_c)];
    for (k, v) in named {
        if let Some(v) = v {
            a.result(k, format!("{v:e}"));
        }
    }
    for (j, v) in f.cj.iter().enumerate() {
        if let Some(v) = v {
            a.result(format!("c{}", j + 1), format!("{v:e}"));
        }
    }
    a.result("verdicts", report.verdicts.len());
    a.result("failures", report.failures().count());
    for (i, d) in report.defects.iter().enumerate() {
        a.result(format!("defect{i}"), d);
    }
    a.files.push(("weights-check.csv".into(), report.to_csv()));
    a
}

fn kernel(c: &ExperimentConfig) -> Result<Artifacts> {
    let table = KernelTable::uniform(c.xmin, c.xmax, c.xstep, c.j)?;
    let mut a = Artifacts {
        pass: table.values.iter().all(|v| v.is_finite()),
        ..Default::default()
    };
    a.result("samples", table.xs.len());
    match fit_decay_envelope(&table) {
        Ok(fit) => {
            a.result("right_exponent", fit.right_exponent);
            a.result("right_rate", fit.right_rate);
            a.result("left_exponent", fit.left_exponent);
            a.result("right_rms", format!("{:e}", fit.right_rms));
            a.result("left_rms", format!("{:e}", fit.left_rms));
            a.result("left_maxima", fit.left_maxima);
            if c.j == 2 {
                a.result("predicted_right_rate", predicted_right_rate());
            }
        }
        Err(e) => a.result("fit", format!("unavailable: {e}")),
    }
    a.files.push(("kernel.csv".into(), table.to_csv()));
    Ok(a)
}

fn solve(c: &ExperimentConfig) -> Result<Artifacts> {
    let s = setup(c)?;
    let u0 = data("data", &c.data)?;
    let traj = s.run(c.m, std::slice::from_ref(&u0))?.remove(0);
    let mut series = String::from("t,mass,l2_squared,boundary_fraction\n");
    for f in &traj.samples {
        let _ = writeln!(
            series,
            "{},{:e},{:e},{:e}",
            f.t,
            f.mass(),
            f.l2_squared(),
            f.boundary_fraction()
        );
    }
    let first = &traj.samples[0];
    let last = traj.samples.last().expect("a trajectory holds its initial sample");
    let drift = |a: f64, b: f64| (b - a).abs() / a.abs().max(f64::MIN_POSITIVE);
    let mut a = Artifacts {
        pass: last.is_finite(),
        ..Default::default()
    };
    a.result("dt", format!("{:e}", traj.dt));
    a.result("samples", traj.samples.len());
    a.result("mass_drift", format!("{:e}", (last.mass() - first.mass()).abs()));
    a.result("l2_drift", format!("{:e}", drift(first.l2_squared(), last.l2_squared())));
    for (i, w) in traj.warnings.iter().enumerate() {
        a.result(format!("warning{i}"), w);
    }
    a.files.push(("solve.csv".into(), series));
    a.files.push((
        "checkpoint.csv".into(),
        checkpoint_csv(last, &s.preset.name, &s.preset.spec),
    ));
    Ok(a)
}

fn persistence(c: &ExperimentConfig) -> Result<Artifacts> {
    let s = setup(c)?;
    let u0 = data("data", &c.data)?;
    let mut a = Artifacts {
        pass: true,
        ..Default::default()
    };
    for &a0 in &c.a0 {
        for &eps in &c.epsilon {
            let r = persistence_experiment(&s, &u0, a0, eps)?;
            a.pass &= r.pass;
            a.report(format!("persistence_a0_{a0}_eps_{eps}"), &r);
        }
    }
    Ok(a)
}

fn difference(c: &ExperimentConfig) -> Result<Artifacts> {
    let s = setup(c)?;
    let u1 = data("data", &c.data)?;
    let u2 = match &c.data2 {
        Some(t) => data("data2", t)?,
        None => u1.clone(),
    };
    let mut a = Artifacts {
        pass: true,
        ..Default::default()
    };
    for &a0 in &c.a0 {
        for &eps in &c.epsilon {
            let r = difference_experiment(&s, &u1, &u2, a0, eps)?;
            a.pass &= r.pass;
            a.report(format!("difference_a0_{a0}_eps_{eps}"), &r);
        }
    }
    Ok(a)
}

fn kato(c: &ExperimentConfig) -> Result<Artifacts> {
    let s = setup(c)?;
    let u0 = data("data", &c.data)?;
    if c.beta.is_empty() {
        return Err(config_error("beta", "needs at least one value"));
    }
    let mut a = Artifacts {
        pass: true,
        ..Default::default()
    };
    for &beta in &c.beta {
        let r = kato_experiment(&s, &u0, beta)?;
        a.pass &= r.pass;
        a.report(format!("kato_beta_{beta}"), &r);
    }
    Ok(a)
}

fn ledger(c: &ExperimentConfig) -> Result<Artifacts> {
    let s = setup(c)?;
    let u0 = data("data", &c.data)?;
    let params = WeightParams::new(c.a0[0], c.epsilon[0], c.n[0])?;
    let w = PiecewiseWeight::new(params)?;
    let options = LedgerOptions {
        epsilons: c.epsilon.clone(),
        ..Default::default()
    };
    let (traj, samples) = ledger_experiment(&s, &u0, &w, &options)?;
    let worst = samples.iter().map(|s| s.relative_residual).fold(0.0, f64::max);
    let young = samples.iter().all(|s| s.young.iter().all(|y| y.holds));
    let bound = samples.iter().all(|s| s.bound_holds);
    let tolerance = if s.preset.spec.is_zero() {
        LEDGER_LINEAR_TOLERANCE
    } else {
        LEDGER_NONLINEAR_TOLERANCE
    };
    let mut a = Artifacts {
        pass: worst < tolerance && young && bound,
        ..Default::default()
    };
    a.result("weight", format!("a0={} epsilon={} N={}", c.a0[0], c.epsilon[0], c.n[0]));
    a.result("dt", format!("{:e}", traj.dt));
    a.result("samples", samples.len());
    a.result("max_relative_residual", format!("{worst:e}"));
    a.result("tolerance", format!("{tolerance:e}"));
    a.result("young_holds", young);
    a.result("bound_holds", bound);
    a.files.push(("ledger.csv".into(), ledger_csv(&samples)));
    Ok(a)
}

/// Validates `c` and dispatches to the owning module.
pub fn execute(c: &ExperimentConfig) -> Result<Artifacts> {
    c.validate()?;
    match c.subcommand {
        Subcommand::WeightsCheck => Ok(weights_check(c)),
        Subcommand::Kernel => kernel(c),
        Subcommand::Solve => solve(c),
        Subcommand::Persistence => persistence(c),
        Subcommand::Difference => difference(c),
        Subcommand::Kato => kato(c),
        Subcommand::Ledger => ledger(c),
    }
}

/// Config echo, then `result.*` lines, then `run.*` lines. The manifest is
/// itself a valid config.
pub fn manifest(c: &ExperimentConfig, outcome: &Result<Artifacts>, status: Status) -> String {
    let mut out = c.to_text();
    if let Ok(a) = outcome {
        for (k, v) in &a.results {
            let _ = writeln!(out, "result.{k} = {v}");
        }
        let names: Vec<&str> = a.files.iter().map(|f| f.0.as_str()).collect();
        let _ = writeln!(out, "run.files = {}", names.join(","));
        let _ = writeln!(out, "run.pass = {}", a.pass);
    }
    if let Err(e) = outcome {
        let _ = writeln!(out, "run.error = {e}");
    }
    let _ = writeln!(out, "run.status = {}", status as i32);
    let _ = writeln!(out, "run.version = {}", env!("CARGO_PKG_VERSION"));
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let _ = writeln!(out, "run.timestamp = {stamp}");
    out
}

fn write_outputs(dir: &Path, c: &ExperimentConfig, outcome: &Result<Artifacts>, status: Status) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    if let Ok(a) = outcome {
        for (name, body) in &a.files {
            fs::write(dir.join(name), body)?;
        }
    }
    fs::write(dir.join("manifest.txt"), manifest(c, outcome, status))
}

/// Runs `c`, writes artifacts under `c.output`, and returns the exit status.
pub fn run(c: &ExperimentConfig) -> Status {
    let outcome = execute(c);
    let status = match &outcome {
        Ok(a) if a.pass => Status::Pass,
        Ok(_) => Status::CertificationFailure,
        Err(e) => Status::of(e),
    };
    match &outcome {
        Ok(a) => {
            for (k, v) in &a.results {
                println!("{k} = {v}");
            }
            println!("pass = {}", a.pass);
        }
        Err(e) => eprintln!("error: {e}"),
    }
    if status != Status::ConfigError || outcome.is_ok() {
        if let Err(e) = write_outputs(Path::new(&c.output), c, &outcome, status) {
            eprintln!("error: cannot write to `{}`: {e}", c.output);
            return Status::ConfigError;
        }
    }
    status
}

/// Decay-diagnostics runs for fifth-order dispersive equations.
///
/// Settings come from the defaults, then `--config`, then the per-key
/// flags, then `--set`. Outputs go to the directory named by `output`.
#[derive(Debug, Parser)]
#[command(name = "fifth-decay", version)]
pub struct Cli {
    #[arg(value_parser = SUBCOMMANDS.map(|s| s.as_str()))]
    pub subcommand: String,
    /// Flat `key = value` file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override any key, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Print the resolved config and exit.
    #[arg(long)]
    pub print_config: bool,
    #[arg(long)]
    pub a0: Option<String>,
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long = "N")]
    pub n: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long = "x_step")]
    pub x_step: Option<String>,
    #[arg(long = "t_step")]
    pub t_step: Option<String>,
    #[arg(long = "L")]
    pub l: Option<String>,
    #[arg(long = "M")]
    pub m: Option<String>,
    #[arg(long)]
    pub dt: Option<String>,
    #[arg(long = "T")]
    pub t: Option<String>,
    #[arg(long)]
    pub cadence: Option<String>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long = "preset_params")]
    pub preset_params: Option<String>,
    #[arg(long)]
    pub coefficients: Option<String>,
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub data2: Option<String>,
    #[arg(long)]
    pub j: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub xmin: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub xmax: Option<String>,
    #[arg(long)]
    pub xstep: Option<String>,
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
}

impl Cli {
    fn flags(&self) -> [(&'static str, &Option<String>); 23] {
        [
            ("a0", &self.a0),
            ("epsilon", &self.epsilon),
            ("N", &self.n),
            ("beta", &self.beta),
            ("delta", &self.delta),
            ("x_step", &self.x_step),
            ("t_step", &self.t_step),
            ("L", &self.l),
            ("M", &self.m),
            ("dt", &self.dt),
            ("T", &self.t),
            ("cadence", &self.cadence),
            ("preset", &self.preset),
            ("preset_params", &self.preset_params),
            ("coefficients", &self.coefficients),
            ("data", &self.data),
            ("data2", &self.data2),
            ("j", &self.j),
            ("xmin", &self.xmin),
            ("xmax", &self.xmax),
            ("xstep", &self.xstep),
            ("output", &self.output),
            ("seed", &self.seed),
        ]
    }

    /// Resolves the layered config.
    pub fn config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| config_error("config", format!("{}: {e}", path.display())))?;
                ExperimentConfig::parse(&text)?
            }
            None => ExperimentConfig::default(),
        };
        c.set("subcommand", &self.subcommand)?;
        for (k, v) in self.flags() {
            if let Some(v) = v {
                c.set(k, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| config_error("set", format!("expected KEY=VALUE, got `{kv}`")))?;
            c.set(k.trim(), v)?;
        }
        debug_assert_eq!(self.flags().len() + 1, CONFIG_KEYS.len());
        Ok(c)
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::ConfigError as i32 } else { 0 };
        }
    };
    let config = match cli.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return Status::ConfigError as i32;
        }
    };
    if cli.print_config {
        print!("{}", config.to_text());
        return 0;
    }
    run(&config) as i32
}
