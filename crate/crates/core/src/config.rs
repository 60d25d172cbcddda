//! Flat `key = value` run configuration.
//!
//! Every key is always written, so a printed config read back yields the
//! same value. Lists are comma separated; an empty value means "use the
//! subcommand default".

use std::fmt::{self, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::solver::{ModelPreset, NonlinearitySpec, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    WeightsCheck,
    Kernel,
    Solve,
    Persistence,
    Difference,
    Kato,
    Ledger,
}

pub const SUBCOMMANDS: [Subcommand; 7] = [
    Subcommand::WeightsCheck,
    Subcommand::Kernel,
    Subcommand::Solve,
    Subcommand::Persistence,
    Subcommand::Difference,
    Subcommand::Kato,
    Subcommand::Ledger,
];

impl Subcommand {
    pub fn as_str(&self) -> &'static str {
        match self {
            Subcommand::WeightsCheck => "weights-check",
            Subcommand::Kernel => "kernel",
            Subcommand::Solve => "solve",
            Subcommand::Persistence => "persistence",
            Subcommand::Difference => "difference",
            Subcommand::Kato => "kato",
            Subcommand::Ledger => "ledger",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SUBCOMMANDS
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| config_error("subcommand", format!("unknown subcommand `{s}`")))
    }
}

pub(crate) fn config_error(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    pub a0: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub n: Vec<u32>,
    pub beta: Vec<f64>,
    pub delta: Vec<f64>,
    /// Certifier lattice steps.
    pub x_step: f64,
    pub t_step: f64,
    pub l: f64,
    pub m: usize,
    pub dt: f64,
    pub t_final: f64,
    /// Sample spacing; `None` gives 0.001 for `ledger` and 0.05 otherwise.
    pub cadence: Option<f64>,
    pub preset: String,
    pub preset_params: Vec<f64>,
    /// Explicit `P`; overrides `preset` when present.
    pub coefficients: Option<String>,
    pub data: String,
    /// Second profile of a `difference` pair; `None` pairs `data` with itself.
    pub data2: Option<String>,
    pub j: u32,
    pub xmin: f64,
    pub xmax: f64,
    pub xstep: f64,
    /// Output directory.
    pub output: String,
    /// Recorded in the manifest; no stage of a run is random.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            subcommand: Subcommand::WeightsCheck,
            a0: vec![0.5, 1.0, 2.0],
            epsilon: vec![0.0, 0.01, 0.1],
            n: vec![5, 10, 20, 40],
            beta: vec![0.2, 0.3, 0.5],
            delta: vec![0.5, 0.1, 0.01, 0.001],
            x_step: 0.01,
            t_step: 0.05,
            l: 120.0,
            m: 2048,
            dt: 1e-3,
            t_final: 1.0,
            cadence: None,
            preset: "linear".to_string(),
            preset_params: vec![],
            coefficients: None,
            data: "bump".to_string(),
            data2: None,
            j: 2,
            xmin: -40.0,
            xmax: 10.0,
            xstep: 0.05,
            output: "out".to_string(),
            seed: 0,
        }
    }
}

pub const CONFIG_KEYS: [&str; 24] = [
    "subcommand",
    "a0",
    "epsilon",
    "N",
    "beta",
    "delta",
    "x_step",
    "t_step",
    "L",
    "M",
    "dt",
    "T",
    "cadence",
    "preset",
    "preset_params",
    "coefficients",
    "data",
    "data2",
    "j",
    "xmin",
    "xmax",
    "xstep",
    "output",
    "seed",
];

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse()
        .map_err(|e| config_error(key, format!("`{v}`: {e}")))
}

fn finite(key: &str, v: &str) -> Result<f64> {
    let x: f64 = scalar(key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(config_error(key, format!("`{v}` is not finite")))
    }
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| scalar(key, s))
        .collect()
}

fn finite_list(key: &str, v: &str) -> Result<Vec<f64>> {
    let xs: Vec<f64> = list(key, v)?;
    if xs.iter().all(|x| x.is_finite()) {
        Ok(xs)
    } else {
        Err(config_error(key, format!("`{v}` has a non-finite entry")))
    }
}

fn optional(v: &str) -> Option<String> {
    (!v.is_empty()).then(|| v.to_string())
}

impl ExperimentConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "subcommand" => self.subcommand = v.parse()?,
            "a0" => self.a0 = finite_list(key, v)?,
            "epsilon" => self.epsilon = finite_list(key, v)?,
            "N" => self.n = list(key, v)?,
            "beta" => self.beta = finite_list(key, v)?,
            "delta" => self.delta = finite_list(key, v)?,
            "x_step" => self.x_step = finite(key, v)?,
            "t_step" => self.t_step = finite(key, v)?,
            "L" => self.l = finite(key, v)?,
            "M" => self.m = scalar(key, v)?,
            "dt" => self.dt = finite(key, v)?,
            "T" => self.t_final = finite(key, v)?,
            "cadence" => {
                self.cadence = if v.is_empty() {
                    None
                } else {
                    Some(finite(key, v)?)
                }
            }
            "preset" => self.preset = v.to_string(),
            "preset_params" => self.preset_params = finite_list(key, v)?,
            "coefficients" => self.coefficients = optional(v),
            "data" => self.data = v.to_string(),
            "data2" => self.data2 = optional(v),
            "j" => self.j = scalar(key, v)?,
            "xmin" => self.xmin = finite(key, v)?,
            "xmax" => self.xmax = finite(key, v)?,
            "xstep" => self.xstep = finite(key, v)?,
            "output" => self.output = v.to_string(),
            "seed" => self.seed = scalar(key, v)?,
            _ => return Err(config_error(key, "unknown key")),
        }
        Ok(())
    }

    /// Text form of one key, as accepted by [`ExperimentConfig::set`].
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "subcommand" => self.subcommand.to_string(),
            "a0" => join(&self.a0),
            "epsilon" => join(&self.epsilon),
            "N" => join(&self.n),
            "beta" => join(&self.beta),
            "delta" => join(&self.delta),
            "x_step" => self.x_step.to_string(),
            "t_step" => self.t_step.to_string(),
            "L" => self.l.to_string(),
            "M" => self.m.to_string(),
            "dt" => self.dt.to_string(),
            "T" => self.t_final.to_string(),
            "cadence" => self.cadence.map(|c| c.to_string()).unwrap_or_default(),
            "preset" => self.preset.clone(),
            "preset_params" => join(&self.preset_params),
            "coefficients" => self.coefficients.clone().unwrap_or_default(),
            "data" => self.data.clone(),
            "data2" => self.data2.clone().unwrap_or_default(),
            "j" => self.j.to_string(),
            "xmin" => self.xmin.to_string(),
            "xmax" => self.xmax.to_string(),
            "xstep" => self.xstep.to_string(),
            "output" => self.output.clone(),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// Reads `key = value` lines over the defaults; `#` starts a comment.
    /// Manifest keys under `result.` and `run.` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split_once('#').map_or(line, |(l, _)| l).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_error("line", format!("{}: expected `key = value`", i + 1)))?;
            let k = k.trim();
            if k.starts_with("result.") || k.starts_with("run.") {
                continue;
            }
            c.set(k, v)?;
        }
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in CONFIG_KEYS {
            let v = self.get(k).expect("every listed key has a value");
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn cadence_or_default(&self) -> f64 {
        self.cadence.unwrap_or(match self.subcommand {
            Subcommand::Ledger => 1e-3,
            _ => 0.05,
        })
    }

    /// The preset, or the explicit coefficients under the name `custom`.
    pub fn model(&self) -> Result<ModelPreset> {
        match &self.coefficients {
            Some(text) => Ok(ModelPreset {
                name: "custom".to_string(),
                spec: parse_coefficients(text)?,
            }),
            None => ModelPreset::by_name(&self.preset, &self.preset_params)
                .map_err(|e| config_error("preset", e.to_string())),
        }
    }

    /// Range checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(config_error(key, format!("{v} must be positive")))
            }
        };
        positive("L", self.l)?;
        positive("dt", self.dt)?;
        positive("T", self.t_final)?;
        positive("x_step", self.x_step)?;
        positive("t_step", self.t_step)?;
        positive("xstep", self.xstep)?;
        positive("cadence", self.cadence_or_default())?;
        if self.m < 16 || !self.m.is_power_of_two() {
            return Err(config_error("M", format!("{} is not a power of two >= 16", self.m)));
        }
        if self.a0.is_empty() || self.a0.iter().any(|&a| a <= 0.0) {
            return Err(config_error("a0", "needs at least one positive value"));
        }
        if self.epsilon.is_empty() || self.epsilon.iter().any(|&e| !(0.0..=1.0).contains(&e)) {
            return Err(config_error("epsilon", "needs at least one value in [0, 1]"));
        }
        if self.n.is_empty() || self.n.iter().any(|&n| n < 2) {
            return Err(config_error("N", "needs at least one value >= 2"));
        }
        if self.beta.iter().any(|&b| b < 0.0) {
            return Err(config_error("beta", "values must be nonnegative"));
        }
        if self.delta.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
            return Err(config_error("delta", "values must lie in (0, 1)"));
        }
        if self.xmin >= self.xmax {
            return Err(config_error("xmin", "must be below xmax"));
        }
        if !(1..=2).contains(&self.j) {
            return Err(config_error("j", format!("{} is not 1 or 2", self.j)));
        }
        self.model()?;
        Ok(())
    }
}

fn parse_coefficient(key: &str, text: &str) -> Result<f64> {
    let v = match text.split_once('/') {
        Some((p, q)) => finite(key, p.trim())? / finite(key, q.trim())?,
        None => finite(key, text)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(config_error(key, format!("`{text}` is not a finite number")))
    }
}

/// Parses `c u^p ux^q uxx^r [uxxx]; …`; terms with `uxxx` form `Q₀`.
///
/// The coefficient may be a ratio `p/q`. A bare coefficient is a term with
/// no factors, which the class rejects.
pub fn parse_coefficients(text: &str) -> Result<NonlinearitySpec> {
    const KEY: &str = "coefficients";
    let mut q0 = Vec::new();
    let mut q1 = Vec::new();
    if text.trim() == "0" {
        return Ok(NonlinearitySpec::zero());
    }
    for raw in text.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let mut words = raw.split_whitespace();
        let coeff = parse_coefficient(KEY, words.next().unwrap_or_default())?;
        let mut powers = [0u32; 3];
        let mut third = false;
        for w in words {
            let (name, p) = match w.split_once('^') {
                Some((n, p)) => (n, scalar::<u32>(KEY, p)?),
                None => (w, 1),
            };
            match name {
                "u" => powers[0] += p,
                "ux" => powers[1] += p,
                "uxx" => powers[2] += p,
                "uxxx" if p == 1 && !third => third = true,
                "uxxx" => return Err(config_error(KEY, format!("`{raw}`: P is linear in uxxx"))),
                _ => return Err(config_error(KEY, format!("`{raw}`: unknown factor `{name}`"))),
            }
        }
        let term = Term::new(coeff, powers);
        if third {
            q0.push(term);
        } else {
            q1.push(term);
        }
    }
    NonlinearitySpec::new(q0, q1).map_err(|e| config_error(KEY, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn unknown_key_names_the_field() {
        let err = ExperimentConfig::parse("gamma = 1").unwrap_err();
        assert_eq!(
            err,
            Error::Config {
                key: "gamma".into(),
                reason: "unknown key".into()
            }
        );
        assert!(matches!(
            ExperimentConfig::parse("M = 100").unwrap().validate(),
            Err(Error::Config { key, .. }) if key == "M"
        ));
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = ExperimentConfig::parse("# run\n\nsubcommand = kato  # rate\nbeta = 0.5\n").unwrap();
        assert_eq!(c.subcommand, Subcommand::Kato);
        assert_eq!(c.beta, vec![0.5]);
    }

    #[test]
    fn kdv5_coefficients_match_the_preset() {
        let spec = parse_coefficients("10 u uxxx; 20 ux uxx; -30 u^2 ux").unwrap();
        assert_eq!(spec, ModelPreset::kdv5().spec);
        assert_eq!(parse_coefficients(&spec.describe()).unwrap(), spec);
    }

    #[test]
    fn rational_coefficients() {
        let spec = parse_coefficients("-3/2 u ux; 1/4 u^2 uxxx").unwrap();
        assert_eq!(spec.q1()[0].coeff, -1.5);
        assert_eq!(spec.q0()[0].coeff, 0.25);
        assert_eq!(spec.q0()[0].powers, [2, 0, 0]);
    }

    #[test]
    fn coefficient_errors() {
        for bad in ["1 u uxxx^2", "1 v ux", "2 ux", "1/0 u ux", "x u ux"] {
            assert!(parse_coefficients(bad).is_err(), "{bad}");
        }
        assert!(parse_coefficients("0").unwrap().is_zero());
    }

    fn float() -> impl Strategy<Value = f64> {
        prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), -1e3..1e3f64]
    }

    proptest! {
        #[test]
        fn config_round_trips(
            sub in 0usize..7,
            a0 in prop::collection::vec(float(), 0..4),
            n in prop::collection::vec(any::<u32>(), 0..4),
            l in float(),
            m in any::<usize>(),
            cadence in prop::option::of(float()),
            params in prop::collection::vec(float(), 0..3),
            seed in any::<u64>(),
            data2 in prop::option::of("[a-z0-9][a-z0-9_:=,.+ -]*[a-z0-9]"),
        ) {
            let c = ExperimentConfig {
                subcommand: SUBCOMMANDS[sub],
                a0,
                n,
                l,
                m,
                cadence,
                preset_params: params,
                seed,
                data2,
                ..Default::default()
            };
            prop_assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        }
    }
}
