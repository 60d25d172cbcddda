//! Weighted norms along simulated trajectories: persistence of right-side
//! exponential decay, decay of differences, Kato-weight growth, and the
//! weighted energy ledger.

mod data;
mod ledger;
mod quad;

use std::fmt::Write as _;
use std::io;

pub use data::{DataProfile, InitialData};
pub use ledger::{energy_ledger, ledger_csv, LedgerOptions, LedgerSample, YoungCheck, LEDGER_CSV_HEADER};
pub use quad::{
    log_weighted_norm, panel_width, piecewise_breakpoints, weighted_norm, Interpolant, KatoSquared,
    Nodes, PiecewiseAt, PowerWeight, UnitWeight, WeightFn,
};

use crate::certifier::REFINEMENT_TOLERANCE;
use crate::error::{invalid, Result};
use crate::solver::{evolve, stability_limit, EvolveOptions, Field, Grid, ModelPreset, Trajectory, DEFAULT_SENTINEL};
use crate::weights::{DecayLaw, PiecewiseWeight};

/// Largest exponent `a₀ x^{5/4}` admitted inside the trusted window.
pub const TRUSTED_EXPONENT: f64 = 50.0;
/// Largest exponent `βx` admitted inside the Kato window.
pub const TRUSTED_KATO_EXPONENT: f64 = 25.0;

/// `min(L/2, (E/a₀)^{4/5})`.
pub fn trusted_right_edge(l: f64, a0: f64) -> f64 {
    (0.5 * l).min((TRUSTED_EXPONENT / a0).powf(0.8))
}

/// Grid, time stepping and model shared by every experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSetup {
    pub l: f64,
    pub m: usize,
    /// Requested step; lowered to half the RK4 stability limit when needed.
    pub dt: f64,
    pub t_final: f64,
    pub cadence: f64,
    pub preset: ModelPreset,
    /// Dealiasing fraction; defaults to `min(2/3, 2/(deg+1))`.
    pub dealias: Option<f64>,
    pub sentinel: Option<f64>,
}

impl Default for ExperimentSetup {
    fn default() -> Self {
        ExperimentSetup {
            l: 120.0,
            m: 2048,
            dt: 1e-3,
            t_final: 1.0,
            cadence: 0.05,
            preset: ModelPreset::linear(),
            dealias: None,
            sentinel: Some(DEFAULT_SENTINEL),
        }
    }
}

impl ExperimentSetup {
    pub fn with_preset(preset: ModelPreset) -> Self {
        ExperimentSetup {
            preset,
            ..Default::default()
        }
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias
            .unwrap_or_else(|| (2.0 / 3.0f64).min(self.preset.spec.required_dealias_fraction()))
    }

    pub fn grid(&self, m: usize) -> Result<Grid> {
        Grid::with_dealias(self.l, m, self.dealias_fraction())
    }

    /// Evolves each profile on the grid with `m` points, sharing one step size.
    pub fn run(&self, m: usize, profiles: &[InitialData]) -> Result<Vec<Trajectory>> {
        let grid = self.grid(m)?;
        let fields: Vec<Field> = profiles.iter().map(|p| Field::from_fn(grid, |x| p.eval(x))).collect();
        let amp = fields
            .iter()
            .flat_map(|f| f.values.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let dt = self.dt.min(0.5 * stability_limit(&grid, &self.preset.spec, amp));
        let options = EvolveOptions {
            cadence: self.cadence,
            sentinel: self.sentinel,
        };
        fields
            .iter()
            .map(|f| evolve(f, &self.preset.spec, self.t_final, dt, options, &mut []))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Persistence,
    Difference,
    Kato,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Persistence => "persistence",
            ExperimentKind::Difference => "difference",
            ExperimentKind::Kato => "kato",
        }
    }
}

/// A fitted constant at the base grid and at the doubled grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refined {
    pub value: f64,
    pub refined: f64,
}

impl Refined {
    pub fn change(&self) -> f64 {
        if self.value == self.refined {
            0.0
        } else {
            (self.value - self.refined).abs() / self.value.abs().max(self.refined.abs())
        }
    }

    pub fn finite(&self) -> bool {
        self.value.is_finite() && self.refined.is_finite()
    }

    pub fn stable(&self) -> bool {
        self.finite() && self.change() < REFINEMENT_TOLERANCE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReportRow {
    pub t: f64,
    pub a_t: Option<f64>,
    pub w_moving: Option<f64>,
    pub w_frozen: Option<f64>,
    pub k_beta: Option<f64>,
    pub ledger_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub kind: ExperimentKind,
    pub preset: String,
    pub rows: Vec<ReportRow>,
    pub window: (f64, f64),
    /// Frozen-weight norm of the initial difference.
    pub lambda: Option<f64>,
    /// `sup_t W_moving(t) / W_moving(0)`.
    pub c_star: Option<Refined>,
    /// `sup_t W_moving` of the difference.
    pub c_double_star: Option<Refined>,
    /// `sup_{t>0} ln(K(t)/K(0)) / (2t)`.
    pub gamma: Option<Refined>,
    /// `4β⁵ (1 + 0.05)`, for the linear flow only.
    pub gamma_bound: Option<f64>,
    pub pass: bool,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

pub const REPORT_CSV_HEADER: &str = "t,a_t,W_moving,W_frozen,K_beta,ledger_residual";

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

impl DecayReport {
    /// Fitted constants as `key=value` pairs.
    pub fn summary(&self) -> Vec<(String, String)> {
        let mut s = vec![
            ("kind".to_string(), self.kind.as_str().to_string()),
            ("preset".to_string(), self.preset.clone()),
            ("window".to_string(), format!("[{},{}]", self.window.0, self.window.1)),
        ];
        let mut refined = |name: &str, r: &Option<Refined>| {
            if let Some(r) = r {
                s.push((name.to_string(), format!("{:e}", r.value)));
                s.push((format!("{name}_refined"), format!("{:e}", r.refined)));
                s.push((format!("{name}_change"), format!("{:.3e}", r.change())));
            }
        };
        refined("c_star", &self.c_star);
        refined("c_double_star", &self.c_double_star);
        refined("gamma", &self.gamma);
        if let Some(l) = self.lambda {
            s.push(("lambda".to_string(), format!("{l:e}")));
        }
        if let Some(b) = self.gamma_bound {
            s.push(("gamma_bound".to_string(), format!("{b:e}")));
        }
        s.push(("pass".to_string(), self.pass.to_string()));
        s
    }

    /// `#` summary line, header, one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("#");
        for (k, v) in self.summary() {
            let _ = write!(out, " {k}={v}");
        }
        out.push('\n');
        for n in self.notes.iter().chain(&self.warnings) {
            let _ = writeln!(out, "# {n}");
        }
        out.push_str(REPORT_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.t,
                cell(r.a_t),
                cell(r.w_moving),
                cell(r.w_frozen),
                cell(r.k_beta),
                cell(r.ledger_residual)
            );
        }
        out
    }

    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }

    /// Fills the ledger column from `samples`, matched by time.
    pub fn attach_ledger(&mut self, samples: &[LedgerSample]) {
        for r in &mut self.rows {
            r.ledger_residual = samples
                .iter()
                .find(|s| (s.t - r.t).abs() < 1e-9)
                .map(|s| s.relative_residual);
        }
    }
}

/// Moving- and frozen-weight norms of each sample.
fn power_norms(traj: &Trajectory, law: &DecayLaw, window: (f64, f64)) -> Result<Vec<(f64, f64, f64)>> {
    traj.samples
        .iter()
        .map(|f| {
            let a = law.a(f.t)?;
            let moving = weighted_norm(f, &PowerWeight { a }, window)?;
            let frozen = weighted_norm(f, &PowerWeight { a: law.a0() }, window)?;
            Ok((a, moving, frozen))
        })
        .collect()
}

fn sup_ratio(series: &[(f64, f64, f64)]) -> f64 {
    let w0 = series[0].1;
    series.iter().map(|s| s.1 / w0).fold(0.0, f64::max)
}

fn check_window(window: (f64, f64)) -> Result<()> {
    if window.0 < window.1 {
        Ok(())
    } else {
        Err(invalid("window", format!("[{}, {}] is empty", window.0, window.1)))
    }
}

/// Evolves `data` and tracks `∫ e^{a(t) x₊^{5/4}} u²` with `κ = 4k(ε)`.
///
/// The fit is repeated with `2M` points; the run passes when `c*` is finite,
/// changes by less than 5 %, and the moving norm never exceeds the frozen one.
pub fn persistence_experiment(
    setup: &ExperimentSetup,
    data: &InitialData,
    a0: f64,
    epsilon: f64,
) -> Result<DecayReport> {
    if !data.right_tail_admissible() {
        return Err(invalid(
            "data",
            format!("`{data}` has an exponential right tail; the weighted norm is infinite"),
        ));
    }
    let law = DecayLaw::from_epsilon(a0, epsilon)?;
    let window = (-0.5 * setup.l, trusted_right_edge(setup.l, a0));
    check_window(window)?;
    let base = setup.run(setup.m, std::slice::from_ref(data))?.remove(0);
    let fine = setup.run(2 * setup.m, std::slice::from_ref(data))?.remove(0);
    let series = power_norms(&base, &law, window)?;
    let series_fine = power_norms(&fine, &law, window)?;
    if series[0].1 <= 0.0 {
        return Err(invalid("data", "initial weighted norm vanishes on the window"));
    }
    let c_star = Refined {
        value: sup_ratio(&series),
        refined: sup_ratio(&series_fine),
    };
    let ordered = series
        .iter()
        .chain(&series_fine)
        .all(|s| s.1 <= s.2 * (1.0 + 1e-12));
    let rows = base
        .samples
        .iter()
        .zip(&series)
        .map(|(f, s)| ReportRow {
            t: f.t,
            a_t: Some(s.0),
            w_moving: Some(s.1),
            w_frozen: Some(s.2),
            ..Default::default()
        })
        .collect();
    let mut notes = vec![format!(
        "a0={a0} epsilon={epsilon} kappa={:e} data={data} M={} dt={:e}",
        law.kappa(),
        setup.m,
        base.dt
    )];
    if !ordered {
        notes.push("W_moving exceeded W_frozen at some sample".into());
    }
    Ok(DecayReport {
        kind: ExperimentKind::Persistence,
        preset: setup.preset.name.clone(),
        rows,
        window,
        lambda: None,
        c_star: Some(c_star),
        c_double_star: None,
        gamma: None,
        gamma_bound: None,
        pass: c_star.stable() && ordered,
        notes,
        warnings: base.warnings,
    })
}

/// Difference fields `u₁ − u₂` of two co-evolved trajectories.
fn differences(a: &Trajectory, b: &Trajectory) -> Vec<Field> {
    a.samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| Field {
            grid: x.grid,
            values: x.values.iter().zip(&y.values).map(|(p, q)| p - q).collect(),
            t: x.t,
        })
        .collect()
}

fn diff_norms(fields: &[Field], law: &DecayLaw, window: (f64, f64)) -> Result<Vec<(f64, f64, f64)>> {
    fields
        .iter()
        .map(|f| {
            let a = law.a(f.t)?;
            Ok((
                a,
                weighted_norm(f, &PowerWeight { a }, window)?,
                weighted_norm(f, &PowerWeight { a: law.a0() }, window)?,
            ))
        })
        .collect()
}

/// Co-evolves `u₁`, `u₂` and tracks the weighted norm of their difference.
///
/// Either both profiles have admissible right tails or their difference
/// vanishes identically right of the trusted window.
pub fn difference_experiment(
    setup: &ExperimentSetup,
    u1: &InitialData,
    u2: &InitialData,
    a0: f64,
    epsilon: f64,
) -> Result<DecayReport> {
    let law = DecayLaw::from_epsilon(a0, epsilon)?;
    let window = (-0.5 * setup.l, trusted_right_edge(setup.l, a0));
    check_window(window)?;
    let grid = setup.grid(setup.m)?;
    let tails_match = grid
        .xs()
        .iter()
        .chain(&[setup.l])
        .filter(|&&x| x >= window.1)
        .all(|&x| u1.eval(x) == u2.eval(x));
    if !(u1.right_tail_admissible() && u2.right_tail_admissible()) && !tails_match {
        return Err(invalid(
            "data",
            "the difference of the profiles must vanish right of the trusted window",
        ));
    }
    let pair = [u1.clone(), u2.clone()];
    let base = setup.run(setup.m, &pair)?;
    let fine = setup.run(2 * setup.m, &pair)?;
    let d = differences(&base[0], &base[1]);
    let d_fine = differences(&fine[0], &fine[1]);
    let series = diff_norms(&d, &law, window)?;
    let series_fine = diff_norms(&d_fine, &law, window)?;
    let sup = |s: &[(f64, f64, f64)]| s.iter().map(|v| v.1).fold(0.0, f64::max);
    let c = Refined {
        value: sup(&series),
        refined: sup(&series_fine),
    };
    let lambda = series[0].2;
    let rows = d
        .iter()
        .zip(&series)
        .map(|(f, s)| ReportRow {
            t: f.t,
            a_t: Some(s.0),
            w_moving: Some(s.1),
            w_frozen: Some(s.2),
            ..Default::default()
        })
        .collect();
    let notes = vec![format!(
        "a0={a0} epsilon={epsilon} u1={u1} u2={u2} M={} dt={:e}",
        setup.m, base[0].dt
    )];
    let mut warnings = base[0].warnings.clone();
    if u1 != u2 {
        warnings.push("both solutions use smooth data; the asymmetric regularity of the two inputs is not modelled".into());
    }
    Ok(DecayReport {
        kind: ExperimentKind::Difference,
        preset: setup.preset.name.clone(),
        rows,
        window,
        lambda: Some(lambda),
        c_star: None,
        c_double_star: Some(c),
        gamma: None,
        gamma_bound: None,
        pass: lambda.is_finite() && c.stable(),
        notes,
        warnings,
    })
}

/// `(L⁻, L⁺)` for the Kato norm: the whole box when `β = 0`.
fn kato_window(l: f64, beta: f64) -> (f64, f64) {
    if beta == 0.0 {
        (-l, l)
    } else {
        (-l, (0.5 * l).min(TRUSTED_KATO_EXPONENT / beta))
    }
}

fn kato_series(traj: &Trajectory, beta: f64, window: (f64, f64)) -> Result<Vec<f64>> {
    traj.samples
        .iter()
        .map(|f| weighted_norm(f, &KatoSquared { beta }, window))
        .collect()
}

fn growth_rate(ts: &[f64], k: &[f64]) -> f64 {
    ts.iter()
        .zip(k)
        .skip(1)
        .map(|(&t, &v)| (v / k[0]).ln() / (2.0 * t))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Tracks `∫ e^{2βx} u²` and fits `γ` in `‖e^{βx}u(t)‖ ≤ e^{γt} ‖e^{βx}u₀‖`.
///
/// For the linear flow the run passes when `γ ≤ 4β⁵ · 1.05` on both grids;
/// otherwise when `γ` is finite.
pub fn kato_experiment(setup: &ExperimentSetup, data: &InitialData, beta: f64) -> Result<DecayReport> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid("beta", format!("{beta} must be nonnegative")));
    }
    let window = kato_window(setup.l, beta);
    let base = setup.run(setup.m, std::slice::from_ref(data))?.remove(0);
    let fine = setup.run(2 * setup.m, std::slice::from_ref(data))?.remove(0);
    let k = kato_series(&base, beta, window)?;
    let k_fine = kato_series(&fine, beta, window)?;
    if !(k[0] > 0.0 && k[0].is_finite()) {
        return Err(invalid("data", format!("initial Kato norm {} is not usable", k[0])));
    }
    let gamma = Refined {
        value: growth_rate(&base.times(), &k),
        refined: growth_rate(&fine.times(), &k_fine),
    };
    let linear = setup.preset.spec.is_zero();
    let bound = linear.then(|| 4.0 * beta.powi(5) * 1.05);
    let pass = gamma.finite()
        && bound.is_none_or(|b| gamma.value <= b && gamma.refined <= b);
    let rows = base
        .samples
        .iter()
        .zip(&k)
        .map(|(f, &v)| ReportRow {
            t: f.t,
            k_beta: Some(v),
            ..Default::default()
        })
        .collect();
    let notes = vec![
        format!("beta={beta} data={data} M={} dt={:e}", setup.m, base.dt),
        format!("exp(gamma*T)={:e}", (gamma.value * setup.t_final).exp()),
    ];
    Ok(DecayReport {
        kind: ExperimentKind::Kato,
        preset: setup.preset.name.clone(),
        rows,
        window,
        lambda: None,
        c_star: None,
        c_double_star: None,
        gamma: Some(gamma),
        gamma_bound: bound,
        pass,
        notes,
        warnings: base.warnings,
    })
}

/// Ledger along a trajectory of `data` under `setup`, on the base grid.
pub fn ledger_experiment(
    setup: &ExperimentSetup,
    data: &InitialData,
    w: &PiecewiseWeight,
    options: &LedgerOptions,
) -> Result<(Trajectory, Vec<LedgerSample>)> {
    let traj = setup.run(setup.m, std::slice::from_ref(data))?.remove(0);
    let samples = energy_ledger(&traj, w, options)?;
    Ok((traj, samples))
}
