//! Term-by-term weighted energy balance along a stored trajectory.

use crate::certifier::{certify_master_inequality, master_ratio, SweepSpec};
use crate::error::{invalid, Result};
use crate::solver::{Solver, Trajectory};
use crate::weights::{young_coefficient, PiecewiseWeight};

use super::quad::{
    panel_width, piecewise_breakpoints, significant_modes, Interpolant, Nodes, SPECTRAL_NOISE_FLOOR,
};
use super::trusted_right_edge;

/// Young-split check at one `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoungCheck {
    pub epsilon: f64,
    /// `5 |∫ u ∂²u ∂³φ|`.
    pub lhs: f64,
    /// `(5−ε) ∫(∂²u)² ∂φ + c_ε ∫ u² (∂³φ)²/∂φ`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerSample {
    pub t: f64,
    /// `∫ u² φ`.
    pub energy: f64,
    /// `d/dt ∫ u² φ`, by finite differences of the stored series.
    pub energy_rate: f64,
    /// `∫ u² ∂_t φ`.
    pub time_term: f64,
    /// `5 ∫ (∂²u)² ∂φ`.
    pub smoothing_term: f64,
    /// `−5 ∫ (∂u)² ∂³φ`.
    pub gradient_term: f64,
    /// `∫ u² ∂⁵φ`.
    pub fifth_term: f64,
    /// `2 ∫ F u φ`.
    pub forcing_term: f64,
    /// Boundary flux `[G]` at the window edges from integrating by parts.
    pub boundary_term: f64,
    /// `energy_rate + smoothing + gradient + fifth − time − forcing − boundary`.
    pub residual: f64,
    /// `|residual|` over the largest term magnitude.
    pub relative_residual: f64,
    pub young: Vec<YoungCheck>,
    /// `energy_rate + ε ∫(∂²u)² ∂φ` at the weight's `ε`.
    pub bound_lhs: f64,
    /// `∫ u² φ · (L/φ) + 2 ∫ F u φ` plus window-edge fluxes.
    pub bound_mid: f64,
    /// `c₀ ∫ u² φ + 2 ∫ F u φ`.
    pub bound_majorant: f64,
    pub bound_holds: bool,
}

impl LedgerSample {
    fn terms(&self) -> [f64; 7] {
        [
            self.energy_rate,
            self.time_term,
            self.smoothing_term,
            self.gradient_term,
            self.fifth_term,
            self.forcing_term,
            self.boundary_term,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerOptions {
    /// Integration window; defaults to `[−L, min(L/2, x_trust)]`.
    pub window: Option<(f64, f64)>,
    /// `ε` values for the Young-split check.
    pub epsilons: Vec<f64>,
    /// Majorant constant; certified from the weight when absent.
    pub c0: Option<f64>,
}

impl Default for LedgerOptions {
    fn default() -> Self {
        LedgerOptions {
            window: None,
            epsilons: vec![0.0, 0.01, 0.1],
            c0: None,
        }
    }
}

/// Half-width of the centered difference stencil.
pub const STENCIL_HALF_WIDTH: usize = 4;
const STENCIL: [f64; STENCIL_HALF_WIDTH] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

/// Centered eighth-order first derivative at interior sample `i`.
fn centered_rate(f: &[f64], i: usize, h: f64) -> f64 {
    STENCIL
        .iter()
        .enumerate()
        .map(|(k, c)| c * (f[i + k + 1] - f[i - k - 1]))
        .sum::<f64>()
        / h
}

/// Window-edge fluxes `(G, H)` at `x` for `d = [u, ∂u, …, ∂⁴u]`.
///
/// `G′ = 2u∂⁵u φ + 5(∂²u)²∂φ − 5(∂u)²∂³φ + u²∂⁵φ` and
/// `H = 5u∂u∂³φ − (5/2)u²∂⁴φ`.
fn edge_flux(w: &PiecewiseWeight, x: f64, t: f64, d: [f64; 5]) -> (f64, f64) {
    let (log, r) = w.log_ratios(x, t);
    let p: Vec<f64> = r.iter().map(|r| log.exp() * r).collect();
    let [u, u1, u2, u3, u4] = d;
    let g = p[0] * (2.0 * u * u4 - 2.0 * u1 * u3 + u2 * u2)
        + p[1] * (4.0 * u1 * u2 - 2.0 * u * u3)
        + p[2] * (2.0 * u * u2 - 3.0 * u1 * u1)
        - p[3] * 2.0 * u * u1
        + p[4] * u * u;
    let h = 5.0 * u * u1 * p[3] - 2.5 * u * u * p[4];
    (g, h)
}

/// Per-sample integrals; `cross = ∫ u ∂²u ∂³φ`, `split = ∫ u² (∂³φ)²/(∂φ φ) φ`.
#[derive(Debug, Default)]
struct Raw {
    energy: f64,
    time: f64,
    smooth: f64,
    grad: f64,
    fifth: f64,
    forcing: f64,
    cross: f64,
    split: f64,
    master: f64,
    boundary: f64,
    bound_flux: f64,
}

/// Evaluates every term of the weighted energy balance at each interior
/// sample, where the centered stencil for `d/dt ∫ u² φ` is available.
///
/// The weight is flat for `x ≤ 0`, so only `[0, x₊]` needs quadrature when
/// the window spans a full period; the flat remainder follows from the
/// period integrals of the interpolants.
pub fn energy_ledger(
    traj: &Trajectory,
    w: &PiecewiseWeight,
    options: &LedgerOptions,
) -> Result<Vec<LedgerSample>> {
    let samples = &traj.samples;
    if samples.len() <= 2 * STENCIL_HALF_WIDTH {
        return Err(invalid(
            "trajectory",
            format!("needs more than {} samples", 2 * STENCIL_HALF_WIDTH),
        ));
    }
    let times = traj.times();
    let h = times[1] - times[0];
    if times
        .windows(2)
        .any(|p| ((p[1] - p[0]) - h).abs() > 1e-9 * h.max(1.0))
    {
        return Err(invalid("trajectory", "samples are not equispaced"));
    }
    let grid = samples[0].grid;
    let l = grid.l();
    let solver = Solver::new(grid, traj.spec.clone());
    let sp = solver.spectral();

    // one truncation for the whole run keeps the linear flow exact mode by mode
    let spectra: Vec<_> = samples.iter().map(|f| sp.to_spectrum(&f.values)).collect();
    let forcing_spectra: Vec<_> = samples
        .iter()
        .map(|f| (!traj.spec.is_zero()).then(|| solver.forcing(&f.values)))
        .collect();
    let modes = spectra
        .iter()
        .chain(forcing_spectra.iter().flatten())
        .map(|s| significant_modes(s, SPECTRAL_NOISE_FLOOR))
        .max()
        .unwrap_or(0);
    let interps: Vec<Interpolant> = spectra
        .iter()
        .map(|s| Interpolant::with_modes(grid, s, 4, modes))
        .collect();
    let forcings: Vec<Option<Interpolant>> = forcing_spectra
        .iter()
        .map(|s| s.as_ref().map(|s| Interpolant::with_modes(grid, s, 0, modes)))
        .collect();
    let bandwidth = interps
        .iter()
        .chain(forcings.iter().flatten())
        .map(Interpolant::bandwidth)
        .fold(0.0, f64::max);
    let hi_default = trusted_right_edge(l, w.params().a0());
    let window = options.window.unwrap_or((hi_default - 2.0 * l, hi_default));
    if !(window.0 < window.1 && window.1 - window.0 <= 2.0 * l * (1.0 + 1e-12)) {
        return Err(invalid(
            "window",
            format!("[{}, {}] must be nonempty and at most one period", window.0, window.1),
        ));
    }
    let full_period = (window.1 - window.0 - 2.0 * l).abs() <= 1e-12 * l;
    let panel = panel_width(bandwidth);
    let breaks = piecewise_breakpoints(w);
    let side = |lo: f64, hi: f64| -> Result<Option<Nodes>> {
        if lo < hi {
            Nodes::new(lo, hi, &breaks, panel).map(Some)
        } else {
            Ok(None)
        }
    };
    let weighted = side(window.0.max(0.0), window.1)?;
    let flat = if full_period { None } else { side(window.0, window.1.min(0.0))? };

    let c0 = match options.c0 {
        Some(c) => c,
        None => {
            let sweep = SweepSpec {
                t_max: *times.last().unwrap(),
                t_step: h.max(SweepSpec::default().t_step),
                ..SweepSpec::default()
            };
            certify_master_inequality(w, &sweep)
                .fitted
                .c0
                .ok_or_else(|| invalid("weight", "master inequality has no finite constant"))?
        }
    };
    let eps_w = w.params().epsilon();

    let mut raws = Vec::with_capacity(samples.len());
    for (i, f) in samples.iter().enumerate() {
        let t = f.t;
        let it = &interps[i];
        let ft = forcings[i].as_ref();
        let mut r = Raw::default();
        // unweighted integrals over the weighted part, for the Parseval remainder
        let (mut plain_energy, mut plain_forcing) = (0.0, 0.0);
        if let Some(nodes) = &weighted {
            let d = it.eval_upto(&nodes.x, 2);
            let fv = ft.map(|it| it.eval(&nodes.x).swap_remove(0));
            for (k, (&x, &wk)) in nodes.x.iter().zip(&nodes.w).enumerate() {
                let (log, ratio) = w.log_ratios(x, t);
                let phi = log.exp();
                let (u, ux, uxx) = (d[0][k], d[1][k], d[2][k]);
                let u2 = u * u;
                let split = if ratio[1] > 0.0 { ratio[3] * ratio[3] / ratio[1] } else { 0.0 };
                r.energy += wk * u2 * phi;
                plain_energy += wk * u2;
                r.time += wk * u2 * phi * w.time_ratio(x, t);
                r.smooth += wk * 5.0 * uxx * uxx * phi * ratio[1];
                r.grad -= wk * 5.0 * ux * ux * phi * ratio[3];
                r.fifth += wk * u2 * phi * ratio[5];
                r.cross += wk * u * uxx * phi * ratio[3];
                r.split += wk * u2 * phi * split;
                if let Some(fv) = &fv {
                    r.forcing += wk * 2.0 * fv[k] * u * phi;
                    plain_forcing += wk * 2.0 * fv[k] * u;
                }
                if u2 != 0.0 {
                    let m = master_ratio(w, x, t).map_err(crate::Error::NumericalDefect)?;
                    r.master += wk * u2 * phi * m;
                }
            }
        }
        if full_period {
            r.energy += it.period_inner(it) - plain_energy;
            if let Some(ft) = ft {
                r.forcing += 2.0 * ft.period_inner(it) - plain_forcing;
            }
        } else if let Some(nodes) = &flat {
            let u = it.eval_upto(&nodes.x, 0).swap_remove(0);
            r.energy += nodes.sum(&u.iter().map(|v| v * v).collect::<Vec<_>>());
            if let Some(ft) = ft {
                let fv = ft.eval(&nodes.x).swap_remove(0);
                let prod: Vec<f64> = fv.iter().zip(&u).map(|(a, b)| 2.0 * a * b).collect();
                r.forcing += nodes.sum(&prod);
            }
        }
        let edges = it.eval(&[window.0, window.1]);
        for (side, sign) in [(0, -1.0), (1, 1.0)] {
            let d = [0, 1, 2, 3, 4].map(|j| edges[j][side]);
            let (g, h) = edge_flux(w, [window.0, window.1][side], t, d);
            r.boundary += sign * g;
            r.bound_flux += sign * h;
        }
        raws.push(r);
    }

    let energies: Vec<f64> = raws.iter().map(|r| r.energy).collect();
    let mut out = Vec::with_capacity(raws.len() - 2 * STENCIL_HALF_WIDTH);
    for (i, r) in raws
        .iter()
        .enumerate()
        .take(raws.len() - STENCIL_HALF_WIDTH)
        .skip(STENCIL_HALF_WIDTH)
    {
        let rate = centered_rate(&energies, i, h);
        let residual = rate + r.smooth + r.grad + r.fifth - r.time - r.forcing - r.boundary;
        let young = options
            .epsilons
            .iter()
            .map(|&eps| {
                let lhs = 5.0 * r.cross.abs();
                let rhs = (5.0 - eps) / 5.0 * r.smooth + young_coefficient(eps) * r.split;
                YoungCheck {
                    epsilon: eps,
                    lhs,
                    rhs,
                    holds: lhs <= rhs,
                }
            })
            .collect();
        let bound_lhs = rate + eps_w / 5.0 * r.smooth;
        let bound_mid = r.master + r.forcing + r.boundary + r.bound_flux;
        let bound_majorant = c0 * r.energy + r.forcing + r.boundary + r.bound_flux;
        let mut s = LedgerSample {
            t: times[i],
            energy: r.energy,
            energy_rate: rate,
            time_term: r.time,
            smoothing_term: r.smooth,
            gradient_term: r.grad,
            fifth_term: r.fifth,
            forcing_term: r.forcing,
            boundary_term: r.boundary,
            residual,
            relative_residual: 0.0,
            young,
            bound_lhs,
            bound_mid,
            bound_majorant,
            bound_holds: false,
        };
        let scale = s.terms().iter().map(|v| v.abs()).fold(0.0, f64::max);
        s.relative_residual = if scale > 0.0 { residual.abs() / scale } else { residual.abs() };
        let slack = 10.0 * residual.abs() + 1e-12 * scale;
        s.bound_holds = bound_lhs <= bound_mid + slack && bound_mid <= bound_majorant + slack;
        out.push(s);
    }
    Ok(out)
}

pub const LEDGER_CSV_HEADER: &str = "t,energy,energy_rate,time_term,smoothing_term,gradient_term,fifth_term,forcing_term,boundary_term,residual,relative_residual,young_holds,bound_holds";

/// One row per sample; `young_holds` is true when every `ε` passes.
pub fn ledger_csv(samples: &[LedgerSample]) -> String {
    use std::fmt::Write;
    let mut out = String::from(LEDGER_CSV_HEADER);
    out.push('\n');
    for s in samples {
        let _ = write!(out, "{}", s.t);
        for v in [
            s.energy,
            s.energy_rate,
            s.time_term,
            s.smoothing_term,
            s.gradient_term,
            s.fifth_term,
            s.forcing_term,
            s.boundary_term,
            s.residual,
            s.relative_residual,
        ] {
            let _ = write!(out, ",{v:e}");
        }
        let young = s.young.iter().all(|y| y.holds);
        let _ = writeln!(out, ",{young},{}", s.bound_holds);
    }
    out
}
