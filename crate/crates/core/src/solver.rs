//! Fourier pseudospectral solver for `∂_t u = ∂_x⁵ u − P` on `[−L, L)`.
//!
//! The linear part is integrated exactly through the factor `e^{ik⁵t}`
//! (Lawson's integrating-factor RK4); `P = Q₀ ∂_x³u + Q₁` is evaluated in
//! collocation space from dealiased spectral derivatives.

use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Fraction of the box, measured from the boundary, watched by the sentinel.
pub const SENTINEL_BAND: f64 = 0.25;
pub const DEFAULT_SENTINEL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    l: f64,
    m: usize,
    dealias_fraction: f64,
}

impl Grid {
    /// Periodic grid on `[−L, L)` with `M` points and the 2/3 rule.
    pub fn new(l: f64, m: usize) -> Result<Self> {
        Grid::with_dealias(l, m, 2.0 / 3.0)
    }

    pub fn with_dealias(l: f64, m: usize, fraction: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(invalid("L", format!("{l} must be positive")));
        }
        if m < 8 || !m.is_power_of_two() {
            return Err(invalid("M", format!("{m} must be a power of two >= 8")));
        }
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(invalid("dealias_fraction", format!("{fraction} is not in (0, 1]")));
        }
        Ok(Grid {
            l,
            m,
            dealias_fraction: fraction,
        })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.l / self.m as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.l + j as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.x(j)).collect()
    }

    /// Signed mode index of FFT slot `i`; `−M/2` is the Nyquist mode.
    pub fn mode(&self, i: usize) -> i64 {
        if i < self.m / 2 {
            i as i64
        } else {
            i as i64 - self.m as i64
        }
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        std::f64::consts::PI / self.l * self.mode(i) as f64
    }

    /// Whether slot `i` survives dealiasing.
    pub fn kept(&self, i: usize) -> bool {
        (self.mode(i).unsigned_abs() as f64) < self.dealias_fraction * self.m as f64 / 2.0
    }

    /// Largest retained wavenumber.
    pub fn k_max(&self) -> f64 {
        let top = (0..self.m / 2).filter(|&i| self.kept(i)).max().unwrap_or(0);
        self.wavenumber(top)
    }
}

/// One monomial `c · u^p u_x^q u_xx^r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: f64,
    /// Powers of `(u, u_x, u_xx)`.
    pub powers: [u32; 3],
}

impl Term {
    pub fn new(coeff: f64, powers: [u32; 3]) -> Self {
        Term { coeff, powers }
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    fn eval(&self, v: [f64; 3]) -> f64 {
        let mut acc = self.coeff;
        for i in 0..3 {
            acc *= v[i].powi(self.powers[i] as i32);
        }
        acc
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        for (name, &p) in ["u", "ux", "uxx"].iter().zip(&self.powers) {
            match p {
                0 => {}
                1 => write!(f, " {name}")?,
                _ => write!(f, " {name}^{p}")?,
            }
        }
        Ok(())
    }
}

/// `P = Q₀(u, u_x, u_xx) ∂_x³u + Q₁(u, u_x, u_xx)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NonlinearitySpec {
    q0: Vec<Term>,
    q1: Vec<Term>,
}

impl NonlinearitySpec {
    pub fn new(q0: Vec<Term>, q1: Vec<Term>) -> Result<Self> {
        for t in &q0 {
            if t.degree() < 1 {
                return Err(invalid("q0", format!("term `{t}` has degree 0")));
            }
        }
        for t in &q1 {
            if t.degree() < 2 {
                return Err(invalid("q1", format!("term `{t}` has degree below 2")));
            }
        }
        if q0.iter().chain(&q1).any(|t| !t.coeff.is_finite()) {
            return Err(invalid("coefficients", "non-finite coefficient"));
        }
        Ok(NonlinearitySpec { q0, q1 })
    }

    /// The linear flow.
    pub fn zero() -> Self {
        NonlinearitySpec::default()
    }

    pub fn q0(&self) -> &[Term] {
        &self.q0
    }

    pub fn q1(&self) -> &[Term] {
        &self.q1
    }

    pub fn is_zero(&self) -> bool {
        self.q0.iter().chain(&self.q1).all(|t| t.coeff == 0.0)
    }

    fn active(&self) -> impl Iterator<Item = (&Term, bool)> {
        self.q0
            .iter()
            .map(|t| (t, true))
            .chain(self.q1.iter().map(|t| (t, false)))
            .filter(|(t, _)| t.coeff != 0.0)
    }

    /// Largest total polynomial degree of `P`, counting `∂_x³u` in `Q₀` terms.
    pub fn max_degree(&self) -> u32 {
        self.active()
            .map(|(t, third)| t.degree() + third as u32)
            .max()
            .unwrap_or(1)
    }

    /// `2/(d+1)`: the dealiasing fraction that removes all aliasing from
    /// products of degree `d`.
    pub fn required_dealias_fraction(&self) -> f64 {
        2.0 / (self.max_degree() as f64 + 1.0)
    }

    /// `P` at one collocation point from `(u, u_x, u_xx, u_xxx)`.
    pub fn eval(&self, d: [f64; 4]) -> f64 {
        let v = [d[0], d[1], d[2]];
        let q0: f64 = self.q0.iter().map(|t| t.eval(v)).sum();
        let q1: f64 = self.q1.iter().map(|t| t.eval(v)).sum();
        q0 * d[3] + q1
    }

    /// Compact text form, terms separated by `;`, with `uxxx` marking `Q₀`.
    pub fn describe(&self) -> String {
        let mut parts: Vec<String> = self.q0.iter().map(|t| format!("{t} uxxx")).collect();
        parts.extend(self.q1.iter().map(|t| t.to_string()));
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join("; ")
        }
    }
}

/// Named equations of the class.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPreset {
    pub name: String,
    pub spec: NonlinearitySpec,
}

pub const PRESET_NAMES: [&str; 6] = ["linear", "kdv5", "benney1", "benney2", "lisher", "ivp17"];

impl ModelPreset {
    fn make(name: &str, q0: Vec<Term>, q1: Vec<Term>) -> Self {
        ModelPreset {
            name: name.to_string(),
            spec: NonlinearitySpec::new(q0, q1).expect("preset terms are well-formed"),
        }
    }

    pub fn linear() -> Self {
        Self::make("linear", vec![], vec![])
    }

    /// `10 u u_xxx + 20 u_x u_xx − 30 u² u_x`.
    pub fn kdv5() -> Self {
        Self::make(
            "kdv5",
            vec![Term::new(10.0, [1, 0, 0])],
            vec![Term::new(20.0, [0, 1, 1]), Term::new(-30.0, [2, 1, 0])],
        )
    }

    /// `c₁ u u_x`.
    pub fn benney1(c1: f64) -> Self {
        Self::make("benney1", vec![], vec![Term::new(c1, [1, 1, 0])])
    }

    /// `u u_xxx + 2 u_x u_xx`.
    pub fn benney2() -> Self {
        Self::make(
            "benney2",
            vec![Term::new(1.0, [1, 0, 0])],
            vec![Term::new(2.0, [0, 1, 1])],
        )
    }

    /// `(u + u²) u_x + (1 + u)(u_x u_xx + u u_xxx)`.
    pub fn lisher() -> Self {
        Self::make(
            "lisher",
            vec![Term::new(1.0, [1, 0, 0]), Term::new(1.0, [2, 0, 0])],
            vec![
                Term::new(1.0, [1, 1, 0]),
                Term::new(1.0, [2, 1, 0]),
                Term::new(1.0, [0, 1, 1]),
                Term::new(1.0, [1, 1, 1]),
            ],
        )
    }

    /// `b₁ u u_xxx + b₂ u_x u_xx + b₃ u² u_x`.
    pub fn ivp17(b1: f64, b2: f64, b3: f64) -> Self {
        Self::make(
            "ivp17",
            vec![Term::new(b1, [1, 0, 0])],
            vec![Term::new(b2, [0, 1, 1]), Term::new(b3, [2, 1, 0])],
        )
    }

    /// Looks a preset up by name. `params` feeds `c₁` (benney1, default 1)
    /// or `b₁, b₂, b₃` (ivp17, default 1, 1, 1).
    pub fn by_name(name: &str, params: &[f64]) -> Result<Self> {
        let p = |i: usize| params.get(i).copied().unwrap_or(1.0);
        let expected = match name {
            "benney1" => 1,
            "ivp17" => 3,
            _ => 0,
        };
        if params.len() > expected {
            return Err(invalid(
                "preset_params",
                format!("preset `{name}` takes {expected} parameters, got {}", params.len()),
            ));
        }
        Ok(match name {
            "linear" => Self::linear(),
            "kdv5" => Self::kdv5(),
            "benney1" => Self::benney1(p(0)),
            "benney2" => Self::benney2(),
            "lisher" => Self::lisher(),
            "ivp17" => Self::ivp17(p(0), p(1), p(2)),
            _ => {
                return Err(invalid(
                    "preset",
                    format!("unknown preset `{name}`; expected one of {PRESET_NAMES:?}"),
                ))
            }
        })
    }
}

/// Collocation values of `u(·, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub t: f64,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, t: f64) -> Result<Self> {
        if values.len() != grid.m() {
            return Err(invalid(
                "values",
                format!("{} samples for M = {}", values.len(), grid.m()),
            ));
        }
        Ok(Field { grid, values, t })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.xs().into_iter().map(f).collect();
        Field {
            grid,
            values,
            t: 0.0,
        }
    }

    /// `∫ u dx` (exact for band-limited `u`).
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    /// `∫ u² dx`.
    pub fn l2_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.dx()
    }

    /// Share of `∫u²` in `|x| ≥ (1 − SENTINEL_BAND) L`.
    pub fn boundary_fraction(&self) -> f64 {
        let edge = (1.0 - SENTINEL_BAND) * self.grid.l();
        let (mut outer, mut total) = (0.0, 0.0);
        for (j, v) in self.values.iter().enumerate() {
            let w = v * v;
            total += w;
            if self.grid.x(j).abs() >= edge {
                outer += w;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// FFT plans and spectral derivatives for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.m());
        let inverse = planner.plan_fft_inverse(grid.m());
        let k = (0..grid.m()).map(|i| grid.wavenumber(i)).collect();
        Spectral {
            grid,
            forward,
            inverse,
            k,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn to_spectrum(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    pub fn to_values(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.grid.m() as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// `(ik)^order`, with the Nyquist slot set to zero for odd orders.
    fn symbol(&self, i: usize, order: u32) -> Complex64 {
        let nyquist = i == self.grid.m() / 2;
        if nyquist && order % 2 == 1 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, self.k[i]).powu(order)
    }

    /// `∂_x^order` of spectrum `s`, returned in collocation space.
    pub fn derivative_of_spectrum(&self, s: &[Complex64], order: u32) -> Vec<f64> {
        let d: Vec<Complex64> = s
            .iter()
            .enumerate()
            .map(|(i, &c)| c * self.symbol(i, order))
            .collect();
        self.to_values(&d)
    }

    /// `[u, ∂u, …, ∂^max_order u]` without dealiasing.
    pub fn derivatives(&self, values: &[f64], max_order: u32) -> Vec<Vec<f64>> {
        let s = self.to_spectrum(values);
        (0..=max_order)
            .map(|o| {
                if o == 0 {
                    values.to_vec()
                } else {
                    self.derivative_of_spectrum(&s, o)
                }
            })
            .collect()
    }
}

/// Integrating-factor RK4 stepper for a fixed grid and nonlinearity.
#[derive(Debug, Clone)]
pub struct Solver {
    spectral: Spectral,
    spec: NonlinearitySpec,
    warnings: Vec<String>,
}

impl Solver {
    pub fn new(grid: Grid, spec: NonlinearitySpec) -> Self {
        let mut warnings = Vec::new();
        let required = spec.required_dealias_fraction();
        if !spec.is_zero() && grid.dealias_fraction() > required + 1e-12 {
            warnings.push(format!(
                "dealias fraction {:.4} exceeds {:.4} required for degree-{} products; \
                 aliasing is not fully removed",
                grid.dealias_fraction(),
                required,
                spec.max_degree()
            ));
        }
        Solver {
            spectral: Spectral::new(grid),
            spec,
            warnings,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.spectral.grid
    }

    pub fn spec(&self) -> &NonlinearitySpec {
        &self.spec
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `e^{i k⁵ h}`; the Nyquist slot keeps a zero symbol.
    fn propagator(&self, h: f64) -> Vec<Complex64> {
        let g = self.grid();
        (0..g.m())
            .map(|i| {
                if i == g.m() / 2 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, self.spectral.k[i].powi(5) * h)
                }
            })
            .collect()
    }

    /// `−P̂` from the dealiased spectrum `s`.
    fn nonlinear(&self, s: &[Complex64]) -> Vec<Complex64> {
        let g = self.grid();
        let m = g.m();
        if self.spec.is_zero() {
            return vec![Complex64::new(0.0, 0.0); m];
        }
        let masked: Vec<Complex64> = s
            .iter()
            .enumerate()
            .map(|(i, &c)| if g.kept(i) { c } else { Complex64::new(0.0, 0.0) })
            .collect();
        let d: Vec<Vec<f64>> = (0..=3)
            .map(|o| self.spectral.derivative_of_spectrum(&masked, o))
            .collect();
        let p: Vec<f64> = (0..m)
            .map(|j| -self.spec.eval([d[0][j], d[1][j], d[2][j], d[3][j]]))
            .collect();
        let mut out = self.spectral.to_spectrum(&p);
        for (i, c) in out.iter_mut().enumerate() {
            if !g.kept(i) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    fn step_spectrum(&self, s: &[Complex64], dt: f64, e: &[Complex64], e2: &[Complex64]) -> Vec<Complex64> {
        if self.spec.is_zero() {
            return s.iter().zip(e).map(|(a, b)| a * b).collect();
        }
        let m = s.len();
        let h2 = 0.5 * dt;
        let k1 = self.nonlinear(s);
        let a: Vec<Complex64> = (0..m).map(|i| e2[i] * (s[i] + h2 * k1[i])).collect();
        let k2 = self.nonlinear(&a);
        let b: Vec<Complex64> = (0..m).map(|i| e2[i] * s[i] + h2 * k2[i]).collect();
        let k3 = self.nonlinear(&b);
        let c: Vec<Complex64> = (0..m).map(|i| e[i] * s[i] + dt * e2[i] * k3[i]).collect();
        let k4 = self.nonlinear(&c);
        (0..m)
            .map(|i| {
                e[i] * s[i] + dt / 6.0 * (e[i] * k1[i] + 2.0 * e2[i] * (k2[i] + k3[i]) + k4[i])
            })
            .collect()
    }

    /// The forcing `F = −Π P(Π u)` actually integrated, as a spectrum.
    pub fn forcing(&self, values: &[f64]) -> Vec<Complex64> {
        self.nonlinear(&self.spectral.to_spectrum(values))
    }

    /// Advances `f` by `dt`.
    pub fn step(&self, f: &Field, dt: f64) -> Result<Field> {
        self.steps(f, dt, 1)
    }

    /// Advances `f` by `count` steps of size `dt`.
    pub fn steps(&self, f: &Field, dt: f64, count: usize) -> Result<Field> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("{dt} must be positive")));
        }
        if f.grid != *self.grid() {
            return Err(invalid("field", "grid does not match the solver"));
        }
        if !f.is_finite() {
            return Err(Error::NumericalDefect(format!("non-finite input at t = {}", f.t)));
        }
        let (e, e2) = (self.propagator(dt), self.propagator(0.5 * dt));
        let mut s = self.spectral.to_spectrum(&f.values);
        for n in 0..count {
            s = self.step_spectrum(&s, dt, &e, &e2);
            if s.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(Error::NumericalDefect(format!(
                    "non-finite spectrum after step {} of {count} (t = {}, dt = {dt})",
                    n + 1,
                    f.t + (n + 1) as f64 * dt
                )));
            }
        }
        Ok(Field {
            grid: f.grid,
            values: self.spectral.to_values(&s),
            t: f.t + count as f64 * dt,
        })
    }
}

/// One step of the integrating-factor scheme.
pub fn step(f: &Field, spec: &NonlinearitySpec, dt: f64) -> Result<Field> {
    Solver::new(f.grid, spec.clone()).step(f, dt)
}

/// RK4's imaginary-axis stability bound, slightly reduced.
const RK4_IMAGINARY_LIMIT: f64 = 2.8;

/// Recommended `dt` from the advective scale of the nonlinearity.
///
/// Each term contributes `|c| A^{d−1} k_max^s`, where `d` is its degree
/// and `s` its total derivative count; the linear symbol needs no limit
/// because it is integrated exactly. Zero nonlinearity returns infinity.
pub fn stability_limit(grid: &Grid, spec: &NonlinearitySpec, amplitude: f64) -> f64 {
    if spec.is_zero() {
        return f64::INFINITY;
    }
    let k = grid.k_max();
    let a = amplitude.abs();
    let mut rate = 0.0;
    for (t, third) in spec.active() {
        let deg = t.degree() + third as u32;
        let derivs: u32 = t.powers[1] + 2 * t.powers[2] + 3 * third as u32;
        rate += t.coeff.abs() * a.powi(deg as i32 - 1) * k.powi(derivs as i32);
    }
    if rate == 0.0 {
        f64::INFINITY
    } else {
        RK4_IMAGINARY_LIMIT / rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Time between stored samples.
    pub cadence: f64,
    /// Boundary-mass threshold; `None` disables the sentinel.
    pub sentinel: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            cadence: 0.05,
            sentinel: Some(DEFAULT_SENTINEL),
        }
    }
}

/// Stored samples of a run, `samples[0]` being the initial field.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub spec: NonlinearitySpec,
    pub samples: Vec<Field>,
    pub dt: f64,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|f| f.t).collect()
    }
}

/// Steps `f0` to `t_final`, storing a sample every `options.cadence`.
///
/// The step is shrunk so that every sample time is hit exactly; the linear
/// flow jumps straight from sample to sample. Each observer sees every
/// stored sample.
pub fn evolve(
    f0: &Field,
    spec: &NonlinearitySpec,
    t_final: f64,
    dt: f64,
    options: EvolveOptions,
    observers: &mut [&mut dyn FnMut(&Field)],
) -> Result<Trajectory> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(invalid("T", format!("{t_final} must be positive")));
    }
    if !(options.cadence > 0.0 && options.cadence <= t_final) {
        return Err(invalid("cadence", format!("{} is not in (0, T]", options.cadence)));
    }
    let solver = Solver::new(f0.grid, spec.clone());
    let samples_n = (t_final / options.cadence).round().max(1.0) as usize;
    let cadence = t_final / samples_n as f64;
    let per_sample = if spec.is_zero() {
        1
    } else {
        (cadence / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize
    };
    let h = cadence / per_sample as f64;

    let check = |f: &Field| -> Result<()> {
        if let Some(limit) = options.sentinel {
            let fraction = f.boundary_fraction();
            if fraction > limit {
                return Err(Error::Wraparound { t: f.t, fraction });
            }
        }
        Ok(())
    };
    check(f0)?;
    let mut samples = vec![f0.clone()];
    for obs in observers.iter_mut() {
        obs(f0);
    }
    let mut cur = f0.clone();
    for i in 1..=samples_n {
        let mut next = solver.steps(&cur, h, per_sample)?;
        next.t = f0.t + i as f64 * cadence;
        check(&next)?;
        for obs in observers.iter_mut() {
            obs(&next);
        }
        samples.push(next.clone());
        cur = next;
    }
    Ok(Trajectory {
        spec: spec.clone(),
        samples,
        dt: h,
        warnings: solver.warnings().to_vec(),
    })
}

/// CSV checkpoint: `#`-prefixed header lines, then `x,u` rows.
pub fn checkpoint_csv(f: &Field, preset: &str, spec: &NonlinearitySpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# L={}", f.grid.l());
    let _ = writeln!(out, "# M={}", f.grid.m());
    let _ = writeln!(out, "# dealias_fraction={}", f.grid.dealias_fraction());
    let _ = writeln!(out, "# t={}", f.t);
    let _ = writeln!(out, "# preset={preset}");
    let _ = writeln!(out, "# coefficients={}", spec.describe());
    out.push_str("x,u\n");
    for (j, v) in f.values.iter().enumerate() {
        let _ = writeln!(out, "{},{:e}", f.grid.x(j), v);
    }
    out
}

/// Reads back the field written by [`checkpoint_csv`].
pub fn read_checkpoint(text: &str) -> Result<Field> {
    let bad = |reason: String| Error::Config {
        key: "checkpoint".into(),
        reason,
    };
    let mut header = std::collections::HashMap::new();
    let mut values = Vec::new();
    for line in text.lines() {
        if let Some(h) = line.strip_prefix("# ") {
            if let Some((k, v)) = h.split_once('=') {
                header.insert(k.to_string(), v.to_string());
            }
        } else if line == "x,u" || line.is_empty() {
            continue;
        } else {
            let (_, u) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("malformed row `{line}`")))?;
            values.push(u.parse::<f64>().map_err(|e| bad(format!("{e} in `{line}`")))?);
        }
    }
    let get = |k: &str| -> Result<f64> {
        header
            .get(k)
            .ok_or_else(|| bad(format!("missing header `{k}`")))?
            .parse::<f64>()
            .map_err(|e| bad(format!("header `{k}`: {e}")))
    };
    let grid = Grid::with_dealias(get("L")?, get("M")? as usize, get("dealias_fraction")?)?;
    Field::new(grid, values, get("t")?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(grid: Grid, amp: f64, sigma: f64) -> Field {
        Field::from_fn(grid, |x| amp * (-x * x / (2.0 * sigma * sigma)).exp())
    }

    #[test]
    fn grid_wavenumbers_and_mask() {
        let g = Grid::new(PI, 16).unwrap();
        let modes: Vec<i64> = (0..16).map(|i| g.mode(i)).collect();
        assert_eq!(modes[..8], [0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(modes[8], -8);
        assert_eq!(g.wavenumber(3), 3.0);
        let kept: Vec<i64> = (0..16).filter(|&i| g.kept(i)).map(|i| g.mode(i)).collect();
        assert_eq!(kept, vec![0, 1, 2, 3, 4, 5, -5, -4, -3, -2, -1]);
        assert_eq!(g.k_max(), 5.0);
        assert!(Grid::new(1.0, 100).is_err());
        assert!(Grid::new(0.0, 64).is_err());
    }

    #[test]
    fn single_mode_propagates_exactly() {
        let g = Grid::new(PI, 64).unwrap();
        let k = 7.0f64;
        let f = Field::from_fn(g, |x| (k * x).cos());
        let s = Solver::new(g, NonlinearitySpec::zero());
        let out = s.step(&f, 0.37).unwrap();
        for (j, v) in out.values.iter().enumerate() {
            let x = g.x(j);
            assert!((v - (k * x + k.powi(5) * 0.37).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_derivatives_of_a_mode() {
        let g = Grid::new(2.0 * PI, 64).unwrap();
        let sp = Spectral::new(g);
        let f: Vec<f64> = g.xs().iter().map(|x| (3.0 * x / 2.0).sin()).collect();
        let d = sp.derivatives(&f, 5);
        for (j, x) in g.xs().iter().enumerate() {
            let w = 1.5f64;
            assert!((d[1][j] - w * (w * x).cos()).abs() < 1e-12);
            assert!((d[3][j] + w.powi(3) * (w * x).cos()).abs() < 1e-11);
            assert!((d[5][j] - w.powi(5) * (w * x).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn degenerate_ivp17_is_linear() {
        let g = Grid::new(30.0, 256).unwrap();
        let f = gaussian(g, 0.3, 2.0);
        let lin = step(&f, &NonlinearitySpec::zero(), 1e-3).unwrap();
        let deg = step(&f, &ModelPreset::ivp17(0.0, 0.0, 0.0).spec, 1e-3).unwrap();
        assert_eq!(lin.values, deg.values);
    }

    #[test]
    fn richardson_order_on_kdv5() {
        let g = Grid::with_dealias(40.0, 512, 0.5).unwrap();
        let spec = ModelPreset::kdv5().spec;
        let f = gaussian(g, 0.05, 3.0);
        let s = Solver::new(g, spec);
        let t = 0.2;
        let run = |n: usize| s.steps(&f, t / n as f64, n).unwrap();
        let (a, b, c) = (run(10), run(20), run(40));
        let diff = |x: &Field, y: &Field| {
            x.values
                .iter()
                .zip(&y.values)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max)
        };
        let ratio = diff(&a, &b) / diff(&b, &c);
        assert!(ratio.log2() > 3.8, "ratio {ratio}");
    }

    #[test]
    fn dealias_warning_for_cubic_terms() {
        let g = Grid::new(10.0, 64).unwrap();
        assert_eq!(ModelPreset::kdv5().spec.max_degree(), 3);
        assert_eq!(ModelPreset::kdv5().spec.required_dealias_fraction(), 0.5);
        assert_eq!(ModelPreset::benney2().spec.required_dealias_fraction(), 2.0 / 3.0);
        assert_eq!(Solver::new(g, ModelPreset::kdv5().spec).warnings().len(), 1);
        assert!(Solver::new(g, ModelPreset::benney2().spec).warnings().is_empty());
        let strict = Grid::with_dealias(10.0, 64, 0.5).unwrap();
        assert!(Solver::new(strict, ModelPreset::kdv5().spec).warnings().is_empty());
    }

    #[test]
    fn stability_limit_scaling() {
        let g1 = Grid::new(100.0, 1024).unwrap();
        let g2 = Grid::new(100.0, 2048).unwrap();
        let b2 = ModelPreset::benney2().spec;
        let r = stability_limit(&g1, &b2, 0.01) / stability_limit(&g2, &b2, 0.01);
        assert!((r - 8.0).abs() < 0.2, "{r}");
        assert_eq!(stability_limit(&g1, &NonlinearitySpec::zero(), 1.0), f64::INFINITY);
    }

    #[test]
    fn lisher_matches_its_factored_form() {
        let spec = ModelPreset::lisher().spec;
        let d = [0.3, -0.7, 1.1, 0.4];
        let (u, ux, uxx, uxxx) = (d[0], d[1], d[2], d[3]);
        let p = (u + u * u) * ux + (1.0 + u) * (ux * uxx + u * uxxx);
        assert!((spec.eval(d) - p).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(NonlinearitySpec::new(vec![Term::new(1.0, [0, 0, 0])], vec![]).is_err());
        assert!(NonlinearitySpec::new(vec![], vec![Term::new(1.0, [0, 1, 0])]).is_err());
        assert!(ModelPreset::by_name("kdv7", &[]).is_err());
        assert!(ModelPreset::by_name("kdv5", &[1.0]).is_err());
        assert_eq!(ModelPreset::by_name("ivp17", &[2.0, 0.0, 1.0]).unwrap(), ModelPreset::ivp17(2.0, 0.0, 1.0));
    }

    #[test]
    fn checkpoint_round_trip() {
        let g = Grid::new(5.0, 32).unwrap();
        let mut f = gaussian(g, 1.0, 1.0);
        f.t = 0.25;
        let spec = ModelPreset::kdv5().spec;
        let back = read_checkpoint(&checkpoint_csv(&f, "kdv5", &spec)).unwrap();
        assert_eq!(back.grid, g);
        assert_eq!(back.t, 0.25);
        for (a, b) in back.values.iter().zip(&f.values) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn sentinel_trips_on_boundary_mass() {
        let g = Grid::new(10.0, 128).unwrap();
        let f = Field::from_fn(g, |x| (-(x - 9.0).powi(2)).exp());
        let r = evolve(&f, &NonlinearitySpec::zero(), 0.1, 0.1, EvolveOptions { cadence: 0.1, sentinel: Some(1e-10) }, &mut []);
        assert!(matches!(r, Err(Error::Wraparound { .. })));
    }

    #[test]
    fn evolve_hits_sample_times_and_calls_observers() {
        let g = Grid::with_dealias(40.0, 256, 0.5).unwrap();
        let f = gaussian(g, 0.01, 3.0);
        let mut seen = 0usize;
        let mut obs = |_: &Field| seen += 1;
        let tr = evolve(
            &f,
            &ModelPreset::kdv5().spec,
            0.2,
            0.003,
            EvolveOptions { cadence: 0.05, sentinel: Some(1e-10) },
            &mut [&mut obs],
        )
        .unwrap();
        assert_eq!(seen, 5);
        let times = tr.times();
        assert_eq!(times.len(), 5);
        assert!((times[4] - 0.2).abs() < 1e-15);
        assert!(tr.dt <= 0.003);
    }
}
