//! Integrals of collocated fields against weights with isolated kinks.
//!
//! The field is evaluated off-grid through its trigonometric interpolant,
//! and integrals use Gauss–Legendre panels whose edges sit on the weight's
//! breakpoints, graded geometrically towards each breakpoint.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::quadrature::GaussLegendre;
use crate::solver::{Field, Grid, Spectral};
use crate::weights::PiecewiseWeight;

/// Quadrature nodes and weights on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct Nodes {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

/// Levels of geometric grading on each side of a breakpoint.
const GRADING_LEVELS: i32 = 14;

impl Nodes {
    /// Panels of width at most `h` on `[lo, hi]`, split at `breakpoints`.
    pub fn new(lo: f64, hi: f64, breakpoints: &[f64], h: f64) -> Result<Self> {
        if !(lo < hi && h > 0.0) {
            return Err(invalid("window", format!("[{lo}, {hi}] with panel width {h}")));
        }
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .cloned()
            .filter(|&b| b > lo && b < hi)
            .collect();
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let mut edges = Vec::new();
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let graded_left = breakpoints.contains(&a);
            let graded_right = breakpoints.contains(&b);
            let g = (0.25 * (b - a)).min(h);
            let mut pts = vec![a, b];
            for k in 0..=GRADING_LEVELS {
                if graded_left {
                    pts.push(a + g * 2f64.powi(-k));
                }
                if graded_right {
                    pts.push(b - g * 2f64.powi(-k));
                }
            }
            let s = if graded_left { a + g } else { a };
            let e = if graded_right { b - g } else { b };
            let n = ((e - s) / h).ceil().max(1.0) as usize;
            for i in 1..n {
                pts.push(s + (e - s) * i as f64 / n as f64);
            }
            pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
            pts.dedup();
            for w in pts.windows(2) {
                edges.push((w[0], w[1]));
            }
        }
        let rule = GaussLegendre::new(16);
        let mut x = Vec::with_capacity(edges.len() * 16);
        let mut w = Vec::with_capacity(edges.len() * 16);
        for (a, b) in edges {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (&t, &wt) in rule.nodes().iter().zip(rule.weights()) {
                x.push(mid + half * t);
                w.push(wt * half);
            }
        }
        Ok(Nodes { x, w })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `Σ w_i f_i`.
    pub fn sum(&self, f: &[f64]) -> f64 {
        self.w.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

/// Modes below this share of the spectral maximum are roundoff and dropped.
pub const SPECTRAL_NOISE_FLOOR: f64 = 1e-13;

/// Highest mode carrying more than `tol` of the spectral maximum.
pub fn significant_modes(spec: &[Complex64], tol: f64) -> usize {
    let half = spec.len() / 2;
    let max = spec[..half].iter().map(|c| c.norm()).fold(0.0, f64::max);
    (1..half)
        .rev()
        .find(|&m| spec[m].norm() > tol * max)
        .unwrap_or(0)
}

/// Trigonometric interpolant of one field and its derivatives.
#[derive(Debug, Clone)]
pub struct Interpolant {
    grid: Grid,
    /// `coeffs[j][m] = (2/M) ŝ_m (ik_m)^j` for `m ≥ 1`; index 0 holds `ŝ₀/M`.
    coeffs: Vec<Vec<Complex64>>,
    modes: usize,
}

impl Interpolant {
    /// Interpolates `spectrum` (FFT order) with derivatives `0..=max_order`.
    pub fn from_spectrum(grid: Grid, spectrum: &[Complex64], max_order: u32) -> Self {
        Self::with_modes(grid, spectrum, max_order, significant_modes(spectrum, SPECTRAL_NOISE_FLOOR))
    }

    /// Keeps modes `0..=modes` only.
    pub fn with_modes(grid: Grid, spectrum: &[Complex64], max_order: u32, modes: usize) -> Self {
        let m = grid.m() as f64;
        let modes = modes.min(grid.m() / 2 - 1);
        let coeffs = (0..=max_order)
            .map(|j| {
                (0..=modes)
                    .map(|i| {
                        if i == 0 {
                            if j == 0 {
                                spectrum[0] / m
                            } else {
                                Complex64::new(0.0, 0.0)
                            }
                        } else {
                            spectrum[i] * Complex64::new(0.0, grid.wavenumber(i)).powu(j) * (2.0 / m)
                        }
                    })
                    .collect()
            })
            .collect();
        Interpolant {
            grid,
            coeffs,
            modes,
        }
    }

    pub fn from_field(sp: &Spectral, f: &Field, max_order: u32) -> Self {
        Self::from_spectrum(f.grid, &sp.to_spectrum(&f.values), max_order)
    }

    /// Largest wavenumber the interpolant carries.
    pub fn bandwidth(&self) -> f64 {
        self.grid.wavenumber(self.modes.max(1))
    }

    /// `∫ u v` over one period, from the coefficients of both interpolants.
    pub fn period_inner(&self, other: &Interpolant) -> f64 {
        let (a, b) = (&self.coeffs[0], &other.coeffs[0]);
        let tail: f64 = a
            .iter()
            .zip(b)
            .skip(1)
            .map(|(p, q)| (p * q.conj()).re)
            .sum();
        2.0 * self.grid.l() * (a[0].re * b[0].re + 0.5 * tail)
    }

    /// `out[j][i] = ∂^j u(xs[i])` for every stored order.
    pub fn eval(&self, xs: &[f64]) -> Vec<Vec<f64>> {
        self.eval_upto(xs, self.coeffs.len() as u32 - 1)
    }

    /// Like [`Self::eval`], restricted to orders `0..=max_order`.
    pub fn eval_upto(&self, xs: &[f64], max_order: u32) -> Vec<Vec<f64>> {
        let orders = self.coeffs.len().min(max_order as usize + 1);
        let mut out = vec![vec![0.0; xs.len()]; orders];
        let step = std::f64::consts::PI / self.grid.l();
        for (i, &x) in xs.iter().enumerate() {
            let z = Complex64::from_polar(1.0, step * (x + self.grid.l()));
            let mut zm = Complex64::new(1.0, 0.0);
            let mut acc = vec![0.0; orders];
            for (j, a) in acc.iter_mut().enumerate() {
                *a = self.coeffs[j][0].re;
            }
            for m in 1..=self.modes {
                zm *= z;
                for (j, a) in acc.iter_mut().enumerate() {
                    let c = self.coeffs[j][m];
                    *a += c.re * zm.re - c.im * zm.im;
                }
            }
            for j in 0..orders {
                out[j][i] = acc[j];
            }
        }
        out
    }
}

/// A weight known through its logarithm, with the points where it is not smooth.
pub trait WeightFn {
    fn log_weight(&self, x: f64) -> f64;
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UnitWeight;

impl WeightFn for UnitWeight {
    fn log_weight(&self, _: f64) -> f64 {
        0.0
    }
}

/// `e^{a x₊^{5/4}}`.
#[derive(Debug, Clone, Copy)]
pub struct PowerWeight {
    pub a: f64,
}

impl WeightFn for PowerWeight {
    fn log_weight(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.a * x.powf(1.25)
        } else {
            0.0
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0]
    }
}

/// `e^{2βx}`, the squared Kato weight.
#[derive(Debug, Clone, Copy)]
pub struct KatoSquared {
    pub beta: f64,
}

impl WeightFn for KatoSquared {
    fn log_weight(&self, x: f64) -> f64 {
        2.0 * self.beta * x
    }
}

/// `φ_N(·, t)`.
#[derive(Debug, Clone, Copy)]
pub struct PiecewiseAt<'a> {
    pub weight: &'a PiecewiseWeight,
    pub t: f64,
}

impl WeightFn for PiecewiseAt<'_> {
    fn log_weight(&self, x: f64) -> f64 {
        self.weight.log_ratios(x, self.t).0
    }
    fn breakpoints(&self) -> Vec<f64> {
        piecewise_breakpoints(self.weight)
    }
}

pub fn piecewise_breakpoints(w: &PiecewiseWeight) -> Vec<f64> {
    vec![0.0, 0.5, 0.75, 1.0, w.n()]
}

/// Panel width resolving `u²` for an interpolant of bandwidth `k`.
pub fn panel_width(bandwidth: f64) -> f64 {
    0.5f64.min(4.0 / (2.0 * bandwidth).max(1e-300))
}

/// `ln ∫_window u² e^{log_weight} dx`, stable when the weight overflows.
pub fn log_weighted_norm(f: &Field, weight: &dyn WeightFn, window: (f64, f64)) -> Result<f64> {
    let sp = Spectral::new(f.grid);
    let it = Interpolant::from_field(&sp, f, 0);
    let nodes = Nodes::new(window.0, window.1, &weight.breakpoints(), panel_width(it.bandwidth()))?;
    let u = it.eval(&nodes.x).swap_remove(0);
    let logs: Vec<f64> = nodes
        .x
        .iter()
        .zip(&u)
        .zip(&nodes.w)
        .map(|((&x, &v), &w)| {
            if v == 0.0 {
                f64::NEG_INFINITY
            } else {
                2.0 * v.abs().ln() + weight.log_weight(x) + w.ln()
            }
        })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let s: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    Ok(top + s.ln())
}

/// `∫_window u² e^{log_weight} dx`.
pub fn weighted_norm(f: &Field, weight: &dyn WeightFn, window: (f64, f64)) -> Result<f64> {
    Ok(log_weighted_norm(f, weight, window)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(30.0, 512).unwrap()
    }

    #[test]
    fn nodes_integrate_kinked_functions() {
        let nodes = Nodes::new(-3.0, 4.0, &[0.0, 1.0], 0.5).unwrap();
        let f: Vec<f64> = nodes.x.iter().map(|&x| x.max(0.0).powf(1.25)).collect();
        let exact = 4f64.powf(2.25) / 2.25;
        assert!((nodes.sum(&f) - exact).abs() < 1e-13 * exact);
        assert!(nodes.x.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn interpolant_reproduces_samples_and_derivatives() {
        let g = grid();
        let f = Field::from_fn(g, |x| (-x * x / 8.0).exp());
        let sp = Spectral::new(g);
        let it = Interpolant::from_field(&sp, &f, 2);
        let xs = [-1.3, 0.0, 0.77, 2.5];
        let v = it.eval(&xs);
        for (i, &x) in xs.iter().enumerate() {
            let e = (-x * x / 8.0).exp();
            assert!((v[0][i] - e).abs() < 1e-13);
            assert!((v[1][i] + x / 4.0 * e).abs() < 1e-13);
            assert!((v[2][i] - (x * x / 16.0 - 0.25) * e).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let f = Field::from_fn(grid(), |_| 0.0);
        assert_eq!(weighted_norm(&f, &UnitWeight, (-15.0, 15.0)).unwrap(), 0.0);
    }

    #[test]
    fn unit_weight_matches_parseval() {
        let g = grid();
        let f = Field::from_fn(g, |x| (-x * x / 18.0).exp() * (1.0 + 0.3 * x.sin()));
        let sp = Spectral::new(g);
        let s = sp.to_spectrum(&f.values);
        let parseval: f64 = s.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.dx() / g.m() as f64;
        let n = weighted_norm(&f, &UnitWeight, (-g.l(), g.l())).unwrap();
        assert!((n - parseval).abs() < 1e-10 * parseval);
    }

    #[test]
    fn log_space_survives_overflowing_weight() {
        let f = Field::from_fn(grid(), |x| (-x * x / 18.0).exp());
        let w = KatoSquared { beta: 400.0 };
        let l = log_weighted_norm(&f, &w, (-15.0, 15.0)).unwrap();
        assert!(l.is_finite() && l > 700.0);
        assert_eq!(weighted_norm(&f, &w, (-15.0, 15.0)).unwrap(), f64::INFINITY);
    }
}
