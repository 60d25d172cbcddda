//! The fundamental solution of `∂_t u = ∂_x^{2j+1} u`,
//! `K_j(x) = (1/π) ∫₀^∞ cos(xξ + ξ^{2j+1}) dξ`.
//!
//! With this sign convention `K_j` decays super-exponentially for `x → +∞`
//! and oscillates with algebraic decay for `x → −∞`. The reversed
//! convention is obtained by `x ↦ −x`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fit::{golden_min, line_fit, linear_least_squares};
use crate::quadrature::GaussLegendre;

/// Direct evaluation is supported for `|x| ≤ KERNEL_WINDOW`.
pub const KERNEL_WINDOW: f64 = 200.0;
/// Oscillations of the phase kept past the stationary point before the
/// analytic tail takes over.
pub const TAIL_OSCILLATIONS: f64 = 200.0;
/// Largest phase advance per quadrature panel.
const PANEL_PHASE: f64 = 2.0;
const PANEL_MAX: f64 = 0.1;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

fn order(j: u32) -> Result<i32> {
    match j {
        1 | 2 => Ok(2 * j as i32 + 1),
        _ => Err(invalid("j", format!("hierarchy index {j} not in {{1, 2}}"))),
    }
}

fn check_window(x: f64) -> Result<()> {
    if !(x.abs() <= KERNEL_WINDOW) {
        return Err(Error::KernelOutOfWindow {
            x,
            min: -KERNEL_WINDOW,
            max: KERNEL_WINDOW,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    /// Panel quadrature on `[0, Ξ]` plus the integrated-by-parts tail.
    Direct,
    /// Ray `arg ξ = π/(2(2j+1))` in the complex plane (`x ≥ 0` only).
    Contour,
}

impl KernelMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelMethod::Direct => "direct",
            KernelMethod::Contour => "contour",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub abs_err_est: f64,
    pub method: KernelMethod,
}

/// `K_j(x)` by direct quadrature with an analytic tail.
pub fn kernel_eval(x: f64, j: u32) -> Result<f64> {
    kernel_direct(x, j).map(|v| v.value)
}

/// `t^{−1/n} K_j(x t^{−1/n})`, the kernel of the flow at time `t > 0`.
pub fn kernel_at_time(x: f64, t: f64, j: u32) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid("t", format!("{t} must be positive")));
    }
    let n = order(j)? as f64;
    let s = t.powf(-1.0 / n);
    Ok(s * kernel_eval(x * s, j)?)
}

/// Direct evaluation with its error estimate.
pub fn kernel_direct(x: f64, j: u32) -> Result<KernelValue> {
    let n = order(j)?;
    check_window(x)?;
    let nf = n as f64;
    let phase = |s: f64| x * s + s.powi(n);
    let dphase = |s: f64| x + nf * s.powi(n - 1);

    let stationary = if x < 0.0 {
        (-x / nf).powf(1.0 / (nf - 1.0))
    } else {
        0.0
    };
    let target = phase(stationary) + 2.0 * PI * TAIL_OSCILLATIONS;
    let mut hi = stationary + 1.0;
    while phase(hi) < target {
        hi *= 1.5;
    }
    let mut lo = stationary;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phase(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let cutoff = hi;

    // φ' is increasing on ξ ≥ 0, so its panel maximum sits at an endpoint
    let g = rule();
    let mut s = 0.0;
    let mut acc = 0.0;
    let mut panels = 0usize;
    while s < cutoff {
        let mut h = PANEL_MAX.min(cutoff - s);
        for _ in 0..4 {
            let m = dphase(s).abs().max(dphase(s + h).abs());
            if m * h <= PANEL_PHASE {
                break;
            }
            h = PANEL_PHASE / m;
        }
        acc += g.integrate(|v| phase(v).cos(), s, s + h);
        s += h;
        panels += 1;
    }

    // ∫_Ξ^∞ e^{iφ} = e^{iφ(Ξ)} [iψ − ψψ' − iψ(ψ'² + ψψ'')] + …, ψ = 1/φ'
    let d1 = dphase(cutoff);
    let d2 = nf * (nf - 1.0) * cutoff.powi(n - 2);
    let d3 = nf * (nf - 1.0) * (nf - 2.0) * cutoff.powi(n - 3);
    let psi = 1.0 / d1;
    let psi1 = -d2 / (d1 * d1);
    let psi2 = -d3 / (d1 * d1) + 2.0 * d2 * d2 / (d1 * d1 * d1);
    let third = psi * (psi1 * psi1 + psi * psi2);
    let bracket = Complex64::new(-psi * psi1, psi - third);
    let tail = (Complex64::from_polar(1.0, phase(cutoff)) * bracket).re;

    let roundoff = f64::EPSILON * (panels as f64).sqrt() * 16.0;
    Ok(KernelValue {
        value: (acc + tail) / PI,
        // the omitted next term is smaller than the last kept one by about ψ'
        abs_err_est: (3.0 * third.abs() * psi1.abs() + roundoff) / PI,
        method: KernelMethod::Direct,
    })
}

/// `∫₀^∞ exp(i x r e^{iθ} − r^n) dr` along a ray.
fn ray_integral(x: f64, n: i32, theta: f64) -> Complex64 {
    let rot = Complex64::from_polar(1.0, theta);
    // e^{−r^n} < 1e−300 beyond this radius
    let radius = 700f64.powf(1.0 / n as f64);
    let decay = x * theta.sin();
    let freq = x * theta.cos();
    let g = rule();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut s = 0.0;
    while s < radius {
        let h = 0.05f64.min(PANEL_PHASE / (freq.abs() + decay.abs() + 1.0)).min(radius - s);
        acc += g.integrate_complex(
            |r| (Complex64::i() * x * r * rot - r.powi(n)).exp(),
            s,
            s + h,
        );
        s += h;
    }
    acc
}

/// Rotated-contour evaluation of `K_j(x)` for `x ≥ 0`.
pub fn kernel_contour(x: f64, j: u32) -> Result<KernelValue> {
    let n = order(j)?;
    if !(x >= 0.0) {
        return Err(invalid("x", format!("contour evaluation needs x >= 0, got {x}")));
    }
    check_window(x)?;
    let theta = PI / (2.0 * n as f64);
    let v = (Complex64::from_polar(1.0, theta) * ray_integral(x, n, theta)).re / PI;
    Ok(KernelValue {
        value: v,
        abs_err_est: 64.0 * f64::EPSILON,
        method: KernelMethod::Contour,
    })
}

/// Non-oscillating right-tail envelope `E_j(x) ≥ |K_j(x)|` for `x ≥ 0`.
///
/// For `j = 2` the real part of the single-saddle integral
/// `J = ∫_{arg ξ = π/10} − ∫_{arg ξ = π/2}` equals `π K₂`, and `|J|/π`
/// is the smooth modulus. For `j = 1` the kernel has no right zeros and
/// `E₁ = |K₁|`.
pub fn right_envelope(x: f64, j: u32) -> Result<f64> {
    let n = order(j)?;
    if j == 1 {
        return Ok(kernel_contour(x, j)?.value.abs());
    }
    if !(x >= 0.0) {
        return Err(invalid("x", format!("envelope needs x >= 0, got {x}")));
    }
    check_window(x)?;
    let theta = PI / (2.0 * n as f64);
    let slanted = Complex64::from_polar(1.0, theta) * ray_integral(x, n, theta);
    let vertical = Complex64::i() * ray_integral(x, n, PI / 2.0).re;
    Ok((slanted - vertical).norm() / PI)
}

/// Stationary-phase rate `c` in `K₂(x) ≈ e^{−c x^{5/4}}`.
pub fn predicted_right_rate() -> f64 {
    0.8 * 5f64.powf(-0.25) * (PI / 4.0).sin()
}

/// Sampled kernel values.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub j: u32,
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub methods: Vec<KernelMethod>,
    pub abs_err: Vec<f64>,
}

impl KernelTable {
    /// Direct evaluation at every sample.
    pub fn build(xs: &[f64], j: u32) -> Result<Self> {
        Self::build_with(xs, j, false)
    }

    /// Like [`KernelTable::build`], but samples with `x ≥ 0` use the contour.
    pub fn build_with(xs: &[f64], j: u32, contour_right: bool) -> Result<Self> {
        let mut t = KernelTable {
            j,
            xs: xs.to_vec(),
            values: Vec::with_capacity(xs.len()),
            methods: Vec::with_capacity(xs.len()),
            abs_err: Vec::with_capacity(xs.len()),
        };
        for &x in xs {
            let v = if contour_right && x >= 0.0 {
                kernel_contour(x, j)?
            } else {
                kernel_direct(x, j)?
            };
            t.values.push(v.value);
            t.methods.push(v.method);
            t.abs_err.push(v.abs_err_est);
        }
        Ok(t)
    }

    /// Uniform samples on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, step: f64, j: u32) -> Result<Self> {
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        let xs: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
        Self::build(&xs, j)
    }

    pub const CSV_HEADER: &'static str = "x,K,method,abs_err_est";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for i in 0..self.xs.len() {
            let _ = writeln!(
                out,
                "{},{:e},{},{:e}",
                self.xs[i],
                self.values[i],
                self.methods[i].as_str(),
                self.abs_err[i]
            );
        }
        out
    }
}

/// Result of [`fit_decay_envelope`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// `p` in `−log E(x) ≈ A + B log x + C x^p` on `[2, 8]`.
    pub right_exponent: f64,
    /// `C`, the right decay rate.
    pub right_rate: f64,
    /// `q` in `|K| ≈ c |x|^{−q}` at the local maxima on `[−40, −5]`.
    pub left_exponent: f64,
    pub right_rms: f64,
    pub left_rms: f64,
    pub left_maxima: usize,
}

pub const RIGHT_FIT_WINDOW: (f64, f64) = (2.0, 8.0);
pub const LEFT_FIT_WINDOW: (f64, f64) = (-40.0, -5.0);

fn right_rows(xs: &[f64], p: f64) -> Vec<Vec<f64>> {
    xs.iter().map(|&x| vec![1.0, x.ln(), x.powf(p)]).collect()
}

/// Fits the right-tail exponent and the left algebraic exponent.
pub fn fit_decay_envelope(table: &KernelTable) -> Result<DecayFit> {
    let j = table.j;
    let right: Vec<f64> = table
        .xs
        .iter()
        .cloned()
        .filter(|&x| x >= RIGHT_FIT_WINDOW.0 && x <= RIGHT_FIT_WINDOW.1)
        .collect();
    if right.len() < 8 {
        return Err(Error::IllConditionedFit(format!(
            "{} samples in the right window [2, 8]",
            right.len()
        )));
    }
    let spans_left = table.xs.iter().any(|&x| x <= LEFT_FIT_WINDOW.0 + 1.0)
        && table.xs.iter().any(|&x| x >= LEFT_FIT_WINDOW.1);
    if !spans_left {
        return Err(Error::IllConditionedFit(
            "table does not span the left window [-40, -5]".into(),
        ));
    }
    let neg_log: Vec<f64> = right
        .iter()
        .map(|&x| right_envelope(x, j).map(|e| -e.ln()))
        .collect::<Result<_>>()?;
    let rss = |p: f64| {
        linear_least_squares(&right_rows(&right, p), &neg_log).map_or(f64::INFINITY, |f| f.rms)
    };
    let p = golden_min(rss, 1.0, 2.0, 1e-7);
    let rfit = linear_least_squares(&right_rows(&right, p), &neg_log)?;

    // local maxima of |K| on the left, each refined by golden section
    let mut peaks_x = Vec::new();
    let mut peaks_v = Vec::new();
    let n = table.xs.len();
    for i in 1..n.saturating_sub(1) {
        let x = table.xs[i];
        if x < LEFT_FIT_WINDOW.0 || x > LEFT_FIT_WINDOW.1 {
            continue;
        }
        let (l, c, r) = (
            table.values[i - 1].abs(),
            table.values[i].abs(),
            table.values[i + 1].abs(),
        );
        if c > l && c >= r {
            let neg = |s: f64| kernel_eval(s, j).map_or(f64::INFINITY, |v| -v.abs());
            let xm = golden_min(neg, table.xs[i - 1], table.xs[i + 1], 1e-10);
            peaks_x.push(xm.abs().ln());
            peaks_v.push(kernel_eval(xm, j)?.abs().ln());
        }
    }
    if peaks_x.len() < 4 {
        return Err(Error::IllConditionedFit(format!(
            "{} left maxima found",
            peaks_x.len()
        )));
    }
    let lfit = line_fit(&peaks_x, &peaks_v)?;
    Ok(DecayFit {
        right_exponent: p,
        right_rate: rfit.coefficients[2],
        left_exponent: -lfit.coefficients[1],
        right_rms: rfit.rms,
        left_rms: lfit.rms,
        left_maxima: peaks_x.len(),
    })
}
