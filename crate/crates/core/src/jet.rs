//! Truncated Taylor jets of order five.
//!
//! A [`Jet`] stores the normalized Taylor coefficients `f^(k)(x0) / k!` for
//! `k = 0..=5`. Arithmetic on jets propagates all derivatives exactly (up to
//! rounding), which is how the weight module differentiates the smooth
//! cutoff and the composite exponent without hand-written Faà di Bruno
//! expansions.

use std::ops::{Add, Mul, Neg, Sub};

/// Highest derivative order carried by a jet.
pub const ORDER: usize = 5;

const FACTORIAL: [f64; ORDER + 1] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    coeffs: [f64; ORDER + 1],
}

impl Jet {
    pub fn constant(value: f64) -> Self {
        let mut coeffs = [0.0; ORDER + 1];
        coeffs[0] = value;
        Jet { coeffs }
    }

    /// The identity function `x ↦ x` expanded at `x0`.
    pub fn variable(x0: f64) -> Self {
        let mut coeffs = [0.0; ORDER + 1];
        coeffs[0] = x0;
        coeffs[1] = 1.0;
        Jet { coeffs }
    }

    /// Builds a jet from derivative values `f(x0), f'(x0), …, f^(5)(x0)`.
    pub fn from_derivatives(derivs: [f64; ORDER + 1]) -> Self {
        let mut coeffs = [0.0; ORDER + 1];
        for k in 0..=ORDER {
            coeffs[k] = derivs[k] / FACTORIAL[k];
        }
        Jet { coeffs }
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// The `k`-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        self.coeffs[k] * FACTORIAL[k]
    }

    pub fn derivatives(&self) -> [f64; ORDER + 1] {
        let mut out = [0.0; ORDER + 1];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.derivative(k);
        }
        out
    }

    pub fn scale(self, s: f64) -> Self {
        let mut coeffs = self.coeffs;
        coeffs.iter_mut().for_each(|c| *c *= s);
        Jet { coeffs }
    }

    pub fn exp(self) -> Self {
        let f = &self.coeffs;
        let mut g = [0.0; ORDER + 1];
        g[0] = f[0].exp();
        for k in 1..=ORDER {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * f[j] * g[k - j];
            }
            g[k] = acc / k as f64;
        }
        Jet { coeffs: g }
    }

    /// `1 / f`; requires a nonzero value.
    pub fn recip(self) -> Self {
        Jet::constant(1.0).div(self)
    }

    pub fn div(self, rhs: Jet) -> Self {
        let f = &self.coeffs;
        let g = &rhs.coeffs;
        let mut h = [0.0; ORDER + 1];
        for k in 0..=ORDER {
            let mut acc = f[k];
            for j in 1..=k {
                acc -= g[j] * h[k - j];
            }
            h[k] = acc / g[0];
        }
        Jet { coeffs: h }
    }

    /// `f^alpha` for a jet with positive value.
    pub fn powf(self, alpha: f64) -> Self {
        let f = &self.coeffs;
        let mut h = [0.0; ORDER + 1];
        h[0] = f[0].powf(alpha);
        for k in 1..=ORDER {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += (alpha * j as f64 - (k - j) as f64) * f[j] * h[k - j];
            }
            h[k] = acc / (k as f64 * f[0]);
        }
        Jet { coeffs: h }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut coeffs = self.coeffs;
        for (c, r) in coeffs.iter_mut().zip(rhs.coeffs) {
            *c += r;
        }
        Jet { coeffs }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut coeffs = [0.0; ORDER + 1];
        for i in 0..=ORDER {
            for j in 0..=(ORDER - i) {
                coeffs[i + j] += self.coeffs[i] * rhs.coeffs[j];
            }
        }
        Jet { coeffs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn exp_of_linear_function() {
        // d^k/dx^k e^{3x} = 3^k e^{3x}
        let j = Jet::variable(0.4).scale(3.0).exp();
        for k in 0..=ORDER {
            assert!(close(j.derivative(k), 3f64.powi(k as i32) * 1.2f64.exp(), 1e-13));
        }
    }

    #[test]
    fn powf_matches_falling_factorial() {
        let x = 1.7;
        let alpha = 1.25;
        let j = Jet::variable(x).powf(alpha);
        let mut fall = 1.0;
        for k in 0..=ORDER {
            assert!(close(j.derivative(k), fall * x.powf(alpha - k as f64), 1e-12));
            fall *= alpha - k as f64;
        }
    }

    #[test]
    fn reciprocal_of_variable() {
        let x = 0.8;
        let j = Jet::variable(x).recip();
        // d^k (1/x) = (-1)^k k! / x^{k+1}
        for k in 0..=ORDER {
            let expect = (-1f64).powi(k as i32) * FACTORIAL[k] / x.powi(k as i32 + 1);
            assert!(close(j.derivative(k), expect, 1e-12));
        }
    }

    #[test]
    fn product_rule_on_polynomials() {
        // (x^2)(x^3) = x^5, all derivatives at x = 2
        let x = Jet::variable(2.0);
        let p = (x * x) * (x * x * x);
        let expect = [32.0, 80.0, 160.0, 240.0, 240.0, 120.0];
        for k in 0..=ORDER {
            assert!(close(p.derivative(k), expect[k], 1e-13));
        }
    }
}
