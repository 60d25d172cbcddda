use crate::error::{invalid, Result};

/// Signed Eulerian numbers: `∂^j φ_δ = β^j e^{βx} p_j(y) / (1 + y)^{j+1}`
/// with `y = δ e^{βx}`.
const EULERIAN: [&[f64]; 6] = [
    &[1.0],
    &[1.0],
    &[1.0, -1.0],
    &[1.0, -4.0, 1.0],
    &[1.0, -11.0, 11.0, -1.0],
    &[1.0, -26.0, 66.0, -26.0, 1.0],
];

/// `φ_δ(x) = e^{βx} / (1 + δ e^{βx})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KatoWeight {
    beta: f64,
    delta: f64,
}

impl KatoWeight {
    pub fn new(beta: f64, delta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid("beta", format!("{beta} must be positive")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", format!("{delta} is not in (0, 1)")));
        }
        Ok(KatoWeight { beta, delta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Returns `(βx, ln(1+y), y/(1+y), 1/(1+y))` without overflow.
    fn parts(&self, x: f64) -> (f64, f64, f64, f64) {
        let bx = self.beta * x;
        let ln_y = self.delta.ln() + bx;
        // ln(1 + y) evaluated stably for large y
        let softplus = if ln_y > 0.0 {
            ln_y + (-ln_y).exp().ln_1p()
        } else {
            ln_y.exp().ln_1p()
        };
        let s = (-softplus).exp();
        let r = if ln_y > 0.0 {
            1.0 / (1.0 + (-ln_y).exp())
        } else {
            let y = ln_y.exp();
            y / (1.0 + y)
        };
        (bx, softplus, r, s)
    }

    /// `e^{βx} / (1 + δ e^{βx})²`, the common envelope of all derivative bounds.
    pub fn envelope(&self, x: f64) -> f64 {
        let (bx, softplus, _, _) = self.parts(x);
        (bx - 2.0 * softplus).exp()
    }

    /// `∂_x^j φ_δ(x)` for `j = 0..=5`.
    pub fn eval(&self, x: f64, j: usize) -> f64 {
        assert!(j <= 5, "derivative order {j} > 5");
        let (bx, softplus, r, s) = self.parts(x);
        if j == 0 {
            return (bx - softplus).exp();
        }
        let log_env = bx - 2.0 * softplus;
        // p_j(y) / (1+y)^{j-1} = Σ e_i r^i s^{j-1-i}
        let coeffs = EULERIAN[j];
        let mut acc = 0.0;
        for (i, &e) in coeffs.iter().enumerate() {
            acc += e * r.powi(i as i32) * s.powi((j - 1 - i) as i32);
        }
        self.beta.powi(j as i32) * log_env.exp() * acc
    }

    /// `(∂_x³ φ_δ)² / ∂_x φ_δ`.
    pub fn ratio(&self, x: f64) -> f64 {
        let (bx, softplus, r, s) = self.parts(x);
        let log_env = bx - 2.0 * softplus;
        let q3 = s * s - 4.0 * r * s + r * r;
        self.beta.powi(5) * log_env.exp() * q3 * q3
    }
}

/// Operation-table alias for [`KatoWeight::eval`].
pub fn kato_eval(kw: &KatoWeight, x: f64, j: usize) -> f64 {
    kw.eval(x, j)
}

/// Operation-table alias for [`KatoWeight::ratio`].
pub fn kato_ratio(kw: &KatoWeight, x: f64) -> f64 {
    kw.ratio(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_derivative_at_origin() {
        let kw = KatoWeight::new(1.0, 0.5).unwrap();
        assert!((kw.eval(0.0, 2) - 0.5 / 3.375).abs() < 1e-15);
    }

    #[test]
    fn saturates_at_inverse_delta() {
        let kw = KatoWeight::new(0.7, 0.2).unwrap();
        assert!((kw.eval(2000.0, 0) - 5.0).abs() < 1e-12);
        for i in -200..200 {
            let v = kw.eval(i as f64 * 0.25, 0);
            assert!(v > 0.0 && v < 5.0);
        }
    }

    #[test]
    fn closed_forms_agree_with_direct_formulas() {
        let (beta, delta) = (0.8, 0.3);
        let kw = KatoWeight::new(beta, delta).unwrap();
        for i in -40..40 {
            let x = i as f64 * 0.2;
            let e = (beta * x).exp();
            let y = delta * e;
            let d1 = beta * e / (1.0 + y).powi(2);
            let d2 = beta * beta * e * (1.0 - y) / (1.0 + y).powi(3);
            let d3 = beta.powi(3) * e * (1.0 - 4.0 * y + y * y) / (1.0 + y).powi(4);
            assert!((kw.eval(x, 0) - e / (1.0 + y)).abs() < 1e-13 * e);
            assert!((kw.eval(x, 1) - d1).abs() < 1e-13 * (1.0 + d1));
            assert!((kw.eval(x, 2) - d2).abs() < 1e-13 * (1.0 + d2.abs()));
            assert!((kw.eval(x, 3) - d3).abs() < 1e-13 * (1.0 + d3.abs()));
            assert!((kw.ratio(x) - d3 * d3 / d1).abs() < 1e-12 * (1.0 + d3 * d3 / d1));
        }
    }

    #[test]
    fn higher_derivatives_match_finite_differences() {
        let kw = KatoWeight::new(1.1, 0.4).unwrap();
        let h = 1e-4;
        for i in -20..20 {
            let x = i as f64 * 0.3;
            for j in 3..=5 {
                let fd = (kw.eval(x + h, j - 1) - kw.eval(x - h, j - 1)) / (2.0 * h);
                assert!((fd - kw.eval(x, j)).abs() < 1e-6 * (1.0 + fd.abs()), "j={j} x={x}");
            }
        }
    }

    #[test]
    fn no_overflow_far_right() {
        let kw = KatoWeight::new(2.0, 0.01).unwrap();
        for j in 0..=5 {
            assert!(kw.eval(1e4, j).is_finite());
        }
        assert!(kw.ratio(1e4).is_finite());
    }

    #[test]
    fn validation() {
        assert!(KatoWeight::new(0.0, 0.5).is_err());
        assert!(KatoWeight::new(1.0, 1.0).is_err());
        assert!(KatoWeight::new(1.0, 0.0).is_err());
    }
}
