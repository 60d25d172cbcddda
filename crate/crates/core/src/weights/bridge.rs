use crate::error::{invalid, Result};

/// The quartic `P_N(x, t)` that continues `e^{a x^{5/4}}` past `x = N`.
///
/// Coefficients are stored without the common factor `e^{a N^{5/4}}`, i.e.
/// `P_N = e^{a N^{5/4}} Σ q_k (x − N)^k`. Every quantity that the
/// certifier needs (the remainder `R_N`, the `a`-derivative `S_N`, lower-bound
/// brackets) is a polynomial in `y = x − N` on the same normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgePolynomial {
    n: f64,
    a: f64,
    q: [f64; 5],
    dq_da: [f64; 5],
}

impl BridgePolynomial {
    pub fn new(n: u32, a: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("N", "matching point must be at least 1"));
        }
        if !(a > 0.0) {
            return Err(invalid("a", format!("{a} must be positive")));
        }
        let nf = n as f64;
        let p = |e: f64| nf.powf(e);
        let q = [
            1.0,
            1.25 * a * p(0.25),
            (5.0 / 16.0) * (5.0 * a * a * p(0.5) + a * p(-0.75)) / 2.0,
            (5.0 / 64.0) * (25.0 * a.powi(3) * p(0.75) + 15.0 * a * a * p(-0.5) - 3.0 * a * p(-1.75))
                / 6.0,
            (5.0 / 256.0)
                * (125.0 * a.powi(4) * nf + 150.0 * a.powi(3) * p(-0.25) - 45.0 * a * a * p(-1.5)
                    + 21.0 * a * p(-2.75))
                / 24.0,
        ];
        let dq_da = [
            0.0,
            1.25 * p(0.25),
            (5.0 / 16.0) * (10.0 * a * p(0.5) + p(-0.75)) / 2.0,
            (5.0 / 64.0) * (75.0 * a * a * p(0.75) + 30.0 * a * p(-0.5) - 3.0 * p(-1.75)) / 6.0,
            (5.0 / 256.0)
                * (500.0 * a.powi(3) * nf + 450.0 * a * a * p(-0.25) - 90.0 * a * p(-1.5)
                    + 21.0 * p(-2.75))
                / 24.0,
        ];
        Ok(BridgePolynomial { n: nf, a, q, dq_da })
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `log e^{a N^{5/4}}`.
    pub fn log_scale(&self) -> f64 {
        self.a * self.n.powf(1.25)
    }

    /// Normalized coefficients `q_0..q_4`.
    pub fn normalized_coefficients(&self) -> [f64; 5] {
        self.q
    }

    /// Coefficients `c_0..c_4` including the factor `e^{a N^{5/4}}`.
    pub fn coefficients(&self) -> [f64; 5] {
        let s = self.log_scale().exp();
        self.q.map(|c| c * s)
    }

    /// `∂_x^j Q(y)` for the normalized polynomial, `j = 0..=5`.
    pub fn normalized_derivative(&self, y: f64, j: usize) -> f64 {
        poly_derivative(&self.q, y, j)
    }

    /// `∂_x^j P_N` at `x = N + y`.
    pub fn derivative(&self, y: f64, j: usize) -> f64 {
        self.normalized_derivative(y, j) * self.log_scale().exp()
    }

    /// `S_N(y) = ∂_a Q(y)`, so that `∂_t P_N = a' (S_N e^{a N^{5/4}} + N^{5/4} P_N)`.
    pub fn s_n(&self, y: f64) -> f64 {
        poly_derivative(&self.dq_da, y, 0)
    }

    fn remainder_coeffs(&self) -> [f64; 5] {
        let (a, n) = (self.a, self.n);
        [
            0.0,
            0.0,
            (5.0 / 16.0) * 0.5 * a * n.powf(-0.75),
            -(5.0 / 64.0) * 0.5 * a * n.powf(-1.75),
            (5.0 / 256.0)
                * (150.0 / 24.0 * a.powi(3) * n.powf(-0.25) - 45.0 / 24.0 * a * a * n.powf(-1.5)
                    + 21.0 / 24.0 * a * n.powf(-2.75)),
        ]
    }

    fn remainder_da_coeffs(&self) -> [f64; 5] {
        let (a, n) = (self.a, self.n);
        [
            0.0,
            0.0,
            (5.0 / 16.0) * 0.5 * n.powf(-0.75),
            -(5.0 / 64.0) * 0.5 * n.powf(-1.75),
            (5.0 / 256.0)
                * (450.0 / 24.0 * a * a * n.powf(-0.25) - 90.0 / 24.0 * a * n.powf(-1.5)
                    + 21.0 / 24.0 * n.powf(-2.75)),
        ]
    }

    /// The lower-order remainder `R_N(y)` carrying the negative coefficients.
    pub fn r_n(&self, y: f64) -> f64 {
        poly_derivative(&self.remainder_coeffs(), y, 0)
    }

    pub fn r_n_dx(&self, y: f64) -> f64 {
        poly_derivative(&self.remainder_coeffs(), y, 1)
    }

    /// `∂_t R_N / a' = ∂_a R_N`.
    pub fn r_n_da(&self, y: f64) -> f64 {
        poly_derivative(&self.remainder_da_coeffs(), y, 0)
    }

    /// Bracket on the right of the `R_N` lower bound.
    pub fn r_n_bracket(&self, y: f64) -> f64 {
        let (a, n) = (self.a, self.n);
        (a.powi(3) * n.powf(-0.25) + a * a * n.powf(-1.5) + a * n.powf(-2.75)) * y.powi(4)
            + a * n.powf(-1.75) * y.powi(3)
            + a * n.powf(-0.75) * y * y
    }

    pub fn r_n_dx_bracket(&self, y: f64) -> f64 {
        let (a, n) = (self.a, self.n);
        (a.powi(3) * n.powf(-0.25) + a * a * n.powf(-1.5) + a * n.powf(-2.75)) * y.powi(3)
            + a * n.powf(-1.75) * y * y
            + a * n.powf(-0.75) * y
    }

    pub fn r_n_da_bracket(&self, y: f64) -> f64 {
        let (a, n) = (self.a, self.n);
        (a * a * n.powf(-0.25) + a * n.powf(-1.5) + n.powf(-2.75)) * y.powi(4)
            + n.powf(-1.75) * y.powi(3)
            + n.powf(-0.75) * y * y
    }

    /// Bracket of the positivity bound on `P_N / e^{a N^{5/4}}`.
    pub fn p_n_bracket(&self, y: f64) -> f64 {
        let (a, n) = (self.a, self.n);
        1.0 + a * n.powf(0.25) * y
            + (a * a * n.sqrt() + a * n.powf(-0.75)) * y * y / 2.0
            + (a.powi(3) * n.powf(0.75) + a * a * n.powf(-0.5) + a * n.powf(-1.75)) * y.powi(3) / 6.0
            + (a.powi(4) * n + a.powi(3) * n.powf(-0.25) + a * a * n.powf(-1.5) + a * n.powf(-2.75))
                * y.powi(4)
                / 24.0
    }

    /// Explicit lower bound on `∂_x P_N / e^{a N^{5/4}}` (no free constant).
    pub fn p_n_dx_lower(&self, y: f64) -> f64 {
        let (a, n) = (self.a, self.n);
        1.25 * a * n.powf(0.25)
            + (25.0 / 16.0) * a * a * n.sqrt() * y
            + (125.0 / 64.0) * a.powi(3) * n.powf(0.75) / 2.0 * y * y
            + (625.0 / 256.0) * a.powi(4) * n / 6.0 * y.powi(3)
    }

    pub fn s_n_bracket(&self, y: f64) -> f64 {
        let (a, n) = (self.a, self.n);
        n.powf(0.25) * y
            + (a * n.sqrt() + n.powf(-0.75)) * y * y / 2.0
            + (a * a * n.powf(0.75) + a * n.powf(-0.5) + a * n.powf(-1.75)) * y.powi(3) / 6.0
            + (a.powi(3) * n + a * a * n.powf(-0.25) + a * n.powf(-1.5) + a * n.powf(-2.75))
                * y.powi(4)
                / 24.0
    }
}

/// `d^j/dy^j Σ c_k y^k` by Horner on the differentiated coefficients.
pub(crate) fn poly_derivative(c: &[f64; 5], y: f64, j: usize) -> f64 {
    if j > 4 {
        return 0.0;
    }
    let mut acc = 0.0;
    for k in (j..5).rev() {
        let mut falling = 1.0;
        for m in 0..j {
            falling *= (k - m) as f64;
        }
        acc = acc * y + c[k] * falling;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_match_closed_form_table() {
        let (n, a) = (10u32, 0.7);
        let bp = BridgePolynomial::new(n, a).unwrap();
        let nf = n as f64;
        let e = (a * nf.powf(1.25)).exp();
        let c = bp.coefficients();
        assert!((c[0] - e).abs() <= 1e-12 * e);
        assert!((c[1] - 1.25 * a * nf.powf(0.25) * e).abs() <= 1e-12 * e);
        let c4 = (5.0 / 256.0)
            * (125.0 * a.powi(4) * nf + 150.0 * a.powi(3) * nf.powf(-0.25)
                - 45.0 * a * a * nf.powf(-1.5)
                + 21.0 * a * nf.powf(-2.75))
            / 24.0
            * e;
        assert!((c[4] - c4).abs() <= 1e-12 * c4);
    }

    #[test]
    fn expanded_form_agrees_with_grouped_form() {
        // the grouped table and the expanded fractions are the same polynomial
        let bp = BridgePolynomial::new(7, 1.3).unwrap();
        let (a, n) = (1.3f64, 7.0f64);
        for i in 0..50 {
            let y = i as f64 * 0.3;
            let expanded = 1.0
                + 1.25 * a * n.powf(0.25) * y
                + (5.0 / 16.0) * (2.5 * a * a * n.sqrt() + 0.5 * a * n.powf(-0.75)) * y * y
                + (5.0 / 64.0)
                    * (25.0 / 6.0 * a.powi(3) * n.powf(0.75) + 15.0 / 6.0 * a * a * n.powf(-0.5)
                        - 0.5 * a * n.powf(-1.75))
                    * y.powi(3)
                + (5.0 / 256.0)
                    * (125.0 / 24.0 * a.powi(4) * n + 150.0 / 24.0 * a.powi(3) * n.powf(-0.25)
                        - 45.0 / 24.0 * a * a * n.powf(-1.5)
                        + 21.0 / 24.0 * a * n.powf(-2.75))
                    * y.powi(4);
            let got = bp.normalized_derivative(y, 0);
            assert!((got - expanded).abs() <= 1e-12 * expanded);
        }
    }

    #[test]
    fn s_n_is_a_derivative_of_q() {
        let (n, a, h) = (12u32, 0.9, 1e-6);
        let bp = BridgePolynomial::new(n, a).unwrap();
        let hi = BridgePolynomial::new(n, a + h).unwrap();
        let lo = BridgePolynomial::new(n, a - h).unwrap();
        for i in 0..20 {
            let y = i as f64 * 0.7;
            let fd = (hi.normalized_derivative(y, 0) - lo.normalized_derivative(y, 0)) / (2.0 * h);
            assert!((fd - bp.s_n(y)).abs() <= 1e-6 * (1.0 + fd.abs()));
            let fd_r = (hi.r_n(y) - lo.r_n(y)) / (2.0 * h);
            assert!((fd_r - bp.r_n_da(y)).abs() <= 1e-6 * (1.0 + fd_r.abs()));
        }
    }

    #[test]
    fn quartic_has_no_fifth_derivative() {
        let bp = BridgePolynomial::new(5, 1.0).unwrap();
        assert_eq!(bp.derivative(3.0, 5), 0.0);
    }

    #[test]
    fn boundary_value_is_the_scale() {
        let bp = BridgePolynomial::new(5, 1.0).unwrap();
        assert_eq!(bp.normalized_derivative(0.0, 0), 1.0);
        assert_eq!(bp.r_n(0.0), 0.0);
    }
}
