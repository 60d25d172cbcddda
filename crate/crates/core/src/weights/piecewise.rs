use super::{BridgePolynomial, DecayLaw, WeightParams};
use crate::error::{invalid, Result};
use crate::jet::Jet;

/// Which closed form of `φ_N` applies at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// `x ≤ 0`: `φ_N ≡ 1`.
    Flat,
    /// `0 < x < 1`: `e^{a φ(x)}` with the blended profile.
    Core,
    /// `1 ≤ x ≤ N`: `e^{a x^{5/4}}`.
    Power,
    /// `x > N`: the quartic bridge.
    Bridge,
}

fn bump_tail(s: Jet) -> Jet {
    // e^{-1/s}, only called for s > 0
    (-s.recip()).exp()
}

/// Jet of the smooth step `η`, equal to 0 on `x ≤ 1/2` and 1 on `x ≥ 3/4`.
pub fn cutoff_jet(x: f64) -> Jet {
    if x <= 0.5 {
        return Jet::constant(0.0);
    }
    if x >= 0.75 {
        return Jet::constant(1.0);
    }
    let s = (Jet::variable(x) - Jet::constant(0.5)).scale(4.0);
    let left = bump_tail(s);
    let right = bump_tail(Jet::constant(1.0) - s);
    left.div(left + right)
}

pub fn cutoff(x: f64) -> f64 {
    cutoff_jet(x).value()
}

/// Jet of the profile `φ(x) = (1 − η) x₊⁵ + η x^{5/4}` on `(−∞, 1]`.
pub fn profile_jet(x: f64) -> Jet {
    if x <= 0.0 {
        return Jet::constant(0.0);
    }
    let v = Jet::variable(x);
    let quintic = v * v * v * v * v;
    if x <= 0.5 {
        return quintic;
    }
    let root = v.powf(1.25);
    if x >= 0.75 {
        return root;
    }
    let eta = cutoff_jet(x);
    (Jet::constant(1.0) - eta) * quintic + eta * root
}

/// Derivative ratios `∂_x^j e^{a x^{5/4}} / e^{a x^{5/4}}` for `x > 0`.
fn power_ratios(a: f64, x: f64) -> [f64; 6] {
    let p = |e: f64| x.powf(e);
    [
        1.0,
        1.25 * a * p(0.25),
        (5.0 / 16.0) * (5.0 * a * a * p(0.5) + a * p(-0.75)),
        (5.0 / 64.0) * (25.0 * a.powi(3) * p(0.75) + 15.0 * a * a * p(-0.5) - 3.0 * a * p(-1.75)),
        (5.0 / 256.0)
            * (125.0 * a.powi(4) * x + 150.0 * a.powi(3) * p(-0.25) - 45.0 * a * a * p(-1.5)
                + 21.0 * a * p(-2.75)),
        (5.0 / 1024.0)
            * (625.0 * a.powi(5) * p(1.25) + 1250.0 * a.powi(4) - 375.0 * a.powi(3) * p(-1.25)
                + 375.0 * a * a * p(-2.5)
                - 231.0 * a * p(-3.75)),
    ]
}

/// The weight `φ_N(x, t)` with its decay law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseWeight {
    params: WeightParams,
    law: DecayLaw,
}

impl PiecewiseWeight {
    /// Weight with the decay law `κ = 4 k(ε)`.
    pub fn new(params: WeightParams) -> Result<Self> {
        let law = DecayLaw::from_epsilon(params.a0(), params.epsilon())?;
        Ok(PiecewiseWeight { params, law })
    }

    pub fn with_law(params: WeightParams, law: DecayLaw) -> Result<Self> {
        if law.a0() != params.a0() {
            return Err(invalid("law", "decay law a0 differs from weight a0"));
        }
        Ok(PiecewiseWeight { params, law })
    }

    pub fn params(&self) -> &WeightParams {
        &self.params
    }

    pub fn law(&self) -> &DecayLaw {
        &self.law
    }

    pub fn n(&self) -> f64 {
        self.params.n() as f64
    }

    pub fn region(&self, x: f64) -> Region {
        if x <= 0.0 {
            Region::Flat
        } else if x < 1.0 {
            Region::Core
        } else if x <= self.n() {
            Region::Power
        } else {
            Region::Bridge
        }
    }

    fn check(t: f64, j: usize) -> Result<()> {
        if !(t >= 0.0) {
            return Err(invalid("t", format!("{t} must be nonnegative")));
        }
        if j > 5 {
            return Err(invalid("j", format!("derivative order {j} exceeds 5")));
        }
        Ok(())
    }

    pub fn bridge(&self, t: f64) -> BridgePolynomial {
        BridgePolynomial::new(self.params.n(), self.law.a_unchecked(t))
            .expect("weight params already validated")
    }

    /// `(ln φ_N, [∂_x^j φ_N / φ_N; j = 0..=5])`, overflow-free.
    ///
    /// At `x = N` the ratios come from the power region, so `j = 5` is the
    /// left value; use [`Self::log_ratios_right`] for the bridge side.
    pub fn log_ratios(&self, x: f64, t: f64) -> (f64, [f64; 6]) {
        let a = self.law.a_unchecked(t);
        match self.region(x) {
            Region::Flat => (0.0, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            Region::Core => {
                let e = profile_jet(x).scale(a);
                let log = e.value();
                let ratios = (e - Jet::constant(log)).exp().derivatives();
                (log, ratios)
            }
            Region::Power => (a * x.powf(1.25), power_ratios(a, x)),
            Region::Bridge => self.bridge_log_ratios(x, t),
        }
    }

    fn bridge_log_ratios(&self, x: f64, t: f64) -> (f64, [f64; 6]) {
        let bp = self.bridge(t);
        let y = x - self.n();
        let q = bp.normalized_derivative(y, 0);
        let mut ratios = [0.0; 6];
        for (j, r) in ratios.iter_mut().enumerate() {
            *r = bp.normalized_derivative(y, j) / q;
        }
        (bp.log_scale() + q.ln(), ratios)
    }

    /// Like [`Self::log_ratios`] but uses the bridge formula at `x = N`.
    pub fn log_ratios_right(&self, x: f64, t: f64) -> (f64, [f64; 6]) {
        if x == self.n() {
            self.bridge_log_ratios(x, t)
        } else {
            self.log_ratios(x, t)
        }
    }

    /// `∂_x^j φ_N(x, t)`.
    pub fn eval(&self, x: f64, t: f64, j: usize) -> Result<f64> {
        Self::check(t, j)?;
        let (log, r) = self.log_ratios(x, t);
        Ok(log.exp() * r[j])
    }

    /// Right-sided value of `∂_x^j φ_N`; differs from [`Self::eval`] only at
    /// `x = N` for `j = 5`.
    pub fn eval_right(&self, x: f64, t: f64, j: usize) -> Result<f64> {
        Self::check(t, j)?;
        let (log, r) = self.log_ratios_right(x, t);
        Ok(log.exp() * r[j])
    }

    /// `∂_t φ_N / φ_N`.
    pub fn time_ratio(&self, x: f64, t: f64) -> f64 {
        let a = self.law.a_unchecked(t);
        let a_prime = -self.law.k() * a.powi(5);
        match self.region(x) {
            Region::Flat => 0.0,
            Region::Core => a_prime * profile_jet(x).value(),
            Region::Power => a_prime * x.powf(1.25),
            Region::Bridge => {
                let bp = self.bridge(t);
                let y = x - self.n();
                a_prime * (bp.s_n(y) / bp.normalized_derivative(y, 0) + self.n().powf(1.25))
            }
        }
    }

    /// `∂_t φ_N(x, t)`.
    pub fn time_derivative(&self, x: f64, t: f64) -> Result<f64> {
        Self::check(t, 0)?;
        let (log, _) = self.log_ratios(x, t);
        Ok(log.exp() * self.time_ratio(x, t))
    }
}

/// Operation-table alias for [`PiecewiseWeight::eval`].
pub fn phi_eval(w: &PiecewiseWeight, x: f64, t: f64, j: usize) -> Result<f64> {
    w.eval(x, t, j)
}

/// Operation-table alias for [`PiecewiseWeight::time_derivative`].
pub fn phi_time_derivative(w: &PiecewiseWeight, x: f64, t: f64) -> Result<f64> {
    w.time_derivative(x, t)
}
