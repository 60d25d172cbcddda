//! Closed-form weight families used by the energy estimates.
//!
//! [`PiecewiseWeight`] is the four-region weight `φ_N(x, t)` built from a
//! moving exponential core `e^{a(t) x^{5/4}}` and a quartic Taylor bridge
//! past `x = N`; [`KatoWeight`] is the saturated exponential
//! `e^{βx} / (1 + δ e^{βx})`.

mod bridge;
mod kato;
mod piecewise;

pub use bridge::BridgePolynomial;
pub use kato::{kato_eval, kato_ratio, KatoWeight};
pub use piecewise::{
    cutoff, cutoff_jet, phi_eval, phi_time_derivative, profile_jet, PiecewiseWeight, Region,
};

use crate::error::{invalid, Result};

/// `5^5 / 4^5`, the scale shared by every fifth-derivative coefficient.
pub const FIVE_OVER_FOUR_POW5: f64 = 3125.0 / 1024.0;

/// The Young-inequality coefficient `25 / (4 (5 - ε))`.
pub fn young_coefficient(epsilon: f64) -> f64 {
    25.0 / (4.0 * (5.0 - epsilon))
}

/// `k(ε) = (5⁵/4⁵)(3/2 + 25/(4(5−ε)))`.
pub fn k_of_epsilon(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok(FIVE_OVER_FOUR_POW5 * (1.5 + young_coefficient(epsilon)))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(invalid("epsilon", format!("{epsilon} is not in [0, 1)")));
    }
    Ok(())
}

/// Parameters `(a₀, ε, N)` of the weight family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    a0: f64,
    epsilon: f64,
    n: u32,
}

impl WeightParams {
    pub fn new(a0: f64, epsilon: f64, n: u32) -> Result<Self> {
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(invalid("a0", format!("{a0} must be positive and finite")));
        }
        check_epsilon(epsilon)?;
        if n == 0 {
            return Err(invalid("N", "matching point must be at least 1"));
        }
        Ok(WeightParams { a0, epsilon, n })
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n(&self) -> u32 {
        self.n
    }
}

/// The shrinking rate `a(t) = a₀ / (1 + κ a₀⁴ t)^{1/4}`, solving `a' = −k a⁵`
/// with `κ = 4k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayLaw {
    a0: f64,
    kappa: f64,
}

impl DecayLaw {
    pub fn new(a0: f64, kappa: f64) -> Result<Self> {
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(invalid("a0", format!("{a0} must be positive and finite")));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(invalid("kappa", format!("{kappa} must be positive and finite")));
        }
        Ok(DecayLaw { a0, kappa })
    }

    /// The law attached to `k(ε)`, i.e. `κ = 4 k(ε)`.
    pub fn from_epsilon(a0: f64, epsilon: f64) -> Result<Self> {
        DecayLaw::new(a0, 4.0 * k_of_epsilon(epsilon)?)
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// The ODE coefficient `k = κ / 4`.
    pub fn k(&self) -> f64 {
        self.kappa / 4.0
    }

    /// `a(t)`; rejects negative times.
    pub fn a(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(invalid("t", format!("{t} must be nonnegative")));
        }
        Ok(self.a_unchecked(t))
    }

    pub(crate) fn a_unchecked(&self, t: f64) -> f64 {
        self.a0 / (1.0 + self.kappa * self.a0.powi(4) * t).powf(0.25)
    }

    /// `a'(t) = −k a(t)⁵`.
    pub fn a_prime(&self, t: f64) -> Result<f64> {
        let a = self.a(t)?;
        Ok(-self.k() * a.powi(5))
    }
}

/// Convenience wrapper matching the operation table: `a(t)` for a law.
pub fn decay_a(law: &DecayLaw, t: f64) -> Result<f64> {
    law.a(t)
}

/// Least integer strictly above `c^{4/5} a₀^{-4/5}`.
pub fn n0_threshold(a0: f64, c: f64) -> Result<u32> {
    if !(a0 > 0.0) {
        return Err(invalid("a0", format!("{a0} must be positive")));
    }
    if !(c > 0.0) {
        return Err(invalid("c", format!("{c} must be positive")));
    }
    let bound = (c / a0).powf(0.8);
    Ok(bound.floor() as u32 + 1)
}

/// `⟨x⟩ = (1 + x²)^{1/2}`.
pub fn japanese(x: f64) -> f64 {
    x.hypot(1.0)
}
