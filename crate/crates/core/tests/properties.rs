//! Property tests over randomized parameters.

use proptest::prelude::*;

use fifth_decay::config::parse_coefficients;
use fifth_decay::decaylab::{trusted_right_edge, weighted_norm, DataProfile, InitialData, PowerWeight};
use fifth_decay::jet::Jet;
use fifth_decay::solver::{Field, Grid, NonlinearitySpec, Solver, Term};
use fifth_decay::weights::{
    k_of_epsilon, profile_jet, DecayLaw, KatoWeight, PiecewiseWeight, WeightParams,
};

fn weight(a0: f64, eps: f64, n: u32) -> PiecewiseWeight {
    PiecewiseWeight::new(WeightParams::new(a0, eps, n).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn params_accept_exactly_the_valid_range(a0 in -1.0..3.0f64, eps in -0.5..1.5f64, n in 0u32..50) {
        let ok = a0 > 0.0 && (0.0..1.0).contains(&eps) && n >= 1;
        prop_assert_eq!(WeightParams::new(a0, eps, n).is_ok(), ok);
    }

    #[test]
    fn decay_law_starts_at_a0_and_decreases(
        a0 in 0.1..3.0f64, eps in 0.0..0.99f64, t1 in 0.0..10.0f64, dt in 1e-6..10.0f64,
    ) {
        let law = DecayLaw::from_epsilon(a0, eps).unwrap();
        prop_assert_eq!(law.a(0.0).unwrap(), a0);
        prop_assert_eq!(law.kappa(), 4.0 * k_of_epsilon(eps).unwrap());
        let (x, y) = (law.a(t1).unwrap(), law.a(t1 + dt).unwrap());
        prop_assert!(y > 0.0 && y < x && x <= a0);
        // restarting the law from a(t₁) lands on a(t₁ + Δt)
        let restarted = DecayLaw::new(x, law.kappa()).unwrap().a(dt).unwrap();
        prop_assert!(rel(restarted, y) < 1e-12);
    }

    #[test]
    fn weight_is_positive_and_nondecreasing(
        a0 in 0.3..2.0f64, eps in 0.0..0.1f64, n in 5u32..40, x in -5.0..80.0f64, t in 0.0..1.0f64,
    ) {
        let w = weight(a0, eps, n);
        let (log, r) = w.log_ratios(x, t);
        prop_assert!(log.is_finite());
        prop_assert!(r[0] == 1.0);
        prop_assert!(r[1] >= 0.0, "phi' / phi = {} at x = {x}", r[1]);
    }

    #[test]
    fn c4_matching_at_n(a0 in 0.3..2.0f64, eps in 0.0..0.1f64, n in 5u32..40, t in 0.0..1.0f64) {
        let w = weight(a0, eps, n);
        let (ll, lr) = w.log_ratios(w.n(), t);
        let (rl, rr) = w.log_ratios_right(w.n(), t);
        prop_assert!(rel(ll, rl) < 1e-9);
        for j in 0..=4 {
            prop_assert!(rel(lr[j], rr[j]) < 1e-9, "j={j}: {} vs {}", lr[j], rr[j]);
        }
    }

    #[test]
    fn quartic_growth_past_n(a0 in 0.3..2.0f64, n in 5u32..20, t in 0.0..1.0f64) {
        let w = weight(a0, 0.0, n);
        let ratio = |x: f64| (w.log_ratios(x, t).0 - 4.0 * x.ln()).exp();
        let (r1, r2) = (ratio(1e3 * w.n()), ratio(1e5 * w.n()));
        prop_assert!(rel(r1, r2) < 1e-2, "{r1} vs {r2}");
    }

    #[test]
    fn kato_weight_bounds_and_orderings(
        beta in 0.05..1.0f64, d1 in 1e-4..0.9f64, d2 in 1e-4..0.9f64, x in -40.0..40.0f64, h in 0.0..5.0f64,
    ) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let small = KatoWeight::new(beta, lo).unwrap();
        let big = KatoWeight::new(beta, hi).unwrap();
        let v = big.eval(x, 0);
        prop_assert!(v > 0.0 && v < 1.0 / hi);
        prop_assert!(big.eval(x + h, 0) >= v);
        prop_assert!(small.eval(x, 0) >= v);
        prop_assert!(big.eval(x, 1) <= beta * v * (1.0 + 1e-12));
    }

    #[test]
    fn linear_flow_conserves_mass_and_l2(
        amp in 0.1..2.0f64, sigma in 1.0..4.0f64, center in -10.0..10.0f64, t in 0.0..5.0f64,
    ) {
        let g = Grid::new(60.0, 512).unwrap();
        let f = Field::from_fn(g, |x| amp * (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp());
        let out = Solver::new(g, NonlinearitySpec::zero()).step(&f, t).unwrap();
        prop_assert!(rel(out.l2_squared(), f.l2_squared()) < 1e-12);
        prop_assert!(rel(out.mass(), f.mass()) < 1e-12);
    }

    #[test]
    fn moving_norm_never_exceeds_frozen(
        a0 in 0.2..2.0f64, frac in 0.0..1.0f64, sigma in 1.0..4.0f64, center in -10.0..10.0f64,
    ) {
        let g = Grid::new(60.0, 512).unwrap();
        let f = Field::from_fn(g, |x| (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp());
        let window = (-30.0, trusted_right_edge(g.l(), a0));
        let moving = weighted_norm(&f, &PowerWeight { a: frac * a0 }, window).unwrap();
        let frozen = weighted_norm(&f, &PowerWeight { a: a0 }, window).unwrap();
        prop_assert!(moving >= 0.0 && moving <= frozen);
    }
}

fn term() -> impl Strategy<Value = (Term, bool)> {
    (
        -1000i32..1000,
        prop_oneof![Just(1.0), Just(2.0), Just(4.0), Just(8.0)],
        0u32..4,
        0u32..3,
        0u32..3,
        any::<bool>(),
    )
        .prop_filter_map("degree", |(p, q, a, b, c, third)| {
            let degree = a + b + c;
            let ok = if third { degree >= 1 } else { degree >= 2 };
            (ok && p != 0).then(|| (Term::new(p as f64 / q, [a, b, c]), third))
        })
}

fn profile() -> impl Strategy<Value = DataProfile> {
    let amp = -1.0..1.0f64;
    let pos = 0.1..10.0f64;
    let center = -50.0..50.0f64;
    prop_oneof![
        (amp.clone(), pos.clone(), center.clone())
            .prop_map(|(amp, sigma, center)| DataProfile::Gaussian { amp, sigma, center }),
        (amp.clone(), pos.clone(), center.clone())
            .prop_map(|(amp, width, center)| DataProfile::Sech2 { amp, width, center }),
        (amp.clone(), pos.clone(), center, pos.clone()).prop_map(|(amp, sigma, center, half_width)| {
            DataProfile::Bump { amp, sigma, center, half_width }
        }),
        (amp, pos.clone(), pos).prop_map(|(amp, beta, s)| DataProfile::KatoProbe { amp, beta, s }),
    ]
}

proptest! {
    #[test]
    fn coefficient_text_round_trips(terms in prop::collection::vec(term(), 1..6)) {
        let q0: Vec<Term> = terms.iter().filter(|t| t.1).map(|t| t.0).collect();
        let q1: Vec<Term> = terms.iter().filter(|t| !t.1).map(|t| t.0).collect();
        let spec = NonlinearitySpec::new(q0, q1).unwrap();
        prop_assert_eq!(parse_coefficients(&spec.describe()).unwrap(), spec);
    }

    #[test]
    fn data_text_round_trips(terms in prop::collection::vec(profile(), 1..4)) {
        let d = InitialData { terms };
        prop_assert_eq!(d.to_string().parse::<InitialData>().unwrap(), d);
    }
}

#[test]
fn exponent_profile_meets_the_power_at_one() {
    let core = profile_jet(1.0).derivatives();
    let power = Jet::variable(1.0).powf(1.25).derivatives();
    for j in 0..=4 {
        assert!(rel(core[j], power[j]) < 1e-12, "j={j}: {} vs {}", core[j], power[j]);
    }
}
