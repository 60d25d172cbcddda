//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::time::Instant;

use fifth_decay::certifier::{certify_all, SweepSpec};
use fifth_decay::decaylab::{
    difference_experiment, kato_experiment, ledger_experiment, persistence_experiment, DecayReport, ExperimentSetup,
    InitialData, LedgerOptions,
};
use fifth_decay::kernel::{fit_decay_envelope, kernel_contour, kernel_direct, kernel_eval, KernelTable};
use fifth_decay::solver::{Field, Grid, ModelPreset, NonlinearitySpec, Solver};
use fifth_decay::weights::{k_of_epsilon, DecayLaw, PiecewiseWeight, WeightParams};

/// Outcome of one named check inside a criterion.
struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

fn data(s: &str) -> InitialData {
    s.parse().expect("profile text is well formed")
}

fn report_check(name: &str, r: fifth_decay::Result<DecayReport>) -> (Check, Option<DecayReport>) {
    match r {
        Ok(r) => {
            let detail = r
                .summary()
                .into_iter()
                .filter(|(k, _)| k != "kind" && k != "pass")
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(" ");
            (check(name, r.pass, detail), Some(r))
        }
        Err(e) => (check(name, false, format!("error: {e}")), None),
    }
}

fn criterion_1() -> Vec<Check> {
    let sweep = SweepSpec::default();
    let report = certify_all(&[0.5, 1.0, 2.0], &[0.0, 0.01, 0.1], &[5, 10, 20, 40], &sweep);
    let mut out = Vec::new();
    for family in [
        "positivity",
        "monotonicity",
        "c4_match",
        "master",
        "derivative_j",
        "corollary",
        "bridge_",
    ] {
        let rows: Vec<_> = report
            .verdicts
            .iter()
            .filter(|v| v.ineq_id.starts_with(family))
            .collect();
        let failed = rows.iter().filter(|v| !v.pass).count();
        let worst = rows
            .iter()
            .map(|v| v.ratio_sup)
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(check(
            family,
            !rows.is_empty() && failed == 0,
            format!("{} verdicts, {failed} failed, max ratio_sup {worst:e}", rows.len()),
        ));
    }
    out.push(check(
        "no_defects",
        report.defects.is_empty(),
        format!("{} defects", report.defects.len()),
    ));
    let f = &report.fitted;
    out.push(check(
        "constants",
        f.c0.is_some() && f.c0_tilde.is_some() && f.bridge_c.is_some(),
        format!("c0={:?} c0_tilde={:?} bridge_c={:?}", f.c0, f.c0_tilde, f.bridge_c),
    ));
    out
}

/// Classical RK4 for `a' = −k a⁵`.
fn rk4_decay(a0: f64, k: f64, t_end: f64, steps: usize) -> f64 {
    let f = |a: f64| -k * a.powi(5);
    let h = t_end / steps as f64;
    let mut a = a0;
    for _ in 0..steps {
        let k1 = f(a);
        let k2 = f(a + 0.5 * h * k1);
        let k3 = f(a + 0.5 * h * k2);
        let k4 = f(a + h * k3);
        a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    a
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Reduced fraction `(p, q)`, `q > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Ratio(i128, i128);

impl Ratio {
    fn new(p: i128, q: i128) -> Self {
        let g = gcd(p, q) * q.signum();
        Ratio(p / g, q / g)
    }
    fn add(self, o: Ratio) -> Ratio {
        Ratio::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
    fn mul(self, o: Ratio) -> Ratio {
        Ratio::new(self.0 * o.0, self.1 * o.1)
    }
}

fn criterion_2() -> Vec<Check> {
    let mut worst = 0.0f64;
    for &a0 in &[0.5, 1.0, 2.0] {
        for &eps in &[0.0, 0.01, 0.1] {
            let law = DecayLaw::from_epsilon(a0, eps).unwrap();
            let mut t = 0.0;
            let mut a = a0;
            // unit intervals, each resolved far below the initial stiffness
            for step in 1..=10 {
                let stiff = 5.0 * law.k() * a.powi(4);
                let n = ((stiff * 1000.0).ceil() as usize).max(1000);
                a = rk4_decay(a, law.k(), 1.0, n);
                t += 1.0;
                let exact = law.a(t).unwrap();
                worst = worst.max((a - exact).abs() / exact);
                assert_eq!(step as f64, t);
            }
        }
    }
    // κ(0) = 4 (5⁵/4⁵)(3/2 + 25/20)
    let scale = Ratio::new(3125, 1024);
    let k0 = scale.mul(Ratio::new(3, 2).add(Ratio::new(25, 20)));
    let kappa = Ratio::new(4, 1).mul(k0);
    let target = Ratio::new(11 * 3125, 1024);
    let float = DecayLaw::from_epsilon(1.0, 0.0).unwrap().kappa();
    vec![
        check("rk4_vs_closed_form", worst < 1e-8, format!("max relative error {worst:e} on [0, 10]")),
        check(
            "kappa_rational",
            kappa == target && float == target.0 as f64 / target.1 as f64 && 4.0 * k_of_epsilon(0.0).unwrap() == float,
            format!("kappa(0) = {}/{} (float {float})", kappa.0, kappa.1),
        ),
    ]
}

fn criterion_3() -> Vec<Check> {
    let gamma_6_5 = statrs::function::gamma::gamma(1.2);
    let oracle = gamma_6_5 * (PI / 10.0).cos() / PI;
    let k0 = kernel_eval(0.0, 2).unwrap();
    let mut out = vec![check(
        "K2_at_zero",
        (k0 - oracle).abs() < 1e-6,
        format!("K2(0)={k0:.15} oracle={oracle:.15}"),
    )];
    match KernelTable::uniform(-40.0, 10.0, 0.05, 2).and_then(|t| fit_decay_envelope(&t)) {
        Ok(fit) => {
            out.push(check(
                "right_exponent",
                (1.15..=1.35).contains(&fit.right_exponent),
                format!("p={}", fit.right_exponent),
            ));
            out.push(check(
                "left_exponent",
                (fit.left_exponent - 0.375).abs() < 0.1,
                format!("q={}", fit.left_exponent),
            ));
        }
        Err(e) => out.push(check("envelope_fit", false, e.to_string())),
    }
    let mut worst = 0.0f64;
    for i in 0..=600 {
        let x = i as f64 * 0.01;
        let d = kernel_direct(x, 2).unwrap().value;
        let c = kernel_contour(x, 2).unwrap().value;
        worst = worst.max((d - c).abs());
    }
    out.push(check(
        "quadrature_vs_contour",
        worst < 1e-8,
        format!("max |direct - contour| on [0, 6] = {worst:e}"),
    ));
    out
}

fn max_abs_diff(a: &Field, b: &Field) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

fn criterion_4() -> Vec<Check> {
    let mut out = Vec::new();

    let g = Grid::new(PI, 64).unwrap();
    let solver = Solver::new(g, NonlinearitySpec::zero());
    let t = 1.0;
    let mut err = 0.0f64;
    for k in 1..=5 {
        let k = k as f64;
        let f = Field::from_fn(g, |x| (k * x).cos());
        let moved = solver.step(&f, t).unwrap();
        for (j, v) in moved.values.iter().enumerate() {
            err = err.max((v - (k * g.x(j) + k.powi(5) * t).cos()).abs());
        }
    }
    out.push(check("single_mode", err < 1e-12, format!("max error {err:e} over modes 1..=5 after t = 1")));

    let g = Grid::with_dealias(40.0, 512, 0.5).unwrap();
    let f = Field::from_fn(g, |x| 0.05 * (-x * x / 18.0).exp());
    let s = Solver::new(g, ModelPreset::kdv5().spec);
    let run = |n: usize| s.steps(&f, 0.2 / n as f64, n).unwrap();
    let (a, b, c) = (run(10), run(20), run(40));
    let order = (max_abs_diff(&a, &b) / max_abs_diff(&b, &c)).log2();
    out.push(check("richardson_order", order >= 3.8, format!("observed order {order:.3}")));

    let setup = ExperimentSetup {
        l: 100.0,
        m: 4096,
        cadence: 1.0,
        ..ExperimentSetup::with_preset(ModelPreset::kdv5())
    };
    match setup.run(setup.m, &[data("gaussian")]) {
        Ok(mut runs) => {
            let traj = runs.remove(0);
            let (u0, last) = (&traj.samples[0], traj.samples.last().unwrap());
            let mass = (last.mass() - u0.mass()).abs() / u0.mass().abs();
            let l2 = (last.l2_squared() - u0.l2_squared()).abs() / u0.l2_squared();
            out.push(check(
                "conservation",
                mass < 1e-8 && l2 < 1e-8,
                format!(
                    "relative mass drift {mass:e}, L2 drift {l2:e} (L=100, M=4096, T=1, dt={:e})",
                    traj.dt
                ),
            ));
        }
        Err(e) => out.push(check("conservation", false, e.to_string())),
    }
    out
}

fn criterion_5() -> Vec<Check> {
    let setup = ExperimentSetup::default();
    let mut out = Vec::new();
    for &a0 in &[0.5, 1.0, 2.0] {
        for &eps in &[0.0, 0.01, 0.1] {
            let (mut c, r) = report_check(
                &format!("bump_a0_{a0}_eps_{eps}"),
                persistence_experiment(&setup, &data("bump"), a0, eps),
            );
            if let Some(r) = r {
                let ordered = r
                    .rows
                    .iter()
                    .all(|row| row.w_moving.unwrap() <= row.w_frozen.unwrap() * (1.0 + 1e-12));
                c.pass &= ordered;
                c.detail.push_str(&format!(" moving<=frozen={ordered}"));
            }
            out.push(c);
        }
    }
    out
}

fn criterion_6() -> Vec<Check> {
    [ModelPreset::ivp17(1.0, 1.0, 1.0), ModelPreset::kdv5()]
        .into_iter()
        .map(|p| {
            let name = p.name.clone();
            let setup = ExperimentSetup::with_preset(p);
            report_check(&name, persistence_experiment(&setup, &data("gaussian"), 1.0, 0.0)).0
        })
        .collect()
}

fn criterion_7() -> Vec<Check> {
    let mut out = Vec::new();
    let perturbation = "bump:amp=0.005,center=-40";
    for p in [ModelPreset::ivp17(1.0, 1.0, 1.0), ModelPreset::kdv5()] {
        let name = format!("{}_gaussian_pair", p.name);
        let setup = ExperimentSetup::with_preset(p);
        let u1 = data("gaussian");
        let u2 = u1.plus(perturbation.parse().unwrap());
        out.push(report_check(&name, difference_experiment(&setup, &u1, &u2, 1.0, 0.0)).0);
    }
    let lin = ExperimentSetup::default();
    let u1 = data("sech2:width=8");
    let u2 = u1.plus(perturbation.parse().unwrap());
    out.push(report_check("linear_sech2_pair", difference_experiment(&lin, &u1, &u2, 1.0, 0.0)).0);

    let same = data("gaussian");
    let (mut c, r) = report_check("zero_pair", difference_experiment(&lin, &same, &same, 1.0, 0.0));
    if let Some(r) = r {
        let zero = r.lambda == Some(0.0)
            && r.rows
                .iter()
                .all(|row| row.w_moving == Some(0.0) && row.w_frozen == Some(0.0));
        c.pass &= zero;
        c.detail.push_str(&format!(" identically_zero={zero}"));
    }
    out.push(c);
    out
}

fn criterion_8() -> Vec<Check> {
    let mut out = Vec::new();
    let lin = ExperimentSetup::default();
    for &beta in &[0.2, 0.3, 0.5] {
        let profile = data(&format!("kato_probe:beta={beta},s={}", 2.0 / beta));
        let (mut c, r) = report_check(&format!("linear_beta_{beta}"), kato_experiment(&lin, &profile, beta));
        if let Some(r) = r {
            let bounded = r.gamma.zip(r.gamma_bound).is_some_and(|(g, b)| g.value <= b && g.refined <= b);
            c.pass &= bounded;
        }
        out.push(c);
    }
    for p in [ModelPreset::benney2(), ModelPreset::kdv5(), ModelPreset::lisher()] {
        let name = p.name.clone();
        let setup = ExperimentSetup::with_preset(p);
        out.push(report_check(&name, kato_experiment(&setup, &data("kato_probe:beta=0.3"), 0.3)).0);
    }
    out
}

fn ledger_check(name: &str, setup: &ExperimentSetup, profile: &str, tolerance: f64) -> Check {
    let w = PiecewiseWeight::new(WeightParams::new(1.0, 0.0, 10).unwrap()).unwrap();
    let options = LedgerOptions::default();
    match ledger_experiment(setup, &data(profile), &w, &options) {
        Ok((_, samples)) => {
            let worst = samples.iter().map(|s| s.relative_residual).fold(0.0, f64::max);
            let young = samples
                .iter()
                .all(|s| s.young.len() == options.epsilons.len() && s.young.iter().all(|y| y.holds));
            let bound = samples.iter().all(|s| s.bound_holds);
            check(
                name,
                !samples.is_empty() && worst < tolerance && young && bound,
                format!(
                    "{} samples, max relative residual {worst:e} (< {tolerance:e}), young split {young}, bound {bound}",
                    samples.len()
                ),
            )
        }
        Err(e) => check(name, false, format!("error: {e}")),
    }
}

fn criterion_9() -> Vec<Check> {
    let lin = ExperimentSetup {
        cadence: 1e-3,
        ..Default::default()
    };
    let mut out = vec![
        ledger_check("linear_gaussian", &lin, "gaussian:center=-6", 1e-6),
        ledger_check("linear_bump", &lin, "bump", 1e-6),
    ];
    for p in [
        ModelPreset::kdv5(),
        ModelPreset::ivp17(1.0, 1.0, 1.0),
        ModelPreset::benney2(),
        ModelPreset::lisher(),
    ] {
        let name = p.name.clone();
        let setup = ExperimentSetup {
            cadence: 5e-3,
            ..ExperimentSetup::with_preset(p)
        };
        out.push(ledger_check(&name, &setup, "gaussian:center=-6", 1e-4));
    }
    out
}

fn main() {
    let criteria: [(&str, fn() -> Vec<Check>); 9] = [
        ("weight certification", criterion_1),
        ("decay law", criterion_2),
        ("kernel", criterion_3),
        ("solver", criterion_4),
        ("linear persistence", criterion_5),
        ("nonlinear persistence", criterion_6),
        ("difference decay", criterion_7),
        ("Kato bound", criterion_8),
        ("energy ledger", criterion_9),
    ];
    let start = Instant::now();
    let results: Vec<(Vec<Check>, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|&(_, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let checks = f();
                    (checks, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| (vec![check("panic", false, "criterion panicked")], 0.0)))
            .collect()
    });
    let mut failed = 0;
    for (i, ((name, _), (checks, secs))) in criteria.iter().zip(&results).enumerate() {
        let pass = checks.iter().all(|c| c.pass);
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name} ({secs:.1} s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" }
        );
        for c in checks {
            println!("    [{}] {}: {}", if c.pass { "ok" } else { "FAIL" }, c.name, c.detail);
        }
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
