//! Cross-module consistency checks that need more machinery than a unit
//! test: the closed-form Hill spectrum against the generic monodromy and
//! decay pipeline, and the certificate -> probe -> spectrum chain.

use duffing_floquet_core::decay::{default_perturbation, estimate_decay};
use duffing_floquet_core::expr::parse;
use duffing_floquet_core::floquet::{spectrum, PairClass, Stability};
use duffing_floquet_core::hill::{damped_multipliers, HillParams};
use duffing_floquet_core::odeint::{IntegratorSettings, PlanarState};
use duffing_floquet_core::periodic::{find_periodic, start_grid, uniqueness_probe, ShootingSettings};
use duffing_floquet_core::problem::{DuffingProblem, SampleGrid};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn problem(c: f64, t: f64, g: &str, gx: &str, h: &str) -> DuffingProblem {
    let grid = SampleGrid::default_for(t);
    DuffingProblem::new(
        c,
        t,
        parse(g).unwrap(),
        parse(gx).unwrap(),
        parse(h).unwrap(),
        &grid,
    )
    .unwrap()
}

/// The two-segment potential realized as a steep tanh switch: inside the
/// first half-integer tongue the trivial solution decays strictly slower
/// than c/2, and the empirical rate must match the closed-form multipliers.
#[test]
fn hill_forced_problem_decays_slower_than_half_damping() {
    // w = 0.5, eps = 0.1, c = 1: q(t) = c^2/4 + w^2 + eps^2
    //                                   + 2 w eps tanh(1000 sin t).
    let p = problem(
        1.0,
        TWO_PI,
        "(0.51+0.1*tanh(1000*sin(t)))*x",
        "0.51+0.1*tanh(1000*sin(t))",
        "0",
    );
    let integ = IntegratorSettings::for_duration(TWO_PI);
    let shooting = ShootingSettings::default();
    let orbit = find_periodic(&p, PlanarState::new(0.1, 0.1), &shooting, &integ).unwrap();
    assert!(orbit.initial.norm() < 1e-9, "trivial orbit expected");

    let oracle = damped_multipliers(&HillParams::new(0.5, 0.1, 1.0).unwrap());
    assert_eq!(oracle.pair_class, PairClass::RealDistinct);
    assert!(oracle.decay_rate < 0.5);

    // Generic monodromy route agrees with the closed form up to the tanh
    // smoothing width.
    let s = spectrum(&orbit.monodromy);
    assert_eq!(s.pair_class, PairClass::RealDistinct);
    assert_eq!(s.verdict, Stability::AsymptoticallyStable);
    let got = s.multipliers.0.modulus();
    let expected = oracle.multipliers.0.modulus();
    assert!(
        ((got - expected) / expected).abs() < 1e-2,
        "multiplier modulus {got} vs closed form {expected}"
    );

    // Empirical decay matches the closed-form rate within 2 percent.
    let est = estimate_decay(
        &p,
        &orbit,
        default_perturbation(&orbit, shooting.tol, 20),
        20,
        shooting.tol,
        &integ,
    )
    .unwrap();
    assert!(est.rate < 0.5);
    assert!(
        ((est.rate - oracle.decay_rate) / oracle.decay_rate).abs() <= 0.02,
        "estimated rate {} vs closed form {}",
        est.rate,
        oracle.decay_rate
    );
}

/// Certificate, probe, and spectrum stay consistent on a ladder-cell
/// problem: one orbit, complex pair, decay c/2.
#[test]
fn ladder_cell_certificate_implies_unique_orbit_with_half_damping_decay() {
    let p = problem(1.0, TWO_PI, "2*x+0.5*atan(x)", "2+0.5/(1+x^2)", "cos(t)");
    let grid = SampleGrid::default_for(TWO_PI);
    let report = duffing_floquet_core::certify::check_derivative_cell_criterion(&p, &grid).unwrap();
    assert!(report.all_satisfied());
    assert_eq!(report.ladder_index, Some(2));

    let integ = IntegratorSettings::for_duration(TWO_PI);
    let shooting = ShootingSettings::default();
    let outcome = uniqueness_probe(
        &p,
        &start_grid((-5.0, 5.0), (-5.0, 5.0), 3),
        &shooting,
        &integ,
        None,
    );
    assert_eq!(outcome.clusters.len(), 1);
    assert!(outcome.failures.is_empty());

    let orbit = &outcome.clusters[0].orbit;
    let s = spectrum(&orbit.monodromy);
    assert_eq!(s.pair_class, PairClass::ComplexPair);
    assert!((s.decay_rate - 0.5).abs() < 1e-6);

    let est = estimate_decay(
        &p,
        orbit,
        default_perturbation(orbit, shooting.tol, 20),
        20,
        shooting.tol,
        &integ,
    )
    .unwrap();
    assert!((est.rate - 0.5).abs() <= 0.005, "rate {}", est.rate);
}
