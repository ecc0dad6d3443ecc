//! Periodic-orbit search: Poincaré map, Newton shooting, uniqueness probe.
//!
//! A `T`-periodic solution is a fixed point of the period map
//! `P: s -> orbit(T; s)`. Shooting runs damped Newton on the residual
//! `P(s) - s`, using the variational matrix from the same augmented
//! integration as the Jacobian `M(T) - I`. The uniqueness probe reruns the
//! shooter from a grid of starts and clusters the converged fixed points.

use alloc::vec::Vec;

use crate::expr::DomainError;
use crate::floquet::{FloquetError, MonodromyMatrix};
use crate::linalg::Mat2;
use crate::math;
use crate::odeint::{
    integrate_with_variational, integrate_with_variational_dense, IntegratorSettings, OdeError,
    PlanarState,
};
use crate::problem::DuffingProblem;

/// Determinant threshold (relative to the squared Jacobian norm) below
/// which `M(T) - I` counts as singular: a Floquet multiplier equals one.
pub const SINGULAR_DET_TOL: f64 = 1e-12;

// Armijo sufficient-decrease coefficient for the backtracking line search.
const ARMIJO: f64 = 1e-4;

/// Newton shooting parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingSettings {
    /// Residual target for `||P(s) - s||`.
    pub tol: f64,
    pub max_iter: usize,
    /// Line-search shrink factor per backtrack.
    pub damping: f64,
    pub max_backtracks: u32,
}

impl Default for ShootingSettings {
    fn default() -> Self {
        ShootingSettings {
            tol: 1e-10,
            max_iter: 50,
            damping: 0.5,
            max_backtracks: 20,
        }
    }
}

/// A located fixed point of the period map.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    /// Fixed point of the period map.
    pub initial: PlanarState,
    /// `||P(s0) - s0||` measured on the final verification integration.
    pub residual: f64,
    pub monodromy: MonodromyMatrix,
    /// Accepted-step samples of the orbit over `[0, T]`.
    pub samples: Vec<(f64, PlanarState)>,
    /// Newton iterations consumed.
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShootingError {
    /// `det(M(T) - I)` vanished at a candidate orbit: a multiplier equals
    /// one, so the orbit is degenerate and Newton cannot isolate it.
    SingularJacobian { at: PlanarState, det: f64 },
    NoConvergence { iterations: usize, residual: f64 },
    Ode(OdeError),
    /// The converged orbit's monodromy failed the determinant identity.
    Floquet(FloquetError),
}

impl core::fmt::Display for ShootingError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ShootingError::SingularJacobian { at, det } => write!(
                f,
                "period-map Jacobian is singular near (x, v) = ({}, {}) (det {det}): degenerate orbit",
                at.x, at.v
            ),
            ShootingError::NoConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "no convergence after {iterations} iterations (residual {residual})"
            ),
            ShootingError::Ode(e) => write!(f, "{e}"),
            ShootingError::Floquet(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ShootingError {}

impl From<OdeError> for ShootingError {
    fn from(e: OdeError) -> Self {
        ShootingError::Ode(e)
    }
}

impl From<FloquetError> for ShootingError {
    fn from(e: FloquetError) -> Self {
        ShootingError::Floquet(e)
    }
}

/// One application of the period map: the image of `s` after one period
/// and the Jacobian `M(T)` from the same augmented integration.
pub fn poincare(
    p: &DuffingProblem,
    s: PlanarState,
    settings: &IntegratorSettings,
) -> Result<(PlanarState, Mat2), OdeError> {
    let aug = integrate_with_variational(p, s, 0.0, p.period(), settings)?;
    Ok((aug.state, aug.transition))
}

/// Newton shooting for a fixed point of the period map, with backtracking
/// on the residual norm.
pub fn find_periodic(
    p: &DuffingProblem,
    guess: PlanarState,
    shooting: &ShootingSettings,
    integ: &IntegratorSettings,
) -> Result<PeriodicOrbit, ShootingError> {
    let mut s = guess;
    let (mut image, mut jacobian) = poincare(p, s, integ)?;
    let mut residual = image.distance(&s);

    for iter in 0..shooting.max_iter {
        if residual <= shooting.tol {
            return finish_orbit(p, s, iter, shooting, integ);
        }

        let newton = jacobian.sub(&Mat2::IDENTITY);
        let det = newton.det();
        let norm = newton.frobenius_norm();
        if math::abs(det) < SINGULAR_DET_TOL * norm * norm {
            if iter == 0 {
                // Singular at the user's guess: the problem itself carries
                // a unit multiplier there (degenerate orbit family).
                return Err(ShootingError::SingularJacobian { at: s, det });
            }
            // Newton wandered onto singular terrain away from the guess
            // (e.g. the far field of a problem with no periodic solution,
            // where gx -> 0 puts a multiplier at one). That is a failure
            // to converge, not a located degenerate orbit.
            return Err(ShootingError::NoConvergence {
                iterations: iter,
                residual,
            });
        }

        let step = newton.solve([image.x - s.x, image.v - s.v]);
        let mut alpha = 1.0f64;
        let mut advanced = false;
        for _ in 0..=shooting.max_backtracks {
            let trial = PlanarState::new(s.x - alpha * step[0], s.v - alpha * step[1]);
            match poincare(p, trial, integ) {
                Ok((trial_image, trial_jacobian)) => {
                    let trial_residual = trial_image.distance(&trial);
                    if trial_residual <= (1.0 - ARMIJO * alpha) * residual {
                        s = trial;
                        image = trial_image;
                        jacobian = trial_jacobian;
                        residual = trial_residual;
                        advanced = true;
                        break;
                    }
                }
                // A trial that leaves the integrable region just shortens
                // the step; only the accepted iterate may surface errors.
                Err(OdeError::Domain { .. })
                | Err(OdeError::NonFiniteState { .. })
                | Err(OdeError::StepUnderflow { .. }) => {}
                Err(e) => return Err(e.into()),
            }
            alpha *= shooting.damping;
        }
        if !advanced {
            return Err(ShootingError::NoConvergence {
                iterations: iter + 1,
                residual,
            });
        }
    }

    if residual <= shooting.tol {
        return finish_orbit(p, s, shooting.max_iter, shooting, integ);
    }
    Err(ShootingError::NoConvergence {
        iterations: shooting.max_iter,
        residual,
    })
}

/// Re-integrates the accepted fixed point densely, recomputing the residual
/// and monodromy from that verification run.
fn finish_orbit(
    p: &DuffingProblem,
    s: PlanarState,
    iterations: usize,
    shooting: &ShootingSettings,
    integ: &IntegratorSettings,
) -> Result<PeriodicOrbit, ShootingError> {
    let (aug, samples) = integrate_with_variational_dense(p, s, 0.0, p.period(), integ)?;
    let residual = aug.state.distance(&s);
    if residual > 10.0 * shooting.tol {
        return Err(ShootingError::NoConvergence {
            iterations,
            residual,
        });
    }
    let monodromy = MonodromyMatrix::from_transition(aug.transition, p.damping(), p.period())?;
    let samples = samples
        .into_iter()
        .map(|(t, aug_sample)| (t, aug_sample.state))
        .collect();
    Ok(PeriodicOrbit {
        initial: s,
        residual,
        monodromy,
        samples,
        iterations,
    })
}

/// Sampled range of `gx(t, x(t))` along an orbit's dense samples.
pub fn gx_range_along(
    p: &DuffingProblem,
    samples: &[(f64, PlanarState)],
) -> Result<(f64, f64), DomainError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (t, s) in samples {
        let v = p.gx_at(*t, s.x)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// One cluster of converged starts, represented by its first orbit.
#[derive(Debug, Clone)]
pub struct ProbeCluster {
    pub orbit: PeriodicOrbit,
    pub converged_starts: usize,
}

/// Outcome of a multi-start shooting run. Failures are recorded per start,
/// never fatal.
#[derive(Debug, Clone)]
pub struct ProbeOutcome {
    pub clusters: Vec<ProbeCluster>,
    pub failures: Vec<(PlanarState, ShootingError)>,
}

/// Runs [`find_periodic`] from every start and clusters the converged
/// fixed points by distance. Clusters are keyed by first occurrence, so
/// the outcome is deterministic in the start order. `cluster_radius`
/// defaults to `1e-6 (1 + ||s0||)` around each representative.
pub fn uniqueness_probe(
    p: &DuffingProblem,
    starts: &[PlanarState],
    shooting: &ShootingSettings,
    integ: &IntegratorSettings,
    cluster_radius: Option<f64>,
) -> ProbeOutcome {
    let mut clusters: Vec<ProbeCluster> = Vec::new();
    let mut failures = Vec::new();
    for &start in starts {
        match find_periodic(p, start, shooting, integ) {
            Ok(orbit) => {
                let existing = clusters.iter_mut().find(|cl| {
                    let radius = cluster_radius
                        .unwrap_or(1e-6 * (1.0 + cl.orbit.initial.norm()));
                    cl.orbit.initial.distance(&orbit.initial) <= radius
                });
                match existing {
                    Some(cl) => cl.converged_starts += 1,
                    None => clusters.push(ProbeCluster {
                        orbit,
                        converged_starts: 1,
                    }),
                }
            }
            Err(e) => failures.push((start, e)),
        }
    }
    ProbeOutcome { clusters, failures }
}

/// Uniform `n x n` grid of starts over `[x_lo, x_hi] x [v_lo, v_hi]`.
pub fn start_grid(x_range: (f64, f64), v_range: (f64, f64), n: usize) -> Vec<PlanarState> {
    let xs = math::linspace(x_range.0, x_range.1, n);
    let vs = math::linspace(v_range.0, v_range.1, n);
    let mut starts = Vec::with_capacity(n * n);
    for &x in &xs {
        for &v in &vs {
            starts.push(PlanarState::new(x, v));
        }
    }
    starts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::{spectrum, PairClass};
    use crate::problem::test_problem;

    const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

    fn settings(len: f64) -> IntegratorSettings {
        IntegratorSettings::for_duration(len)
    }

    #[test]
    fn poincare_fixed_point_of_linear_problem() {
        // x'' + x' + 2x = cos t has the particular solution
        // (cos t + sin t) / 2, so (0.5, 0.5) is a fixed point of P.
        let p = test_problem(1.0, TWO_PI, "2*x", "2", "cos(t)");
        let (image, jac) = poincare(&p, PlanarState::new(0.5, 0.5), &settings(TWO_PI)).unwrap();
        assert!(image.distance(&PlanarState::new(0.5, 0.5)) < 1e-8);
        assert!((jac.det() - libm::exp(-TWO_PI)).abs() < 1e-8);
    }

    #[test]
    fn autonomous_equilibrium_is_a_fixed_point() {
        let p = test_problem(1.0, TWO_PI, "2*x", "2", "0");
        let (image, jac) = poincare(&p, PlanarState::new(0.0, 0.0), &settings(TWO_PI)).unwrap();
        assert!(image.norm() < 1e-10);
        let oracle = crate::floquet::tests::expm_companion(2.0, 1.0, TWO_PI);
        assert!((jac.m11 - oracle.m11).abs() < 1e-8);
        assert!((jac.m22 - oracle.m22).abs() < 1e-8);
    }

    #[test]
    fn newton_converges_on_linear_problem() {
        let p = test_problem(1.0, TWO_PI, "2*x", "2", "cos(t)");
        let orbit = find_periodic(
            &p,
            PlanarState::new(0.0, 0.0),
            &ShootingSettings::default(),
            &settings(TWO_PI),
        )
        .unwrap();
        assert!(orbit.initial.distance(&PlanarState::new(0.5, 0.5)) < 1e-8);
        assert!(orbit.residual <= 1e-10 * 10.0);
        assert!(orbit.iterations <= 5, "took {} iterations", orbit.iterations);
    }

    #[test]
    fn newton_residual_after_one_full_step_is_small() {
        // On an affine period map a single Newton step is exact up to
        // integration error.
        let p = test_problem(1.0, TWO_PI, "2*x", "2", "cos(t)");
        let strict = ShootingSettings {
            tol: 1e-15,
            max_iter: 1,
            ..ShootingSettings::default()
        };
        let err = find_periodic(&p, PlanarState::new(0.0, 0.0), &strict, &settings(TWO_PI))
            .unwrap_err();
        match err {
            ShootingError::NoConvergence { residual, .. } => {
                assert!(residual <= 100.0 * 1e-10, "residual {residual}");
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn converges_to_origin_without_forcing() {
        let p = test_problem(1.0, TWO_PI, "2*x", "2", "0");
        let orbit = find_periodic(
            &p,
            PlanarState::new(0.1, 0.1),
            &ShootingSettings::default(),
            &settings(TWO_PI),
        )
        .unwrap();
        assert!(orbit.initial.norm() < 1e-9);
    }

    #[test]
    fn degenerate_problem_reports_singular_jacobian() {
        // gx = 0, h = 0: M(T) - I is singular in the x column everywhere.
        let p = test_problem(1.0, TWO_PI, "0", "0", "0");
        let err = find_periodic(
            &p,
            PlanarState::new(0.1, 0.1),
            &ShootingSettings::default(),
            &settings(TWO_PI),
        )
        .unwrap_err();
        assert!(matches!(err, ShootingError::SingularJacobian { .. }));
    }

    #[test]
    fn orbit_reintegrates_to_itself() {
        let p = test_problem(1.0, TWO_PI, "2*x+0.5*atan(x)", "2+0.5/(1+x^2)", "cos(t)");
        let shooting = ShootingSettings::default();
        let integ = settings(TWO_PI);
        let orbit =
            find_periodic(&p, PlanarState::new(0.0, 0.0), &shooting, &integ).unwrap();
        let end = crate::odeint::integrate(&p, orbit.initial, 0.0, TWO_PI, &integ).unwrap();
        assert!(end.distance(&orbit.initial) <= 10.0 * shooting.tol);
        // Dense samples cover the whole period.
        assert_eq!(orbit.samples.first().unwrap().0, 0.0);
        assert_eq!(orbit.samples.last().unwrap().0, TWO_PI);
    }

    #[test]
    fn probe_finds_single_cluster_for_contractive_problem() {
        let p = test_problem(1.0, TWO_PI, "2*x", "2", "cos(t)");
        let starts = start_grid((-3.0, 3.0), (-3.0, 3.0), 3);
        let outcome = uniqueness_probe(
            &p,
            &starts,
            &ShootingSettings::default(),
            &settings(TWO_PI),
            None,
        );
        assert_eq!(outcome.clusters.len(), 1);
        assert_eq!(outcome.failures.len(), 0);
        assert_eq!(outcome.clusters[0].converged_starts, 9);
        let s = spectrum(&outcome.clusters[0].orbit.monodromy);
        assert_eq!(s.pair_class, PairClass::ComplexPair);
    }

    #[test]
    fn probe_finds_both_wells_of_bistable_problem() {
        // g = x^3 - x, h = 0: equilibria at x = 0, +-1 are period-map fixed
        // points; the probe must report at least the two wells.
        let p = test_problem(1.0, TWO_PI, "x^3-x", "3*x^2-1", "0");
        let starts = start_grid((-2.0, 2.0), (-1.0, 1.0), 3);
        let outcome = uniqueness_probe(
            &p,
            &starts,
            &ShootingSettings::default(),
            &settings(TWO_PI),
            None,
        );
        assert!(
            outcome.clusters.len() >= 2,
            "expected at least two clusters, got {}",
            outcome.clusters.len()
        );
        let mut xs: Vec<f64> = outcome
            .clusters
            .iter()
            .map(|c| c.orbit.initial.x)
            .collect();
        xs.sort_by(f64::total_cmp);
        assert!(xs.iter().any(|&x| (x + 1.0).abs() < 1e-6));
        assert!(xs.iter().any(|&x| (x - 1.0).abs() < 1e-6));
    }

    #[test]
    fn gx_range_matches_constant_derivative() {
        let p = test_problem(1.0, TWO_PI, "2*x", "2", "cos(t)");
        let orbit = find_periodic(
            &p,
            PlanarState::new(0.0, 0.0),
            &ShootingSettings::default(),
            &settings(TWO_PI),
        )
        .unwrap();
        let (lo, hi) = gx_range_along(&p, &orbit.samples).unwrap();
        assert_eq!((lo, hi), (2.0, 2.0));
    }
}
