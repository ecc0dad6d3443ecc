//! Adaptive Dormand-Prince 5(4) integration of the Duffing system and its
//! variational augmentation.
//!
//! The second-order equation is integrated as the planar system
//! `x' = v`, `v' = h(t) - c v - g(t, x)`. For monodromy computations the
//! 2x2 fundamental matrix of the linearization `y' = A(t) y`,
//! `A(t) = [[0, 1], [-gx(t, x(t)), -c]]`, is integrated simultaneously with
//! the orbit as one six-dimensional system, so the matrix sees exactly the
//! same adaptive grid as the trajectory it linearizes along.
//!
//! Nonlinearities that are merely Lipschitz in `x` (steep switches,
//! piecewise-linear forces) are handled by step-size adaptation alone:
//! there is no event detection, and some accuracy is given up in the
//! steps that straddle a kink.

use alloc::vec::Vec;

use crate::expr::DomainError;
use crate::linalg::Mat2;
use crate::math;
use crate::problem::DuffingProblem;

/// Position and velocity `(x, x')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarState {
    pub x: f64,
    pub v: f64,
}

impl PlanarState {
    pub fn new(x: f64, v: f64) -> Self {
        PlanarState { x, v }
    }

    pub fn norm(&self) -> f64 {
        math::hypot(self.x, self.v)
    }

    pub fn distance(&self, other: &PlanarState) -> f64 {
        math::hypot(self.x - other.x, self.v - other.v)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite()
    }
}

/// Orbit state together with the variational flow matrix, which equals the
/// identity at the start of the integration interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedState {
    pub state: PlanarState,
    pub transition: Mat2,
}

/// Step-size control parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl IntegratorSettings {
    /// Defaults scaled to an integration interval of the given length:
    /// `rel_tol = abs_tol = 1e-10`, `h_min = 1e-12 len`, `h_max = len / 16`.
    pub fn for_duration(len: f64) -> Self {
        debug_assert!(len > 0.0);
        IntegratorSettings {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            h_init: len / 160.0,
            h_min: 1e-12 * len,
            h_max: len / 16.0,
            max_steps: 10_000_000,
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    fn validate(&self) -> Result<(), OdeError> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(OdeError::InvalidSettings("tolerances must be positive"));
        }
        if !(0.0 < self.h_min && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return Err(OdeError::InvalidSettings(
                "step sizes must satisfy 0 < h_min <= h_init <= h_max",
            ));
        }
        if self.max_steps == 0 {
            return Err(OdeError::InvalidSettings("max_steps must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    /// Meeting the tolerance would need a step below `h_min`.
    StepUnderflow { t: f64, required: f64 },
    MaxStepsExceeded { t: f64 },
    /// Expression evaluation left the reals at time `t`.
    Domain { t: f64, source: DomainError },
    NonFiniteState { t: f64 },
    InvalidInterval { t0: f64, t1: f64 },
    InvalidSettings(&'static str),
}

impl core::fmt::Display for OdeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            OdeError::StepUnderflow { t, required } => {
                write!(f, "step size underflow at t = {t} (required {required})")
            }
            OdeError::MaxStepsExceeded { t } => write!(f, "maximum step count exceeded at t = {t}"),
            OdeError::Domain { t, source } => write!(f, "{source} at t = {t}"),
            OdeError::NonFiniteState { t } => write!(f, "state became non-finite at t = {t}"),
            OdeError::InvalidInterval { t0, t1 } => {
                write!(f, "invalid integration interval [{t0}, {t1}]")
            }
            OdeError::InvalidSettings(msg) => write!(f, "invalid integrator settings: {msg}"),
        }
    }
}

impl core::error::Error for OdeError {}

/// Right-hand side of the planar system: `(v, h(t) - c v - g(t, x))`.
pub fn rhs(p: &DuffingProblem, t: f64, s: &PlanarState) -> Result<PlanarState, DomainError> {
    let g = p.g_at(t, s.x)?;
    let h = p.h_at(t)?;
    Ok(PlanarState {
        x: s.v,
        v: h - p.damping() * s.v - g,
    })
}

/// Integrates the orbit from `s0` over `[t0, t1]`, landing exactly at `t1`.
pub fn integrate(
    p: &DuffingProblem,
    s0: PlanarState,
    t0: f64,
    t1: f64,
    settings: &IntegratorSettings,
) -> Result<PlanarState, OdeError> {
    let y = dormand_prince(&mut planar_rhs(p), t0, t1, [s0.x, s0.v], settings, None)?;
    Ok(PlanarState { x: y[0], v: y[1] })
}

/// As [`integrate`], also returning the accepted-step samples (including
/// both endpoints).
pub fn integrate_dense(
    p: &DuffingProblem,
    s0: PlanarState,
    t0: f64,
    t1: f64,
    settings: &IntegratorSettings,
) -> Result<(PlanarState, Vec<(f64, PlanarState)>), OdeError> {
    let mut samples = Vec::new();
    let mut observer = |t: f64, y: &[f64; 2]| samples.push((t, PlanarState { x: y[0], v: y[1] }));
    let y = dormand_prince(
        &mut planar_rhs(p),
        t0,
        t1,
        [s0.x, s0.v],
        settings,
        Some(&mut observer),
    )?;
    Ok((PlanarState { x: y[0], v: y[1] }, samples))
}

/// Integrates the six-dimensional augmented system (orbit plus variational
/// matrix) with the transition matrix starting at the identity. Error
/// control applies to all six components.
pub fn integrate_with_variational(
    p: &DuffingProblem,
    s0: PlanarState,
    t0: f64,
    t1: f64,
    settings: &IntegratorSettings,
) -> Result<AugmentedState, OdeError> {
    let y = dormand_prince(
        &mut augmented_rhs(p),
        t0,
        t1,
        augmented_init(s0),
        settings,
        None,
    )?;
    Ok(unpack_augmented(&y))
}

/// As [`integrate_with_variational`], also returning accepted-step samples.
pub fn integrate_with_variational_dense(
    p: &DuffingProblem,
    s0: PlanarState,
    t0: f64,
    t1: f64,
    settings: &IntegratorSettings,
) -> Result<(AugmentedState, Vec<(f64, AugmentedState)>), OdeError> {
    let mut samples = Vec::new();
    let mut observer = |t: f64, y: &[f64; 6]| samples.push((t, unpack_augmented(y)));
    let y = dormand_prince(
        &mut augmented_rhs(p),
        t0,
        t1,
        augmented_init(s0),
        settings,
        Some(&mut observer),
    )?;
    Ok((unpack_augmented(&y), samples))
}

fn planar_rhs<'a>(
    p: &'a DuffingProblem,
) -> impl FnMut(f64, &[f64; 2]) -> Result<[f64; 2], OdeError> + 'a {
    move |t, y| {
        let s = PlanarState { x: y[0], v: y[1] };
        let d = rhs(p, t, &s).map_err(|source| OdeError::Domain { t, source })?;
        Ok([d.x, d.v])
    }
}

// Layout: [x, v, m11, m12, m21, m22].
fn augmented_rhs<'a>(
    p: &'a DuffingProblem,
) -> impl FnMut(f64, &[f64; 6]) -> Result<[f64; 6], OdeError> + 'a {
    let c = p.damping();
    move |t, y| {
        let g = p
            .g_at(t, y[0])
            .map_err(|source| OdeError::Domain { t, source })?;
        let h = p.h_at(t).map_err(|source| OdeError::Domain { t, source })?;
        let gx = p
            .gx_at(t, y[0])
            .map_err(|source| OdeError::Domain { t, source })?;
        Ok([
            y[1],
            h - c * y[1] - g,
            y[4],
            y[5],
            -gx * y[2] - c * y[4],
            -gx * y[3] - c * y[5],
        ])
    }
}

fn augmented_init(s0: PlanarState) -> [f64; 6] {
    [s0.x, s0.v, 1.0, 0.0, 0.0, 1.0]
}

fn unpack_augmented(y: &[f64; 6]) -> AugmentedState {
    AugmentedState {
        state: PlanarState { x: y[0], v: y[1] },
        transition: Mat2::new(y[2], y[3], y[4], y[5]),
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// Difference between the 5th-order weights and the embedded 4th-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
// PI controller exponents applied to the error ratio.
const EXPONENT_I: f64 = 0.7 / 4.0;
const EXPONENT_P: f64 = 0.4 / 4.0;
const FACTOR_MIN: f64 = 0.2;
const FACTOR_MAX: f64 = 5.0;

/// Callback receiving `(t, y)` on the initial point and every accepted step.
pub(crate) type Observer<'a, const N: usize> = &'a mut dyn FnMut(f64, &[f64; N]);

/// Core stepper shared by the planar and augmented entry points.
pub(crate) fn dormand_prince<const N: usize, F>(
    f: &mut F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    settings: &IntegratorSettings,
    mut observer: Option<Observer<'_, N>>,
) -> Result<[f64; N], OdeError>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], OdeError>,
{
    settings.validate()?;
    if t1 < t0 {
        return Err(OdeError::InvalidInterval { t0, t1 });
    }
    if let Some(obs) = observer.as_deref_mut() {
        obs(t0, &y0);
    }
    if t1 == t0 {
        return Ok(y0);
    }

    let mut t = t0;
    let mut y = y0;
    let mut h = settings.h_init.min(t1 - t0);
    let mut k1 = f(t, &y)?;
    // Previous accepted error for the proportional part, floored like the
    // classic controller so an unusually clean step cannot stall growth.
    let mut err_prev: f64 = 1e-4;
    let mut rejected = false;
    let mut steps = 0usize;

    while t < t1 {
        if steps >= settings.max_steps {
            return Err(OdeError::MaxStepsExceeded { t });
        }
        steps += 1;

        let landing = h >= t1 - t;
        if landing {
            h = t1 - t;
        }
        if t + h == t {
            return Err(OdeError::StepUnderflow { t, required: h });
        }

        let mut k = [[0.0; N]; 7];
        k[0] = k1;
        stage(f, t, &y, h, &mut k, 1, &A2, C[1])?;
        stage(f, t, &y, h, &mut k, 2, &A3, C[2])?;
        stage(f, t, &y, h, &mut k, 3, &A4, C[3])?;
        stage(f, t, &y, h, &mut k, 4, &A5, C[4])?;
        stage(f, t, &y, h, &mut k, 5, &A6, C[5])?;

        let mut y_new = y;
        for i in 0..N {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(6) {
                acc += B[j] * kj[i];
            }
            y_new[i] += h * acc;
        }
        let k7 = f(t + h, &y_new)?;
        k[6] = k7;

        let mut err = 0.0f64;
        for i in 0..N {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                acc += E[j] * kj[i];
            }
            let scale = settings.abs_tol
                + settings.rel_tol * math::abs(y[i]).max(math::abs(y_new[i]));
            err = err.max(math::abs(h * acc) / scale);
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }

        if err <= 1.0 {
            let t_new = if landing { t1 } else { t + h };
            if y_new.iter().any(|v| !v.is_finite()) {
                return Err(OdeError::NonFiniteState { t: t_new });
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            if let Some(obs) = observer.as_deref_mut() {
                obs(t, &y);
            }
            let growth_cap = if rejected { 1.0 } else { FACTOR_MAX };
            rejected = false;
            let factor = (SAFETY * math::pow(err.max(1e-30), -EXPONENT_I)
                * math::pow(err_prev, EXPONENT_P))
            .clamp(FACTOR_MIN, growth_cap);
            err_prev = err.max(1e-4);
            h = (h * factor).clamp(settings.h_min, settings.h_max);
        } else {
            rejected = true;
            let factor = (SAFETY * math::pow(err, -EXPONENT_I)).clamp(FACTOR_MIN, 0.9);
            let h_new = h * factor;
            if h_new < settings.h_min {
                return Err(OdeError::StepUnderflow {
                    t,
                    required: h_new,
                });
            }
            h = h_new;
        }
    }
    Ok(y)
}

#[allow(clippy::too_many_arguments)]
fn stage<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    h: f64,
    k: &mut [[f64; N]; 7],
    idx: usize,
    coeffs: &[f64],
    c: f64,
) -> Result<(), OdeError>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], OdeError>,
{
    let mut y_stage = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (j, &a) in coeffs.iter().enumerate() {
            acc += a * k[j][i];
        }
        y_stage[i] += h * acc;
    }
    k[idx] = f(t + c * h, &y_stage)?;
    Ok(())
}
