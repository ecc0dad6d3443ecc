//! Problem definition and load-time validation.
//!
//! A [`DuffingProblem`] is the validated form of `x'' + c x' + g(t, x) = h(t)`:
//! positive damping and period, forcing free of `x`, sampled `T`-periodicity
//! of `g` and `h`, and a finite-difference cross-check of the user-supplied
//! `gx` against `g`. All hypotheses that quantify over "all x" are probed on
//! a declared [`SampleGrid`]; verdicts downstream are always labeled as
//! holding on samples, never on the whole line.

use alloc::vec::Vec;

use crate::expr::{check_derivative, ConsistencyReport, DomainError, Expr, PointDomainError};
use crate::math;

/// Relative tolerance of the sampled `T`-periodicity check. Loose enough
/// for periods entered as decimal approximations of `2*pi`, tight enough
/// to catch a genuinely wrong period.
pub const PERIODICITY_TOL: f64 = 1e-9;

/// Default absolute tolerance for the load-time `gx` cross-check.
pub const DERIVATIVE_TOL: f64 = 1e-6;

/// Cartesian sampling grid over `[0, T] x [x_lo, x_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    t_points: Vec<f64>,
    x_points: Vec<f64>,
}

impl SampleGrid {
    /// Uniform grid with the given point counts; both endpoints included.
    pub fn uniform(t_count: usize, period: f64, x_count: usize, x_range: (f64, f64)) -> Self {
        debug_assert!(t_count >= 2 && x_count >= 2);
        debug_assert!(period > 0.0 && x_range.0 < x_range.1);
        SampleGrid {
            t_points: math::linspace(0.0, period, t_count),
            x_points: math::linspace(x_range.0, x_range.1, x_count),
        }
    }

    /// Default load-time grid: 256 x 256 over `[0, T] x [-20, 20]`.
    pub fn default_for(period: f64) -> Self {
        SampleGrid::uniform(256, period, 256, (-20.0, 20.0))
    }

    /// Builds a grid from explicit point lists. Lists must be nonempty and
    /// strictly increasing.
    pub fn from_points(t_points: Vec<f64>, x_points: Vec<f64>) -> Option<Self> {
        let increasing = |pts: &[f64]| !pts.is_empty() && pts.windows(2).all(|w| w[0] < w[1]);
        if increasing(&t_points) && increasing(&x_points) {
            Some(SampleGrid { t_points, x_points })
        } else {
            None
        }
    }

    pub fn t_points(&self) -> &[f64] {
        &self.t_points
    }

    pub fn x_points(&self) -> &[f64] {
        &self.x_points
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x_points[0], self.x_points[self.x_points.len() - 1])
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t_points[0], self.t_points[self.t_points.len() - 1])
    }
}

/// Why a problem definition was rejected at load time.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationError {
    /// The damping constant must be positive.
    NonPositiveDamping { c: f64 },
    /// The period must be positive.
    NonPositivePeriod { period: f64 },
    /// `h` must depend on `t` only.
    ForcingDependsOnState,
    /// `expr(t + T) != expr(t)` at a grid point; `which` is "g" or "h".
    PeriodicityMismatch {
        which: &'static str,
        t: f64,
        x: f64,
        base: f64,
        shifted: f64,
    },
    /// The supplied `gx` disagrees with the finite difference of `g`.
    DerivativeMismatch(ConsistencyReport),
    /// Expression evaluation failed while sampling.
    Domain(PointDomainError),
}

impl core::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ValidationError::NonPositiveDamping { c } => {
                write!(f, "c must be positive (got {c})")
            }
            ValidationError::NonPositivePeriod { period } => {
                write!(f, "T must be positive (got {period})")
            }
            ValidationError::ForcingDependsOnState => {
                write!(f, "h(t) must not contain the variable x")
            }
            ValidationError::PeriodicityMismatch {
                which,
                t,
                x,
                base,
                shifted,
            } => write!(
                f,
                "{which} is not T-periodic: value {base} at t = {t} (x = {x}) vs {shifted} at t + T"
            ),
            ValidationError::DerivativeMismatch(report) => write!(
                f,
                "gx disagrees with the finite difference of g: mismatch {} at (t, x) = ({}, {}), tolerance {}",
                report.max_mismatch, report.worst_point.0, report.worst_point.1, report.tolerance
            ),
            ValidationError::Domain(err) => write!(f, "{err}"),
        }
    }
}

impl core::error::Error for ValidationError {}

impl From<PointDomainError> for ValidationError {
    fn from(err: PointDomainError) -> Self {
        ValidationError::Domain(err)
    }
}

/// A validated instance of `x'' + c x' + g(t, x) = h(t)`.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct DuffingProblem {
    c: f64,
    period: f64,
    g: Expr,
    gx: Expr,
    h: Expr,
}

impl DuffingProblem {
    /// Validates and builds a problem. The grid drives the periodicity and
    /// derivative checks; pass [`SampleGrid::default_for`] unless the
    /// nonlinearity needs a wider state range.
    pub fn new(
        c: f64,
        period: f64,
        g: Expr,
        gx: Expr,
        h: Expr,
        grid: &SampleGrid,
    ) -> Result<Self, ValidationError> {
        if !(c > 0.0) {
            return Err(ValidationError::NonPositiveDamping { c });
        }
        if !(period > 0.0) {
            return Err(ValidationError::NonPositivePeriod { period });
        }
        if h.uses_state() {
            return Err(ValidationError::ForcingDependsOnState);
        }

        // Sampled T-periodicity of g and h.
        for &t in grid.t_points() {
            for &x in grid.x_points() {
                let base = g.eval(t, x).map_err(|e| point_err(t, x, e))?;
                let shifted = g.eval(t + period, x).map_err(|e| point_err(t + period, x, e))?;
                if math::abs(shifted - base) > PERIODICITY_TOL * (1.0 + math::abs(base)) {
                    return Err(ValidationError::PeriodicityMismatch {
                        which: "g",
                        t,
                        x,
                        base,
                        shifted,
                    });
                }
            }
            let base = h.eval(t, 0.0).map_err(|e| point_err(t, 0.0, e))?;
            let shifted = h
                .eval(t + period, 0.0)
                .map_err(|e| point_err(t + period, 0.0, e))?;
            if math::abs(shifted - base) > PERIODICITY_TOL * (1.0 + math::abs(base)) {
                return Err(ValidationError::PeriodicityMismatch {
                    which: "h",
                    t,
                    x: 0.0,
                    base,
                    shifted,
                });
            }
        }

        // The variational equation consumes gx along trajectories; a wrong
        // derivative silently corrupts every multiplier, so it is rejected
        // here rather than discovered downstream.
        let report = check_derivative(&g, &gx, grid.t_points(), grid.x_points(), DERIVATIVE_TOL)?;
        if !report.passed {
            return Err(ValidationError::DerivativeMismatch(report));
        }

        Ok(DuffingProblem { c, period, g, gx, h })
    }

    pub fn damping(&self) -> f64 {
        self.c
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn g(&self) -> &Expr {
        &self.g
    }

    pub fn gx(&self) -> &Expr {
        &self.gx
    }

    pub fn h(&self) -> &Expr {
        &self.h
    }

    pub fn g_at(&self, t: f64, x: f64) -> Result<f64, DomainError> {
        self.g.eval(t, x)
    }

    pub fn gx_at(&self, t: f64, x: f64) -> Result<f64, DomainError> {
        self.gx.eval(t, x)
    }

    pub fn h_at(&self, t: f64) -> Result<f64, DomainError> {
        self.h.eval(t, 0.0)
    }
}

fn point_err(t: f64, x: f64, source: DomainError) -> ValidationError {
    ValidationError::Domain(PointDomainError { t, x, source })
}

/// Sampled envelopes of `gx` over the grid: for each `t`, the max and min
/// over the sampled `x`, plus global extremes and the trapezoid integral of
/// the lower envelope over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    /// `(t, max over sampled x of gx(t, x))` per t sample.
    pub upper: Vec<(f64, f64)>,
    /// `(t, min over sampled x of gx(t, x))` per t sample.
    pub lower: Vec<(f64, f64)>,
    pub global_max: f64,
    pub global_min: f64,
    /// Trapezoid integral of the lower envelope over the t samples.
    pub lower_integral: f64,
}

/// Exhaustively evaluates `gx` over the grid and reports its envelopes.
pub fn sample_bounds(
    p: &DuffingProblem,
    grid: &SampleGrid,
) -> Result<BoundsReport, ValidationError> {
    let mut upper = Vec::with_capacity(grid.t_points().len());
    let mut lower = Vec::with_capacity(grid.t_points().len());
    let mut global_max = f64::NEG_INFINITY;
    let mut global_min = f64::INFINITY;
    for &t in grid.t_points() {
        let mut tmax = f64::NEG_INFINITY;
        let mut tmin = f64::INFINITY;
        for &x in grid.x_points() {
            let v = p.gx_at(t, x).map_err(|e| point_err(t, x, e))?;
            tmax = tmax.max(v);
            tmin = tmin.min(v);
        }
        upper.push((t, tmax));
        lower.push((t, tmin));
        global_max = global_max.max(tmax);
        global_min = global_min.min(tmin);
    }
    let ts: Vec<f64> = lower.iter().map(|&(t, _)| t).collect();
    let lows: Vec<f64> = lower.iter().map(|&(_, v)| v).collect();
    let lower_integral = math::trapezoid(&ts, &lows);
    Ok(BoundsReport {
        upper,
        lower,
        global_max,
        global_min,
        lower_integral,
    })
}

/// Builds a validated problem from source strings, panicking on any error.
#[cfg(test)]
pub(crate) fn test_problem(c: f64, period: f64, g: &str, gx: &str, h: &str) -> DuffingProblem {
    let grid = SampleGrid::default_for(period);
    DuffingProblem::new(
        c,
        period,
        crate::expr::parse(g).unwrap(),
        crate::expr::parse(gx).unwrap(),
        crate::expr::parse(h).unwrap(),
        &grid,
    )
    .unwrap()
}
