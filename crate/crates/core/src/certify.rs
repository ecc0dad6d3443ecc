//! Sampled hypothesis checkers emitting structured certificates.
//!
//! Each checker probes the derivative/secant bounds that guarantee a
//! unique periodic solution (and, in the ladder-cell regimes, the sharp
//! decay rate `c/2`) and reports per-condition verdicts with witnesses.
//! All quantifiers over the real line are evaluated on the declared sample
//! grid only, and every status says so: `satisfied_on_samples` is an
//! honest label, not a proof.
//!
//! The certificate identifiers follow the CLI wire format: `T1` (upper
//! derivative envelope below the first ladder value plus a positive-mean
//! lower envelope), `T2` (derivative range inside a ladder cell), `T3`
//! (secant-slope variant for autonomous `g`, plus a forcing-criticality
//! proxy), and `L3.2` (solvability of the mean equation for autonomous
//! monotone `g`).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::PointDomainError;
use crate::floquet::{find_ladder_cell, ladder_eigenvalue};
use crate::math;
use crate::problem::{sample_bounds, DuffingProblem, SampleGrid, ValidationError};

/// Fraction of `t` samples that must satisfy a strict inequality for the
/// "strictly below on positive measure" proxy. Every report states the
/// threshold it used.
pub const DEFAULT_STRICT_FRACTION: f64 = 0.01;

/// Relative near-zero threshold for the forcing-derivative criticality
/// proxy.
const CRITICAL_NEAR_ZERO: f64 = 1e-9;

/// Consecutive near-zero samples that count as a plateau (and fail the
/// criticality proxy).
const PLATEAU_RUN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    T1,
    T2,
    T3,
    L32,
}

impl CertificateKind {
    pub fn name(self) -> &'static str {
        match self {
            CertificateKind::T1 => "T1",
            CertificateKind::T2 => "T2",
            CertificateKind::T3 => "T3",
            CertificateKind::L32 => "L3.2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionStatus {
    SatisfiedOnSamples,
    Violated,
    NotApplicable,
}

impl ConditionStatus {
    pub fn name(self) -> &'static str {
        match self {
            ConditionStatus::SatisfiedOnSamples => "satisfied_on_samples",
            ConditionStatus::Violated => "violated",
            ConditionStatus::NotApplicable => "not_applicable",
        }
    }
}

/// Sample point and values behind a violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub t: Option<f64>,
    pub x: Option<f64>,
    /// Second state coordinate for pair witnesses (secant slopes).
    pub x2: Option<f64>,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: &'static str,
    pub status: ConditionStatus,
    pub detail: String,
    pub witness: Option<Witness>,
}

/// Grid shape echoed into every certificate so the sampled character of
/// the verdict is visible in the output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSummary {
    pub t_count: usize,
    pub x_count: usize,
    pub t_range: (f64, f64),
    pub x_range: (f64, f64),
}

impl From<&SampleGrid> for GridSummary {
    fn from(grid: &SampleGrid) -> Self {
        GridSummary {
            t_count: grid.t_points().len(),
            x_count: grid.x_points().len(),
            t_range: grid.t_range(),
            x_range: grid.x_range(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub kind: CertificateKind,
    /// Located ladder cell index for the `T2`/`T3` range conditions.
    pub ladder_index: Option<u32>,
    pub conditions: Vec<Condition>,
    /// Nonempty exactly when every condition is satisfied on samples.
    pub predicted_conclusion: Option<String>,
    pub grid: GridSummary,
}

impl CertificateReport {
    pub fn all_satisfied(&self) -> bool {
        self.conditions
            .iter()
            .all(|c| c.status == ConditionStatus::SatisfiedOnSamples)
    }

    fn finish(mut self, conclusion: &str) -> Self {
        self.predicted_conclusion = if self.all_satisfied() {
            Some(String::from(conclusion))
        } else {
            None
        };
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CertifyError {
    /// Expression evaluation failed while sampling.
    Sampling(ValidationError),
    /// The sampled `g` decreases somewhere on the declared range, so the
    /// monotone existence criterion does not apply.
    NotMonotone {
        x_prev: f64,
        x_next: f64,
        g_prev: f64,
        g_next: f64,
    },
}

impl core::fmt::Display for CertifyError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CertifyError::Sampling(e) => write!(f, "{e}"),
            CertifyError::NotMonotone {
                x_prev,
                x_next,
                g_prev,
                g_next,
            } => write!(
                f,
                "g is not increasing on samples: g({x_prev}) = {g_prev} but g({x_next}) = {g_next}"
            ),
        }
    }
}

impl core::error::Error for CertifyError {}

impl From<ValidationError> for CertifyError {
    fn from(e: ValidationError) -> Self {
        CertifyError::Sampling(e)
    }
}

impl From<PointDomainError> for CertifyError {
    fn from(e: PointDomainError) -> Self {
        CertifyError::Sampling(ValidationError::Domain(e))
    }
}

/// Upper-envelope criterion: `sup_x gx(t, x) <= lambda_1` at every `t`
/// sample, strictly on at least `strict_fraction` of them, plus a
/// positive trapezoid integral of the lower envelope.
pub fn check_envelope_criterion(
    p: &DuffingProblem,
    grid: &SampleGrid,
    strict_fraction: f64,
) -> Result<CertificateReport, CertifyError> {
    let bounds = sample_bounds(p, grid)?;
    let lambda_1 = ladder_eigenvalue(1, p.damping(), p.period());
    let slack = 1e-12 * lambda_1.max(1.0);

    let mut conditions = Vec::new();

    let offender = bounds
        .upper
        .iter()
        .find(|&&(_, v)| v > lambda_1 + slack)
        .copied();
    let strict = bounds
        .upper
        .iter()
        .filter(|&&(_, v)| v < lambda_1 - slack)
        .count();
    let needed = (strict_fraction * bounds.upper.len() as f64) as usize;
    let cond = if let Some((t, value)) = offender {
        let x = locate_gx_value(p, grid, t, value);
        Condition {
            name: "sup-gx-below-lambda1",
            status: ConditionStatus::Violated,
            detail: format!(
                "sup_x gx({t}, x) = {value} exceeds lambda_1 = {lambda_1} (sampled x range {:?})",
                grid.x_range()
            ),
            witness: Some(Witness {
                t: Some(t),
                x,
                x2: None,
                value,
                bound: lambda_1,
            }),
        }
    } else if strict < needed.max(1) {
        Condition {
            name: "sup-gx-below-lambda1",
            status: ConditionStatus::Violated,
            detail: format!(
                "strict inequality holds on {strict} of {} t samples; the positive-measure proxy needs at least {} ({}%)",
                bounds.upper.len(),
                needed.max(1),
                strict_fraction * 100.0
            ),
            witness: None,
        }
    } else {
        Condition {
            name: "sup-gx-below-lambda1",
            status: ConditionStatus::SatisfiedOnSamples,
            detail: format!(
                "sup_x gx <= lambda_1 = {lambda_1} at all {} t samples, strictly on {strict} (proxy threshold {}%)",
                bounds.upper.len(),
                strict_fraction * 100.0
            ),
            witness: None,
        }
    };
    conditions.push(cond);

    let integral = bounds.lower_integral;
    conditions.push(if integral > 0.0 {
        Condition {
            name: "mean-lower-envelope-positive",
            status: ConditionStatus::SatisfiedOnSamples,
            detail: format!("trapezoid integral of inf_x gx over one period is {integral} > 0"),
            witness: None,
        }
    } else {
        Condition {
            name: "mean-lower-envelope-positive",
            status: ConditionStatus::Violated,
            detail: format!("trapezoid integral of inf_x gx over one period is {integral} <= 0"),
            witness: Some(Witness {
                t: None,
                x: None,
                x2: None,
                value: integral,
                bound: 0.0,
            }),
        }
    });

    Ok(CertificateReport {
        kind: CertificateKind::T1,
        ladder_index: None,
        conditions,
        predicted_conclusion: None,
        grid: grid.into(),
    }
    .finish("unique T-periodic solution, asymptotically stable"))
}

/// Ladder-cell criterion: the sampled range of `gx` lies inside
/// `[lambda_n, lambda_{n+1}]` for some `n >= 1`.
pub fn check_derivative_cell_criterion(
    p: &DuffingProblem,
    grid: &SampleGrid,
) -> Result<CertificateReport, CertifyError> {
    let bounds = sample_bounds(p, grid)?;
    let (lo, hi) = (bounds.global_min, bounds.global_max);
    let cell = find_ladder_cell(p.damping(), p.period(), lo, hi);

    let (condition, ladder_index) = match cell {
        Some((n, lower, upper)) => (
            Condition {
                name: "gx-range-within-ladder-cell",
                status: ConditionStatus::SatisfiedOnSamples,
                detail: format!(
                    "sampled gx range [{lo}, {hi}] lies in cell n = {n}: [{lower}, {upper}]"
                ),
                witness: None,
            },
            Some(n),
        ),
        None => {
            let lambda_1 = ladder_eigenvalue(1, p.damping(), p.period());
            // Witness the extreme that breaks containment: the minimum if
            // it sits below the ladder, otherwise the straddling maximum.
            let (value, bound) = if lo < lambda_1 {
                (lo, lambda_1)
            } else {
                (hi, lambda_1)
            };
            let t_hit = locate_gx_extreme(p, grid, value);
            (
                Condition {
                    name: "gx-range-within-ladder-cell",
                    status: ConditionStatus::Violated,
                    detail: format!(
                        "sampled gx range [{lo}, {hi}] fits no ladder cell with n >= 1 (lambda_1 = {lambda_1})"
                    ),
                    witness: Some(Witness {
                        t: t_hit.map(|(t, _)| t),
                        x: t_hit.map(|(_, x)| x),
                        x2: None,
                        value,
                        bound,
                    }),
                },
                None,
            )
        }
    };

    Ok(CertificateReport {
        kind: CertificateKind::T2,
        ladder_index,
        conditions: alloc::vec![condition],
        predicted_conclusion: None,
        grid: grid.into(),
    }
    .finish("unique T-periodic solution, stable with rate of decay c/2"))
}

/// Secant-slope variant for autonomous `g`: all difference quotients over
/// the secant grid lie in one ladder cell (`n >= 1`, mirroring the
/// derivative criterion), and the forcing derivative has only finitely
/// many near-zeros on the grid (no plateau).
pub fn check_secant_cell_criterion(
    p: &DuffingProblem,
    grid: &SampleGrid,
    secant_xs: &[f64],
) -> Result<CertificateReport, CertifyError> {
    if p.g().uses_time() {
        return Ok(not_applicable_report(
            CertificateKind::T3,
            grid,
            "g depends on t; the autonomous secant criterion does not apply",
        ));
    }

    let mut conditions = Vec::new();
    let mut ladder_index = None;

    // (a) secant slopes within a ladder cell.
    let mut values = Vec::with_capacity(secant_xs.len());
    for &x in secant_xs {
        let v = p.g_at(0.0, x).map_err(|source| {
            CertifyError::Sampling(ValidationError::Domain(PointDomainError {
                t: 0.0,
                x,
                source,
            }))
        })?;
        values.push(v);
    }
    let mut min_slope = f64::INFINITY;
    let mut max_slope = f64::NEG_INFINITY;
    let mut min_pair = (0.0, 0.0);
    let mut max_pair = (0.0, 0.0);
    for i in 0..secant_xs.len() {
        for j in (i + 1)..secant_xs.len() {
            let slope = (values[j] - values[i]) / (secant_xs[j] - secant_xs[i]);
            if slope < min_slope {
                min_slope = slope;
                min_pair = (secant_xs[i], secant_xs[j]);
            }
            if slope > max_slope {
                max_slope = slope;
                max_pair = (secant_xs[i], secant_xs[j]);
            }
        }
    }
    match find_ladder_cell(p.damping(), p.period(), min_slope, max_slope) {
        Some((n, lower, upper)) => {
            ladder_index = Some(n);
            conditions.push(Condition {
                name: "secant-slopes-within-ladder-cell",
                status: ConditionStatus::SatisfiedOnSamples,
                detail: format!(
                    "secant slopes span [{min_slope}, {max_slope}] inside cell n = {n}: [{lower}, {upper}] (cells indexed from n = 1)"
                ),
                witness: None,
            });
        }
        None => {
            let lambda_1 = ladder_eigenvalue(1, p.damping(), p.period());
            let (value, pair) = if min_slope < lambda_1 {
                (min_slope, min_pair)
            } else {
                (max_slope, max_pair)
            };
            conditions.push(Condition {
                name: "secant-slopes-within-ladder-cell",
                status: ConditionStatus::Violated,
                detail: format!(
                    "secant slopes span [{min_slope}, {max_slope}], which fits no ladder cell with n >= 1 (cells indexed from n = 1)"
                ),
                witness: Some(Witness {
                    t: None,
                    x: Some(pair.0),
                    x2: Some(pair.1),
                    value,
                    bound: lambda_1,
                }),
            });
        }
    }

    // (b) critical set of the forcing is finite on samples: central
    // differences of h, near-zeros relative to the largest derivative,
    // and no run of three or more consecutive near-zeros.
    conditions.push(forcing_criticality_condition(p, grid)?);

    Ok(CertificateReport {
        kind: CertificateKind::T3,
        ladder_index,
        conditions,
        predicted_conclusion: None,
        grid: grid.into(),
    }
    .finish("unique T-periodic solution, stable with rate of decay c/2"))
}

fn forcing_criticality_condition(
    p: &DuffingProblem,
    grid: &SampleGrid,
) -> Result<Condition, CertifyError> {
    let ts = grid.t_points();
    let mut derivs = Vec::with_capacity(ts.len());
    for &t in ts {
        let delta = 1e-6f64.max(1e-6 * math::abs(t));
        let plus = p.h_at(t + delta).map_err(|source| domain_at(t + delta, source))?;
        let minus = p.h_at(t - delta).map_err(|source| domain_at(t - delta, source))?;
        derivs.push((plus - minus) / (2.0 * delta));
    }
    let max_abs = derivs.iter().fold(0.0f64, |acc, d| acc.max(math::abs(*d)));
    let threshold = CRITICAL_NEAR_ZERO * max_abs;
    let near_zero: Vec<bool> = derivs.iter().map(|d| math::abs(*d) <= threshold).collect();

    let mut run = 0usize;
    let mut plateau_at: Option<usize> = None;
    for (i, &nz) in near_zero.iter().enumerate() {
        if nz {
            run += 1;
            if run >= PLATEAU_RUN {
                plateau_at = Some(i + 1 - run);
                break;
            }
        } else {
            run = 0;
        }
    }
    let isolated = near_zero.iter().filter(|&&nz| nz).count();
    let sign_changes = derivs
        .windows(2)
        .filter(|w| w[0] * w[1] < 0.0)
        .count();

    Ok(match plateau_at {
        Some(start) => Condition {
            name: "forcing-critical-set-finite",
            status: ConditionStatus::Violated,
            detail: format!(
                "h' stays within {threshold} of zero on {PLATEAU_RUN}+ consecutive samples starting at t = {}; the critical set is not isolated on this grid",
                ts[start]
            ),
            witness: Some(Witness {
                t: Some(ts[start]),
                x: None,
                x2: None,
                value: derivs[start],
                bound: threshold,
            }),
        },
        None => Condition {
            name: "forcing-critical-set-finite",
            status: ConditionStatus::SatisfiedOnSamples,
            detail: format!(
                "h' has {sign_changes} sign changes and {isolated} isolated near-zeros on {} samples (threshold {threshold})",
                ts.len()
            ),
            witness: None,
        },
    })
}

/// Existence criterion for autonomous, sampled-monotone `g` under constant
/// friction `c`: the mean forcing must land inside the sampled range of
/// `g`. By the mean-equation argument this is also necessary, so a
/// violation predicts nonexistence.
pub fn check_mean_forcing_criterion(
    p: &DuffingProblem,
    x_range: (f64, f64),
) -> Result<CertificateReport, CertifyError> {
    let grid = SampleGrid::uniform(2, p.period(), 2, x_range);
    if p.g().uses_time() {
        return Ok(not_applicable_report(
            CertificateKind::L32,
            &grid,
            "g depends on t; the autonomous existence criterion does not apply",
        ));
    }

    let xs = math::linspace(x_range.0, x_range.1, 1025);
    let mut prev: Option<(f64, f64)> = None;
    for &x in &xs {
        let v = p.g_at(0.0, x).map_err(|source| domain_at_x(x, source))?;
        if let Some((x_prev, g_prev)) = prev {
            if v < g_prev {
                return Err(CertifyError::NotMonotone {
                    x_prev,
                    x_next: x,
                    g_prev,
                    g_next: v,
                });
            }
        }
        prev = Some((x, v));
    }

    let mean = forcing_mean(p).map_err(|source| domain_at(0.0, source))?;
    let g_lo = p.g_at(0.0, x_range.0).map_err(|s| domain_at_x(x_range.0, s))?;
    let g_hi = p.g_at(0.0, x_range.1).map_err(|s| domain_at_x(x_range.1, s))?;

    let mut conditions = Vec::new();
    conditions.push(if g_lo < mean && mean < g_hi {
        Condition {
            name: "mean-forcing-within-nonlinearity-range",
            status: ConditionStatus::SatisfiedOnSamples,
            detail: format!(
                "mean forcing {mean} lies inside the sampled range ({g_lo}, {g_hi}) of g on [{}, {}]",
                x_range.0, x_range.1
            ),
            witness: None,
        }
    } else {
        let bound = if mean <= g_lo { g_lo } else { g_hi };
        Condition {
            name: "mean-forcing-within-nonlinearity-range",
            status: ConditionStatus::Violated,
            detail: format!(
                "mean forcing {mean} falls outside the sampled range ({g_lo}, {g_hi}) of g; no T-periodic solution exists if this range covers g's image"
            ),
            witness: Some(Witness {
                t: None,
                x: None,
                x2: None,
                value: mean,
                bound,
            }),
        }
    });
    conditions.push(Condition {
        name: "friction-bounded-below",
        status: ConditionStatus::SatisfiedOnSamples,
        detail: format!(
            "constant friction c = {} serves as the lower bound k > 0",
            p.damping()
        ),
        witness: None,
    });

    Ok(CertificateReport {
        kind: CertificateKind::L32,
        ladder_index: None,
        conditions,
        predicted_conclusion: None,
        grid: (&grid).into(),
    }
    .finish("a T-periodic solution exists"))
}

/// Mean of the forcing over one period, by a 4096-point trapezoid rule.
pub fn forcing_mean(p: &DuffingProblem) -> Result<f64, crate::expr::DomainError> {
    let ts = math::linspace(0.0, p.period(), 4096);
    let mut hs = Vec::with_capacity(ts.len());
    for &t in &ts {
        hs.push(p.h_at(t)?);
    }
    Ok(math::trapezoid(&ts, &hs) / p.period())
}

fn not_applicable_report(
    kind: CertificateKind,
    grid: &SampleGrid,
    detail: &str,
) -> CertificateReport {
    CertificateReport {
        kind,
        ladder_index: None,
        conditions: alloc::vec![Condition {
            name: "autonomous",
            status: ConditionStatus::NotApplicable,
            detail: String::from(detail),
            witness: None,
        }],
        predicted_conclusion: None,
        grid: grid.into(),
    }
}

fn domain_at(t: f64, source: crate::expr::DomainError) -> CertifyError {
    CertifyError::Sampling(ValidationError::Domain(PointDomainError {
        t,
        x: 0.0,
        source,
    }))
}

fn domain_at_x(x: f64, source: crate::expr::DomainError) -> CertifyError {
    CertifyError::Sampling(ValidationError::Domain(PointDomainError {
        t: 0.0,
        x,
        source,
    }))
}

/// First grid point where `gx` attains `value` (up to rounding); used to
/// attach state coordinates to envelope witnesses.
fn locate_gx_value(
    p: &DuffingProblem,
    grid: &SampleGrid,
    t: f64,
    value: f64,
) -> Option<f64> {
    let tol = 1e-12 * (1.0 + math::abs(value));
    grid.x_points()
        .iter()
        .copied()
        .find(|&x| matches!(p.gx_at(t, x), Ok(v) if math::abs(v - value) <= tol))
}

fn locate_gx_extreme(
    p: &DuffingProblem,
    grid: &SampleGrid,
    value: f64,
) -> Option<(f64, f64)> {
    let tol = 1e-12 * (1.0 + math::abs(value));
    for &t in grid.t_points() {
        for &x in grid.x_points() {
            if matches!(p.gx_at(t, x), Ok(v) if math::abs(v - value) <= tol) {
                return Some((t, x));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::test_problem;

    const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

    fn default_grid() -> SampleGrid {
        SampleGrid::default_for(TWO_PI)
    }

    #[test]
    fn envelope_passes_for_weak_nonlinearity() {
        // gx = 0.3 / (1 + x^2) + 0.1 in (0.1, 0.4], below lambda_1 = 0.5.
        let p = test_problem(
            1.0,
            TWO_PI,
            "0.3*atan(x)+0.1*x",
            "0.3/(1+x^2)+0.1",
            "cos(t)",
        );
        let report = check_envelope_criterion(&p, &default_grid(), DEFAULT_STRICT_FRACTION).unwrap();
        assert!(report.all_satisfied(), "{:?}", report.conditions);
        assert!(report.predicted_conclusion.is_some());
    }

    #[test]
    fn envelope_rejects_derivative_above_principal_eigenvalue() {
        // gx = 1 > lambda_1 = 0.5 everywhere.
        let p = test_problem(1.0, TWO_PI, "x", "1", "cos(t)");
        let report = check_envelope_criterion(&p, &default_grid(), DEFAULT_STRICT_FRACTION).unwrap();
        let cond = &report.conditions[0];
        assert_eq!(cond.status, ConditionStatus::Violated);
        let w = cond.witness.unwrap();
        assert_eq!(w.value, 1.0);
        assert!(report.predicted_conclusion.is_none());
    }

    #[test]
    fn envelope_rejects_zero_mean_lower_envelope() {
        // gx = 0.1 cos(t) / (1 + x^2): lower envelope integrates below 0.
        let p = test_problem(
            1.0,
            TWO_PI,
            "0.1*cos(t)*atan(x)",
            "0.1*cos(t)/(1+x^2)",
            "cos(t)",
        );
        let report = check_envelope_criterion(&p, &default_grid(), DEFAULT_STRICT_FRACTION).unwrap();
        assert_eq!(report.conditions[0].status, ConditionStatus::SatisfiedOnSamples);
        assert_eq!(report.conditions[1].status, ConditionStatus::Violated);
    }

    #[test]
    fn derivative_cell_locates_the_second_cell() {
        let p = test_problem(1.0, TWO_PI, "2*x+0.5*atan(x)", "2+0.5/(1+x^2)", "cos(t)");
        let report = check_derivative_cell_criterion(&p, &default_grid()).unwrap();
        assert!(report.all_satisfied());
        assert_eq!(report.ladder_index, Some(2));
    }

    #[test]
    fn derivative_cell_rejects_straddling_range() {
        // gx in (0.6, 1.3] straddles lambda_2 = 1.25.
        let p = test_problem(1.0, TWO_PI, "0.6*x+0.7*atan(x)", "0.6+0.7/(1+x^2)", "cos(t)");
        let report = check_derivative_cell_criterion(&p, &default_grid()).unwrap();
        assert_eq!(report.conditions[0].status, ConditionStatus::Violated);
        assert!(report.conditions[0].witness.is_some());
        assert!(report.ladder_index.is_none());
    }

    #[test]
    fn derivative_cell_accepts_the_cell_boundary() {
        // gx = 0.5 = lambda_1 exactly: closed inequalities admit n = 1.
        let p = test_problem(1.0, TWO_PI, "x/2", "0.5", "cos(t)");
        let report = check_derivative_cell_criterion(&p, &default_grid()).unwrap();
        assert!(report.all_satisfied(), "{:?}", report.conditions);
        assert_eq!(report.ladder_index, Some(1));
    }

    #[test]
    fn derivative_cell_violation_persists_under_refinement() {
        let p = test_problem(1.0, TWO_PI, "0.6*x+0.7*atan(x)", "0.6+0.7/(1+x^2)", "cos(t)");
        let coarse = SampleGrid::uniform(17, TWO_PI, 33, (-20.0, 20.0));
        let fine = SampleGrid::uniform(33, TWO_PI, 65, (-20.0, 20.0));
        assert_eq!(
            check_derivative_cell_criterion(&p, &coarse).unwrap().conditions[0].status,
            ConditionStatus::Violated
        );
        assert_eq!(
            check_derivative_cell_criterion(&p, &fine).unwrap().conditions[0].status,
            ConditionStatus::Violated
        );
    }

    #[test]
    fn secant_cell_agrees_with_derivative_cell() {
        let p = test_problem(1.0, TWO_PI, "2*x+0.5*atan(x)", "2+0.5/(1+x^2)", "cos(t)");
        let grid = default_grid();
        let secant = check_secant_cell_criterion(&p, &grid, grid.x_points()).unwrap();
        assert!(secant.all_satisfied(), "{:?}", secant.conditions);
        let derivative = check_derivative_cell_criterion(&p, &grid).unwrap();
        // Secant slopes of a differentiable g lie in the hull of its
        // derivative range, so both checks land in the same cell.
        assert_eq!(secant.ladder_index, derivative.ladder_index);
    }

    #[test]
    fn secant_cell_rejects_constant_forcing() {
        let p = test_problem(1.0, TWO_PI, "2*x+0.5*atan(x)", "2+0.5/(1+x^2)", "1");
        let grid = default_grid();
        let report = check_secant_cell_criterion(&p, &grid, grid.x_points()).unwrap();
        let crit = report
            .conditions
            .iter()
            .find(|c| c.name == "forcing-critical-set-finite")
            .unwrap();
        assert_eq!(crit.status, ConditionStatus::Violated);
    }

    #[test]
    fn secant_cell_rejects_unbounded_slopes() {
        let p = test_problem(1.0, TWO_PI, "x^3", "3*x^2", "cos(t)");
        let grid = default_grid();
        let report = check_secant_cell_criterion(&p, &grid, grid.x_points()).unwrap();
        let slopes = &report.conditions[0];
        assert_eq!(slopes.status, ConditionStatus::Violated);
        let w = slopes.witness.unwrap();
        assert!(w.x.is_some() && w.x2.is_some());
    }

    #[test]
    fn secant_cell_not_applicable_for_time_dependent_g() {
        let p = test_problem(1.0, TWO_PI, "(2+cos(t))*x", "2+cos(t)", "cos(t)");
        let grid = default_grid();
        let report = check_secant_cell_criterion(&p, &grid, grid.x_points()).unwrap();
        assert_eq!(report.conditions.len(), 1);
        assert_eq!(report.conditions[0].status, ConditionStatus::NotApplicable);
        assert!(report.predicted_conclusion.is_none());
    }

    #[test]
    fn mean_forcing_dichotomy_for_bounded_nonlinearity() {
        // Mean forcing 1 sits inside atan's range; mean forcing 2 does not.
        let inside = test_problem(1.0, TWO_PI, "atan(x)", "1/(1+x^2)", "1+cos(t)");
        let report = check_mean_forcing_criterion(&inside, (-20.0, 20.0)).unwrap();
        assert!(report.all_satisfied(), "{:?}", report.conditions);

        let outside = test_problem(1.0, TWO_PI, "atan(x)", "1/(1+x^2)", "2+cos(t)");
        let report = check_mean_forcing_criterion(&outside, (-20.0, 20.0)).unwrap();
        assert_eq!(report.conditions[0].status, ConditionStatus::Violated);
        let w = report.conditions[0].witness.unwrap();
        assert!((w.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mean_forcing_surjective_linear_nonlinearity() {
        let p = test_problem(1.0, TWO_PI, "x", "1", "cos(t)");
        let report = check_mean_forcing_criterion(&p, (-20.0, 20.0)).unwrap();
        assert!(report.all_satisfied());
    }

    #[test]
    fn mean_forcing_rejects_decreasing_nonlinearity() {
        let p = test_problem(1.0, TWO_PI, "-x", "-1", "cos(t)");
        let err = check_mean_forcing_criterion(&p, (-20.0, 20.0)).unwrap_err();
        assert!(matches!(err, CertifyError::NotMonotone { .. }));
    }
}
