//! Monodromy matrices, Floquet multipliers, and stability classification.
//!
//! The monodromy matrix is the variational flow over one period with
//! identity initial data. Its eigenvalues (the Floquet multipliers) are
//! solved from the characteristic quadratic in closed form; the trace and
//! determinant route is exact for a 2x2 matrix and keeps the phase-volume
//! identity `det M(T) = e^{-cT}` available as an independent check on the
//! integration.

use crate::linalg::{Complex, Mat2};
use crate::math;
use crate::odeint::{
    dormand_prince, integrate_with_variational, IntegratorSettings, OdeError, PlanarState,
};
use crate::problem::DuffingProblem;

/// Acceptable relative drift of `det M(T)` from `e^{-cT}`.
pub const DET_DRIFT_TOL: f64 = 1e-6;

/// Relative discriminant threshold below which the multiplier pair is
/// treated as a double root: below integration noise, above rounding noise.
pub const DISCRIMINANT_TIE: f64 = 1e-12;

/// Half-width of the nonhyperbolic band around `|rho| = 1`.
pub const HYPERBOLICITY_MARGIN: f64 = 1e-9;

// Rounding slack for comparisons against the ladder values, which are
// computed from a floating-point period.
const LADDER_SLACK: f64 = 1e-12;

/// Variational flow over one period, carrying the damping and period it
/// was computed under so the determinant identity stays checkable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyMatrix {
    matrix: Mat2,
    damping: f64,
    period: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FloquetError {
    Ode(OdeError),
    /// `det M(T)` strayed from `e^{-cT}` beyond [`DET_DRIFT_TOL`]; the
    /// integration cannot be trusted.
    DeterminantDrift { det: f64, expected: f64 },
}

impl core::fmt::Display for FloquetError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FloquetError::Ode(e) => write!(f, "{e}"),
            FloquetError::DeterminantDrift { det, expected } => write!(
                f,
                "monodromy determinant {det} drifted from the phase-volume value {expected}"
            ),
        }
    }
}

impl core::error::Error for FloquetError {}

impl From<OdeError> for FloquetError {
    fn from(e: OdeError) -> Self {
        FloquetError::Ode(e)
    }
}

impl MonodromyMatrix {
    /// Wraps a transition matrix, enforcing the determinant identity.
    pub fn from_transition(matrix: Mat2, damping: f64, period: f64) -> Result<Self, FloquetError> {
        let expected = math::exp(-damping * period);
        if !matrix.is_finite() || math::abs(matrix.det() - expected) > DET_DRIFT_TOL * expected {
            return Err(FloquetError::DeterminantDrift {
                det: matrix.det(),
                expected,
            });
        }
        Ok(MonodromyMatrix {
            matrix,
            damping,
            period,
        })
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn period(&self) -> f64 {
        self.period
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    ComplexPair,
    RealDistinct,
    RealDouble,
}

impl PairClass {
    pub fn name(self) -> &'static str {
        match self {
            PairClass::ComplexPair => "complex_pair",
            PairClass::RealDistinct => "real_distinct",
            PairClass::RealDouble => "real_double",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    AsymptoticallyStable,
    Unstable,
    Nonhyperbolic,
}

impl Stability {
    pub fn name(self) -> &'static str {
        match self {
            Stability::AsymptoticallyStable => "asymptotically_stable",
            Stability::Unstable => "unstable",
            Stability::Nonhyperbolic => "nonhyperbolic",
        }
    }
}

/// Multipliers, exponents, and the stability verdict they imply.
///
/// The first multiplier has the larger modulus; a complex pair lists the
/// positive-imaginary member first. Exponents are `ln(rho) / T` on the
/// principal branch. `decay_rate` is `-max Re(exponent)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetSpectrum {
    pub multipliers: (Complex, Complex),
    pub exponents: (Complex, Complex),
    pub pair_class: PairClass,
    pub verdict: Stability,
    pub decay_rate: f64,
}

/// Monodromy of the variational equation along the orbit from `s0`,
/// integrated in `(x, x')` coordinates over one period.
pub fn monodromy_at(
    p: &DuffingProblem,
    s0: PlanarState,
    settings: &IntegratorSettings,
) -> Result<MonodromyMatrix, FloquetError> {
    let aug = integrate_with_variational(p, s0, 0.0, p.period(), settings)?;
    MonodromyMatrix::from_transition(aug.transition, p.damping(), p.period())
}

/// Monodromy along the same orbit in Liouville coordinates `(x, y)` with
/// `y = x' + c x`, where the linearization matrix is
/// `[[-c, 1], [-gx, 0]]`. The result is similar to [`monodromy_at`]'s:
/// identical trace, determinant, and spectrum up to integration error.
/// Useful as an independent cross-check of the variational route.
pub fn monodromy_at_lienard(
    p: &DuffingProblem,
    s0: PlanarState,
    settings: &IntegratorSettings,
) -> Result<MonodromyMatrix, FloquetError> {
    let c = p.damping();
    let mut f = move |t: f64, y: &[f64; 6]| -> Result<[f64; 6], OdeError> {
        let g = p
            .g_at(t, y[0])
            .map_err(|source| OdeError::Domain { t, source })?;
        let h = p.h_at(t).map_err(|source| OdeError::Domain { t, source })?;
        let gx = p
            .gx_at(t, y[0])
            .map_err(|source| OdeError::Domain { t, source })?;
        Ok([
            y[1] - c * y[0],
            h - g,
            -c * y[2] + y[4],
            -c * y[3] + y[5],
            -gx * y[2],
            -gx * y[3],
        ])
    };
    let y0 = [s0.x, s0.v + c * s0.x, 1.0, 0.0, 0.0, 1.0];
    let y = dormand_prince(&mut f, 0.0, p.period(), y0, settings, None)?;
    MonodromyMatrix::from_transition(Mat2::new(y[2], y[3], y[4], y[5]), c, p.period())
}

/// Multipliers from the characteristic quadratic
/// `mu^2 - tr(M) mu + det(M) = 0`, classified and mapped to exponents.
pub fn spectrum(m: &MonodromyMatrix) -> FloquetSpectrum {
    let tr = m.matrix.trace();
    let det = m.matrix.det();
    let disc = tr * tr - 4.0 * det;

    let (rho1, rho2, pair_class) = if math::abs(disc) <= DISCRIMINANT_TIE * tr * tr {
        let r = Complex::from_real(0.5 * tr);
        (r, r, PairClass::RealDouble)
    } else if disc > 0.0 {
        // Larger-magnitude root first, computed without cancellation.
        let sgn = if tr >= 0.0 { 1.0 } else { -1.0 };
        let r1 = 0.5 * (tr + sgn * math::sqrt(disc));
        let r2 = det / r1;
        (
            Complex::from_real(r1),
            Complex::from_real(r2),
            PairClass::RealDistinct,
        )
    } else {
        let re = 0.5 * tr;
        let im = 0.5 * math::sqrt(-disc);
        (
            Complex::new(re, im),
            Complex::new(re, -im),
            PairClass::ComplexPair,
        )
    };

    spectrum_from_multipliers(rho1, rho2, pair_class, m.period())
}

pub(crate) fn spectrum_from_multipliers(
    rho1: Complex,
    rho2: Complex,
    pair_class: PairClass,
    period: f64,
) -> FloquetSpectrum {
    let lambda1 = rho1.ln().scale(1.0 / period);
    let lambda2 = rho2.ln().scale(1.0 / period);
    let decay_rate = -lambda1.re.max(lambda2.re);
    let max_modulus = rho1.modulus().max(rho2.modulus());
    let verdict = classify_modulus(max_modulus);
    FloquetSpectrum {
        multipliers: (rho1, rho2),
        exponents: (lambda1, lambda2),
        pair_class,
        verdict,
        decay_rate,
    }
}

pub(crate) fn classify_modulus(max_modulus: f64) -> Stability {
    if max_modulus < 1.0 - HYPERBOLICITY_MARGIN {
        Stability::AsymptoticallyStable
    } else if max_modulus > 1.0 + HYPERBOLICITY_MARGIN {
        Stability::Unstable
    } else {
        Stability::Nonhyperbolic
    }
}

/// `n`-th comparison eigenvalue `n^2 pi^2 / T^2 + c^2 / 4`. Consecutive
/// values delimit the derivative ranges that force each multiplier regime.
pub fn ladder_eigenvalue(n: u32, damping: f64, period: f64) -> f64 {
    let k = n as f64 * core::f64::consts::PI / period;
    k * k + 0.25 * damping * damping
}

/// Where a sampled `gx` range `[lo, hi]` sits relative to the ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LadderRegime {
    /// `hi <= lambda_1`: no negative real multiplier can occur; the orbit
    /// is asymptotically stable when the mean of `gx` along it is positive.
    SubPrincipal { lambda_1: f64 },
    /// `lambda_n <= lo <= hi <= lambda_{n+1}` for some `n >= 1`: the
    /// multipliers form a complex pair and the decay rate is `c/2`.
    Cell { n: u32, lower: f64, upper: f64 },
    /// The range straddles a ladder value; no classification follows.
    Straddling { lambda_1: f64 },
}

impl LadderRegime {
    pub fn expectation(&self) -> &'static str {
        match self {
            LadderRegime::SubPrincipal { .. } => {
                "no negative real multiplier; asymptotically stable if the mean of gx along the orbit is positive"
            }
            LadderRegime::Cell { .. } => "complex-conjugate multipliers with decay rate c/2",
            LadderRegime::Straddling { .. } => {
                "derivative range straddles a ladder value; no conclusion"
            }
        }
    }
}

/// Classifies the sampled range of `gx` along an orbit against the ladder
/// for the problem's damping and period.
pub fn ladder_regime(p: &DuffingProblem, gx_lo: f64, gx_hi: f64) -> LadderRegime {
    debug_assert!(gx_lo <= gx_hi);
    let c = p.damping();
    let period = p.period();
    let lambda_1 = ladder_eigenvalue(1, c, period);
    let slack = |v: f64| LADDER_SLACK * math::abs(v).max(1.0);
    if gx_hi <= lambda_1 + slack(lambda_1) {
        return LadderRegime::SubPrincipal { lambda_1 };
    }
    if let Some((n, lower, upper)) = find_ladder_cell(c, period, gx_lo, gx_hi) {
        return LadderRegime::Cell { n, lower, upper };
    }
    LadderRegime::Straddling { lambda_1 }
}

/// Smallest `n >= 1` with `lambda_n <= lo` and `hi <= lambda_{n+1}`, if any.
pub(crate) fn find_ladder_cell(
    damping: f64,
    period: f64,
    lo: f64,
    hi: f64,
) -> Option<(u32, f64, f64)> {
    let slack = |v: f64| LADDER_SLACK * math::abs(v).max(1.0);
    let mut n = 1u32;
    loop {
        let lower = ladder_eigenvalue(n, damping, period);
        if lower > lo + slack(lower) {
            return None;
        }
        let upper = ladder_eigenvalue(n + 1, damping, period);
        if hi <= upper + slack(upper) {
            return Some((n, lower, upper));
        }
        n += 1;
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::problem::test_problem;

    const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

    fn settings(len: f64) -> IntegratorSettings {
        IntegratorSettings::for_duration(len)
    }

    /// Closed-form exponential of the companion matrix [[0, 1], [-a, -c]]
    /// scaled by time `t`, built from the scalar solutions of
    /// `x'' + c x' + a x = 0`. Independent of the integration path.
    pub(crate) fn expm_companion(a: f64, c: f64, t: f64) -> Mat2 {
        let disc = 0.25 * c * c - a;
        if libm::fabs(disc) < 1e-14 {
            let r = -0.5 * c;
            let e = libm::exp(r * t);
            Mat2::new(
                e * (1.0 - r * t),
                e * t,
                -e * r * r * t,
                e * (1.0 + r * t),
            )
        } else if disc > 0.0 {
            let w = libm::sqrt(disc);
            let r1 = -0.5 * c + w;
            let r2 = -0.5 * c - w;
            let e1 = libm::exp(r1 * t);
            let e2 = libm::exp(r2 * t);
            let span = r1 - r2;
            let x2 = (e1 - e2) / span;
            Mat2::new(
                (r1 * e2 - r2 * e1) / span,
                x2,
                -a * x2,
                (r1 * e1 - r2 * e2) / span,
            )
        } else {
            let w = libm::sqrt(-disc);
            let e = libm::exp(-0.5 * c * t);
            let (sn, cs) = (libm::sin(w * t), libm::cos(w * t));
            let x2 = e * sn / w;
            Mat2::new(
                e * (cs + 0.5 * c * sn / w),
                x2,
                -a * x2,
                e * (cs - 0.5 * c * sn / w),
            )
        }
    }

    #[test]
    fn monodromy_of_free_damped_system() {
        let p = test_problem(1.0, 1.0, "0", "0", "0");
        let m = monodromy_at(&p, PlanarState::new(0.0, 0.0), &settings(1.0)).unwrap();
        let e = libm::exp(-1.0);
        let mm = m.matrix();
        assert!((mm.m11 - 1.0).abs() < 1e-8);
        assert!((mm.m12 - (1.0 - e)).abs() < 1e-8);
        assert!(mm.m21.abs() < 1e-8);
        assert!((mm.m22 - e).abs() < 1e-8);
    }

    #[test]
    fn monodromy_matches_matrix_exponential_oracle() {
        let p = test_problem(1.0, TWO_PI, "2*x", "2", "0");
        let m = monodromy_at(&p, PlanarState::new(0.7, -0.3), &settings(TWO_PI)).unwrap();
        let oracle = expm_companion(2.0, 1.0, TWO_PI);
        let d = m.matrix().sub(&oracle);
        let max = d
            .m11
            .abs()
            .max(d.m12.abs())
            .max(d.m21.abs())
            .max(d.m22.abs());
        assert!(max < 1e-8, "max deviation {max}");
    }

    #[test]
    fn determinant_identity() {
        let c = 0.8;
        let p = test_problem(c, TWO_PI, "2*x+0.5*atan(x)", "2+0.5/(1+x^2)", "cos(t)");
        let m = monodromy_at(&p, PlanarState::new(0.0, 0.0), &settings(TWO_PI)).unwrap();
        let expected = libm::exp(-c * TWO_PI);
        assert!((m.matrix().det() - expected).abs() <= 1e-6 * expected);
    }

    #[test]
    fn spectrum_of_damped_linear_problem() {
        // Roots of s^2 + s + 2 are (-1 +- i sqrt(7)) / 2, so |rho| = e^{-pi}.
        let p = test_problem(1.0, TWO_PI, "2*x", "2", "0");
        let m = monodromy_at(&p, PlanarState::new(0.0, 0.0), &settings(TWO_PI)).unwrap();
        let s = spectrum(&m);
        assert_eq!(s.pair_class, PairClass::ComplexPair);
        assert_eq!(s.verdict, Stability::AsymptoticallyStable);
        let expected_mod = libm::exp(-core::f64::consts::PI);
        assert!((s.multipliers.0.modulus() - expected_mod).abs() < 1e-9);
        assert!((s.decay_rate - 0.5).abs() < 1e-9);
        // Conjugate pair listed with +im first.
        assert!(s.multipliers.0.im > 0.0);
        assert_eq!(s.multipliers.1, s.multipliers.0.conj());
    }

    #[test]
    fn spectrum_flags_unit_multiplier_as_nonhyperbolic() {
        let ect = libm::exp(-1.5);
        let m = MonodromyMatrix::from_transition(Mat2::new(ect, 0.0, 0.0, 1.0), 1.0, 1.5).unwrap();
        let s = spectrum(&m);
        assert_eq!(s.verdict, Stability::Nonhyperbolic);
        assert_eq!(s.pair_class, PairClass::RealDistinct);
        assert_eq!(s.multipliers.0.re, 1.0);
        assert_eq!(s.multipliers.1.re, ect);
    }

    #[test]
    fn spectrum_of_traceless_matrix() {
        // tr = 0, det = e^{-cT}: rho = +- i e^{-cT/2}, decay rate c / 2.
        let c = 1.0;
        let t = 2.0;
        let ect = libm::exp(-c * t);
        let m =
            MonodromyMatrix::from_transition(Mat2::new(0.0, ect, -1.0, 0.0), c, t).unwrap();
        let s = spectrum(&m);
        assert_eq!(s.pair_class, PairClass::ComplexPair);
        assert!((s.multipliers.0.re).abs() < 1e-15);
        assert!((s.multipliers.0.modulus() - libm::exp(-c * t / 2.0)).abs() < 1e-12);
        assert!((s.decay_rate - c / 2.0).abs() < 1e-9);
    }

    #[test]
    fn multiplier_sum_and_product_match_trace_and_determinant() {
        let p = test_problem(0.6, TWO_PI, "3*x+atan(x)", "3+1/(1+x^2)", "sin(t)");
        let m = monodromy_at(&p, PlanarState::new(0.3, 0.2), &settings(TWO_PI)).unwrap();
        let s = spectrum(&m);
        let (r1, r2) = s.multipliers;
        let sum = r1.re + r2.re;
        let prod = r1.re * r2.re - r1.im * r2.im;
        let tr = m.matrix().trace();
        let det = m.matrix().det();
        assert!((sum - tr).abs() <= 1e-9 * tr.abs().max(1.0));
        assert!((prod - det).abs() <= 1e-9 * det.abs().max(1.0));
    }

    #[test]
    fn lienard_route_gives_similar_matrix() {
        let p = test_problem(1.0, TWO_PI, "2*x+0.5*atan(x)", "2+0.5/(1+x^2)", "cos(t)");
        let s0 = PlanarState::new(0.4, 0.1);
        let a = monodromy_at(&p, s0, &settings(TWO_PI)).unwrap();
        let b = monodromy_at_lienard(&p, s0, &settings(TWO_PI)).unwrap();
        assert!((a.matrix().trace() - b.matrix().trace()).abs() < 1e-8);
        assert!((a.matrix().det() - b.matrix().det()).abs() < 1e-8);
        let sa = spectrum(&a);
        let sb = spectrum(&b);
        assert_eq!(sa.pair_class, sb.pair_class);
        assert!((sa.multipliers.0.re - sb.multipliers.0.re).abs() < 1e-8);
        assert!((sa.multipliers.0.im - sb.multipliers.0.im).abs() < 1e-8);
    }

    #[test]
    fn ladder_values_for_canonical_period() {
        // c = 1, T = 2 pi: lambda_n = n^2 / 4 + 1 / 4.
        assert!((ladder_eigenvalue(1, 1.0, TWO_PI) - 0.5).abs() < 1e-12);
        assert!((ladder_eigenvalue(2, 1.0, TWO_PI) - 1.25).abs() < 1e-12);
        assert!((ladder_eigenvalue(3, 1.0, TWO_PI) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn ladder_regime_examples() {
        let p = test_problem(1.0, TWO_PI, "2*x", "2", "0");
        match ladder_regime(&p, 2.0, 2.0) {
            LadderRegime::Cell { n, .. } => assert_eq!(n, 2),
            other => panic!("expected cell, got {other:?}"),
        }
        match ladder_regime(&p, 0.1, 0.1) {
            LadderRegime::SubPrincipal { .. } => {}
            other => panic!("expected sub-principal, got {other:?}"),
        }
        match ladder_regime(&p, 0.4, 1.3) {
            LadderRegime::Straddling { .. } => {}
            other => panic!("expected straddling, got {other:?}"),
        }
    }

    #[test]
    fn determinant_drift_is_rejected() {
        let err = MonodromyMatrix::from_transition(Mat2::IDENTITY, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, FloquetError::DeterminantDrift { .. }));
    }

    #[test]
    fn sub_principal_regime_never_has_negative_real_multipliers() {
        // gx below lambda_1 with positive mean: multipliers are positive
        // reals or a conjugate pair, and the orbit is stable.
        for (g, gx) in [
            ("0.3*atan(x)+0.1*x", "0.3/(1+x^2)+0.1"),
            ("0.4*x", "0.4"),
            ("0.05*x+0.2*tanh(x)", "0.05+0.2*(1-tanh(x)^2)"),
        ] {
            let p = test_problem(1.0, TWO_PI, g, gx, "cos(t)");
            let m = monodromy_at(&p, PlanarState::new(0.0, 0.0), &settings(TWO_PI)).unwrap();
            let s = spectrum(&m);
            for rho in [s.multipliers.0, s.multipliers.1] {
                assert!(
                    !(rho.is_real() && rho.re < 0.0),
                    "negative real multiplier {rho:?} for g = {g}"
                );
            }
            assert_eq!(s.verdict, Stability::AsymptoticallyStable, "g = {g}");
        }
    }
}
