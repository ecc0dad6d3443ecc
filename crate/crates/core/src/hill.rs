//! Two-segment piecewise-constant Hill equation in closed form.
//!
//! The damped equation `x'' + c x' + q(t) x = 0` with
//! `q(t) = c^2/4 + (w + eps)^2` on `[0, pi)` and `c^2/4 + (w - eps)^2` on
//! `[pi, 2 pi)` reduces, through `y = e^{c t / 2} x`, to the undamped Hill
//! equation `y'' + (q(t) - c^2/4) y = 0`, i.e. constant frequency
//! `w + eps` on the first segment and `w - eps` on the second. Its
//! monodromy is the product of two closed-form rotation-like segment
//! matrices, so stability is decided by `|tr A| <= 2` with no integration
//! at all. Multipliers of the damped equation are the undamped ones scaled
//! by `e^{-cT/2}`.
//!
//! Solutions decay at exactly `c/2` precisely when the undamped
//! multipliers sit on the unit circle; inside a resonance tongue the
//! damped equation can stay asymptotically stable while the decay rate
//! drops below `c/2`. That is the sense in which the ladder bounds used by
//! the certificate module are sharp.

use alloc::vec::Vec;

use crate::floquet::{
    spectrum_from_multipliers, FloquetSpectrum, PairClass, DISCRIMINANT_TIE,
};
use crate::linalg::{Complex, Mat2};
use crate::math;

/// The Hill example lives on a fixed period of `2 pi`.
pub const HILL_PERIOD: f64 = 2.0 * core::f64::consts::PI;

const SEGMENT: f64 = core::f64::consts::PI;

/// Bisection target width for tongue-boundary location.
const BOUNDARY_REFINE: f64 = 1e-12;

/// Parameters of the piecewise-constant Hill example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillParams {
    /// Base frequency `w` of the two segments.
    pub base_freq: f64,
    /// Modulation depth `eps`; segment frequencies are `w +- eps`.
    pub modulation: f64,
    /// Damping `c` of the original second-order equation.
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HillError {
    /// Parameters outside the real-frequency branch `w > eps >= 0`, or an
    /// invalid scan request.
    InvalidParams(&'static str),
    /// A tongue center inside the scan range has no matched pair of
    /// `|tr A| = 2` crossings at this resolution.
    RangeTooCoarse { center: TongueCenter },
}

impl core::fmt::Display for HillError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            HillError::InvalidParams(msg) => write!(f, "invalid Hill parameters: {msg}"),
            HillError::RangeTooCoarse { center } => write!(
                f,
                "scan too coarse: no crossing pair around the tongue center w = {}",
                center.value()
            ),
        }
    }
}

impl core::error::Error for HillError {}

impl HillParams {
    /// Validates the real-frequency branch `w > eps >= 0`, `c >= 0`.
    pub fn new(base_freq: f64, modulation: f64, damping: f64) -> Result<Self, HillError> {
        if !(modulation >= 0.0) {
            return Err(HillError::InvalidParams("eps must be nonnegative"));
        }
        if !(base_freq > modulation) {
            return Err(HillError::InvalidParams(
                "w must exceed eps (imaginary segment frequencies are unsupported)",
            ));
        }
        if !(damping >= 0.0) {
            return Err(HillError::InvalidParams("c must be nonnegative"));
        }
        Ok(HillParams {
            base_freq,
            modulation,
            damping,
        })
    }

    fn frequencies(&self) -> (f64, f64) {
        (
            self.base_freq + self.modulation,
            self.base_freq - self.modulation,
        )
    }
}

/// Fundamental matrix of `y'' + omega^2 y = 0` over a segment of the given
/// length: `[[cos(omega l), sin(omega l)/omega], [-omega sin(omega l),
/// cos(omega l)]]`. The `omega -> 0` limit `[[1, l], [0, 1]]` is taken
/// through the sinc form below `|omega| < 1e-8`. Determinant is one (unit
/// Wronskian) up to rounding.
pub fn segment_matrix(omega: f64, length: f64) -> Mat2 {
    let phase = omega * length;
    let (s, c) = (math::sin(phase), math::cos(phase));
    let m12 = if math::abs(omega) < 1e-8 {
        length * sinc(phase)
    } else {
        s / omega
    };
    Mat2::new(c, m12, -omega * s, c)
}

fn sinc(x: f64) -> f64 {
    if math::abs(x) < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        math::sin(x) / x
    }
}

/// Monodromy `A = A2 * A1` of the reduced Hill equation over one period
/// (first segment applied first).
pub fn monodromy(params: &HillParams) -> Mat2 {
    let (w1, w2) = params.frequencies();
    segment_matrix(w2, SEGMENT).mul(&segment_matrix(w1, SEGMENT))
}

/// `tr A` from the segment-matrix product. `|tr A| < 2` is the stable
/// side; `|tr A| = 2` is the tongue boundary.
pub fn discriminant(params: &HillParams) -> f64 {
    monodromy(params).trace()
}

/// Closed trace formula
/// `2 cos(pi w1) cos(pi w2) - (w1/w2 + w2/w1) sin(pi w1) sin(pi w2)`
/// with `w1, w2` the segment frequencies. Cross-checks [`discriminant`].
pub fn trace_closed_form(params: &HillParams) -> f64 {
    let (w1, w2) = params.frequencies();
    2.0 * math::cos(SEGMENT * w1) * math::cos(SEGMENT * w2)
        - (w1 / w2 + w2 / w1) * math::sin(SEGMENT * w1) * math::sin(SEGMENT * w2)
}

/// A resonance tongue center: integer `k` or half-integer `k + 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TongueCenter {
    Integer(u32),
    Half(u32),
}

impl TongueCenter {
    pub fn value(&self) -> f64 {
        match self {
            TongueCenter::Integer(k) => *k as f64,
            TongueCenter::Half(k) => *k as f64 + 0.5,
        }
    }

    /// Nearest tongue center to a frequency value.
    fn nearest(w: f64) -> TongueCenter {
        let doubled = crate::math::round(2.0 * w);
        let doubled = if doubled < 0.0 { 0.0 } else { doubled } as u64;
        if doubled.is_multiple_of(2) {
            TongueCenter::Integer((doubled / 2) as u32)
        } else {
            TongueCenter::Half(((doubled - 1) / 2) as u32)
        }
    }
}

impl core::fmt::Display for TongueCenter {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TongueCenter::Integer(k) => write!(f, "k={k}"),
            TongueCenter::Half(k) => write!(f, "k+1/2 (k={k})"),
        }
    }
}

/// One located tongue: bisected `|tr A| = 2` crossings bracketing the
/// center, with the small-`eps` asymptotic edges for comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TongueBoundary {
    pub center: TongueCenter,
    pub eps: f64,
    pub w_lower: f64,
    pub w_upper: f64,
    pub asymptotic_lower: f64,
    pub asymptotic_upper: f64,
}

/// Small-`eps` asymptotic tongue edges: `k +- eps^2 / k^2` around integer
/// centers (`k >= 1`), `k + 1/2 +- eps / (pi (k + 1/2))` around
/// half-integer centers.
pub fn asymptotic_boundary(center: TongueCenter, eps: f64) -> Result<(f64, f64), HillError> {
    if eps < 0.0 {
        return Err(HillError::InvalidParams("eps must be nonnegative"));
    }
    match center {
        TongueCenter::Integer(0) => Err(HillError::InvalidParams(
            "integer tongue centers start at k = 1",
        )),
        TongueCenter::Integer(k) => {
            let k = k as f64;
            let half_width = eps * eps / (k * k);
            Ok((k - half_width, k + half_width))
        }
        TongueCenter::Half(k) => {
            let m = k as f64 + 0.5;
            let half_width = eps / (core::f64::consts::PI * m);
            Ok((m - half_width, m + half_width))
        }
    }
}

/// Scans `|tr A| - 2` over a uniform `w` grid, bisects every sign change
/// to width `1e-12`, and pairs the crossings around each tongue center in
/// range. At `eps = 0` every tongue has zero width, so the scan returns no
/// boundaries.
pub fn boundary_scan(
    eps: f64,
    w_range: (f64, f64),
    resolution: usize,
) -> Result<Vec<TongueBoundary>, HillError> {
    let (lo, hi) = w_range;
    if resolution < 2 {
        return Err(HillError::InvalidParams("resolution must be at least 2"));
    }
    if !(lo < hi) {
        return Err(HillError::InvalidParams("w range must be nonempty"));
    }
    if !(eps >= 0.0) {
        return Err(HillError::InvalidParams("eps must be nonnegative"));
    }
    if !(lo > eps) {
        return Err(HillError::InvalidParams(
            "w range must stay above eps (real-frequency branch)",
        ));
    }
    if eps == 0.0 {
        return Ok(Vec::new());
    }

    let excess = |w: f64| {
        math::abs(trace_at(w, eps)) - 2.0
    };
    let ws = math::linspace(lo, hi, resolution);
    let mut roots: Vec<f64> = Vec::new();
    let mut prev_w = ws[0];
    let mut prev_f = excess(prev_w);
    for &w in &ws[1..] {
        let f = excess(w);
        if prev_f == 0.0 {
            roots.push(prev_w);
        } else if prev_f * f < 0.0 {
            roots.push(bisect(&excess, prev_w, w, prev_f));
        }
        prev_w = w;
        prev_f = f;
    }
    if prev_f == 0.0 {
        roots.push(prev_w);
    }

    // Group crossings by nearest half-multiple center, keyed in scan order.
    let mut groups: Vec<(TongueCenter, Vec<f64>)> = Vec::new();
    for &root in &roots {
        let center = TongueCenter::nearest(root);
        match groups.iter_mut().find(|(c, _)| *c == center) {
            Some((_, list)) => list.push(root),
            None => groups.push((center, alloc::vec![root])),
        }
    }

    // Every center inside the scanned range must have a matched pair.
    let mut boundaries = Vec::new();
    let first_doubled = crate::math::ceil(2.0 * lo) as i64;
    let last_doubled = crate::math::floor(2.0 * hi) as i64;
    for doubled in first_doubled..=last_doubled {
        if doubled <= 0 {
            continue;
        }
        let center = TongueCenter::nearest(doubled as f64 / 2.0);
        let crossings = groups
            .iter()
            .find(|(c, _)| *c == center)
            .map(|(_, list)| list.as_slice())
            .unwrap_or(&[]);
        match crossings {
            [a, b] => {
                let (w_lower, w_upper) = if a <= b { (*a, *b) } else { (*b, *a) };
                let (asymptotic_lower, asymptotic_upper) = asymptotic_boundary(center, eps)?;
                boundaries.push(TongueBoundary {
                    center,
                    eps,
                    w_lower,
                    w_upper,
                    asymptotic_lower,
                    asymptotic_upper,
                });
            }
            _ => return Err(HillError::RangeTooCoarse { center }),
        }
    }
    Ok(boundaries)
}

fn trace_at(w: f64, eps: f64) -> f64 {
    let p1 = segment_matrix(w + eps, SEGMENT);
    let p2 = segment_matrix(w - eps, SEGMENT);
    p2.mul(&p1).trace()
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let mut sign_lo = f_lo > 0.0;
    while hi - lo > BOUNDARY_REFINE {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == sign_lo {
            lo = mid;
            sign_lo = fm > 0.0;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Floquet spectrum of the damped equation. Undamped multipliers `mu` come
/// from `mu^2 - (tr A) mu + 1 = 0` (unit Wronskian), the damped ones are
/// `e^{-cT/2} mu`, and the decay rate is `c/2 - ln(max |mu|) / T`. Off the
/// tongues `|mu| = 1`, so the decay rate is exactly `c/2`.
pub fn damped_multipliers(params: &HillParams) -> FloquetSpectrum {
    let tr = discriminant(params);
    let c = params.damping;
    let scale = math::exp(-c * HILL_PERIOD / 2.0);
    let disc = tr * tr - 4.0;

    let (mu1, mu2, pair_class, max_mu) = if math::abs(disc) <= DISCRIMINANT_TIE * tr * tr {
        let r = 0.5 * tr;
        (
            Complex::from_real(r),
            Complex::from_real(r),
            PairClass::RealDouble,
            math::abs(r),
        )
    } else if disc > 0.0 {
        let sgn = if tr >= 0.0 { 1.0 } else { -1.0 };
        let r1 = 0.5 * (tr + sgn * math::sqrt(disc));
        let r2 = 1.0 / r1;
        (
            Complex::from_real(r1),
            Complex::from_real(r2),
            PairClass::RealDistinct,
            math::abs(r1),
        )
    } else {
        let re = 0.5 * tr;
        let im = 0.5 * math::sqrt(-disc);
        // Unit modulus is exact here: mu mu-bar = det A = 1.
        (
            Complex::new(re, im),
            Complex::new(re, -im),
            PairClass::ComplexPair,
            1.0,
        )
    };

    let rho1 = mu1.scale(scale);
    let rho2 = mu2.scale(scale);
    let mut result = spectrum_from_multipliers(rho1, rho2, pair_class, HILL_PERIOD);
    result.decay_rate = 0.5 * c - math::ln(max_mu) / HILL_PERIOD;
    result.verdict = crate::floquet::classify_modulus(scale * max_mu);
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::Stability;

    const PI: f64 = core::f64::consts::PI;

    #[test]
    fn segment_matrix_at_unit_frequency() {
        let m = segment_matrix(1.0, PI);
        assert!((m.m11 + 1.0).abs() < 1e-15);
        assert!(m.m12.abs() < 1e-15);
        assert!(m.m21.abs() < 1e-15);
        assert!((m.m22 + 1.0).abs() < 1e-15);
    }

    #[test]
    fn segment_matrix_free_particle_limit() {
        let m = segment_matrix(0.0, PI);
        assert_eq!(m.m11, 1.0);
        assert_eq!(m.m12, PI);
        assert_eq!(m.m21, 0.0);
        assert_eq!(m.m22, 1.0);
        // The sinc branch stays continuous just above the threshold.
        let m2 = segment_matrix(1e-9, PI);
        assert!((m2.m12 - PI).abs() < 1e-12);
    }

    #[test]
    fn segment_determinant_is_unit() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rand = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..500 {
            let omega = 5.0 * rand();
            let len = 0.1 + 3.0 * rand();
            let det = segment_matrix(omega, len).det();
            assert!((det - 1.0).abs() < 1e-14, "det {det} at omega {omega}");
        }
    }

    #[test]
    fn discriminant_examples() {
        let flat = HillParams::new(0.5, 0.0, 1.0).unwrap();
        assert!((discriminant(&flat) + 2.0).abs() < 1e-12);

        let low = HillParams::new(0.3, 0.0, 1.0).unwrap();
        assert!((discriminant(&low) - 2.0 * libm::cos(0.6 * PI)).abs() < 1e-12);

        let modulated = HillParams::new(0.5, 0.05, 1.0).unwrap();
        assert!(libm::fabs(discriminant(&modulated)) > 2.0);
    }

    #[test]
    fn product_trace_matches_closed_formula() {
        let mut state = 0x2545f4914f6cdd1du64;
        let mut rand = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let w = 0.1 + 2.9 * rand();
            let eps = 0.9 * w * rand();
            let p = HillParams::new(w, eps, 0.0).unwrap();
            let a = discriminant(&p);
            let b = trace_closed_form(&p);
            assert!(
                (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                "trace mismatch {a} vs {b} at (w, eps) = ({w}, {eps})"
            );
        }
    }

    #[test]
    fn discriminant_is_even_in_eps() {
        // Swapping the segment order transposes the product but keeps the
        // trace, so eps -> -eps leaves tr A unchanged.
        for &(w, eps) in &[(0.7, 0.3), (1.3, 0.5), (2.2, 0.05)] {
            let forward = segment_matrix(w - eps, PI).mul(&segment_matrix(w + eps, PI));
            let swapped = segment_matrix(w + eps, PI).mul(&segment_matrix(w - eps, PI));
            assert!((forward.trace() - swapped.trace()).abs() < 1e-13);
        }
    }

    #[test]
    fn asymptotic_boundary_examples() {
        let (lo, hi) = asymptotic_boundary(TongueCenter::Integer(1), 0.1).unwrap();
        assert!((lo - 0.99).abs() < 1e-15);
        assert!((hi - 1.01).abs() < 1e-15);

        let (lo, hi) = asymptotic_boundary(TongueCenter::Half(0), 0.05).unwrap();
        assert!((lo - (0.5 - 0.1 / PI)).abs() < 1e-15);
        assert!((hi - (0.5 + 0.1 / PI)).abs() < 1e-15);

        let (lo, hi) = asymptotic_boundary(TongueCenter::Half(2), 0.0).unwrap();
        assert_eq!((lo, hi), (2.5, 2.5));

        assert!(asymptotic_boundary(TongueCenter::Integer(0), 0.1).is_err());
    }

    #[test]
    fn scan_locates_the_half_tongue() {
        let boundaries = boundary_scan(0.05, (0.3, 0.7), 2000).unwrap();
        assert_eq!(boundaries.len(), 1);
        let b = &boundaries[0];
        assert_eq!(b.center, TongueCenter::Half(0));
        let width = b.w_upper - b.w_lower;
        let predicted = 4.0 * 0.05 / PI;
        assert!(
            (width - predicted).abs() <= 0.15 * predicted,
            "width {width} vs predicted {predicted}"
        );
    }

    #[test]
    fn scan_at_zero_modulation_is_empty() {
        let boundaries = boundary_scan(0.0, (0.3, 0.7), 2000).unwrap();
        assert!(boundaries.is_empty());
    }

    #[test]
    fn scan_locates_the_integer_tongue() {
        let boundaries = boundary_scan(0.1, (0.8, 1.2), 4001).unwrap();
        assert_eq!(boundaries.len(), 1);
        let b = &boundaries[0];
        assert_eq!(b.center, TongueCenter::Integer(1));
        let half_width = 0.5 * (b.w_upper - b.w_lower);
        assert!(
            (half_width - 0.01).abs() <= 0.5 * 0.01,
            "half width {half_width}"
        );
    }

    #[test]
    fn scan_too_coarse_for_narrow_tongue() {
        let err = boundary_scan(0.001, (0.3, 0.7), 50).unwrap_err();
        assert!(matches!(
            err,
            HillError::RangeTooCoarse {
                center: TongueCenter::Half(0)
            }
        ));
    }

    #[test]
    fn scan_validates_inputs() {
        assert!(boundary_scan(0.05, (0.7, 0.3), 100).is_err());
        assert!(boundary_scan(0.05, (0.3, 0.7), 1).is_err());
        assert!(boundary_scan(-0.1, (0.3, 0.7), 100).is_err());
        assert!(boundary_scan(0.4, (0.3, 0.7), 100).is_err());
    }

    #[test]
    fn damped_multipliers_inside_half_tongue() {
        let params = HillParams::new(0.5, 0.1, 1.0).unwrap();
        let s = damped_multipliers(&params);
        assert_eq!(s.pair_class, PairClass::RealDistinct);
        assert!(s.decay_rate < 0.5, "decay rate {}", s.decay_rate);
        let max_mod = s.multipliers.0.modulus().max(s.multipliers.1.modulus());
        assert!(max_mod < 1.0);
        assert_eq!(s.verdict, Stability::AsymptoticallyStable);

        // Independent route: rebuild the decay rate from the closed trace
        // formula instead of the matrix product.
        let tr = trace_closed_form(&params);
        let mu_max = 0.5 * (libm::fabs(tr) + libm::sqrt(tr * tr - 4.0));
        let decay = 0.5 - libm::log(mu_max) / HILL_PERIOD;
        assert!((s.decay_rate - decay).abs() < 1e-12);
    }

    #[test]
    fn damped_multipliers_off_tongue_decay_exactly_half_damping() {
        let s = damped_multipliers(&HillParams::new(0.3, 0.0, 1.0).unwrap());
        assert_eq!(s.pair_class, PairClass::ComplexPair);
        assert_eq!(s.decay_rate, 0.5);

        let s = damped_multipliers(&HillParams::new(0.37, 0.02, 1.0).unwrap());
        assert_eq!(s.pair_class, PairClass::ComplexPair);
        assert_eq!(s.decay_rate, 0.5);
    }

    #[test]
    fn monodromy_determinant_is_unit() {
        let p = HillParams::new(0.8, 0.2, 0.5).unwrap();
        assert!((monodromy(&p).det() - 1.0).abs() < 1e-14);
    }
}
