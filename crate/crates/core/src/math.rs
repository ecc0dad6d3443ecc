//! Float math routed through `libm` so the crate builds without `std`.

pub(crate) use libm::{
    atan, atan2, ceil, cos, exp, fabs as abs, floor, hypot, log as ln, pow, round, sin, sqrt,
    tan, tanh, trunc,
};

/// Composite trapezoid rule over an arbitrary strictly increasing abscissa.
pub(crate) fn trapezoid(ts: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(ts.len(), ys.len());
    let mut acc = 0.0;
    for i in 1..ts.len() {
        acc += 0.5 * (ys[i] + ys[i - 1]) * (ts[i] - ts[i - 1]);
    }
    acc
}

/// `n` equally spaced points covering `[lo, hi]` inclusive.
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> alloc::vec::Vec<f64> {
    debug_assert!(n >= 2);
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}
