//! Numerical analysis of damped Duffing-type oscillators
//! `x'' + c x' + g(t, x) = h(t)` with `T`-periodic coefficients.
//!
//! The crate finds `T`-periodic solutions by Newton shooting on the Poincaré
//! map, computes Floquet multipliers from the monodromy matrix of the
//! variational equation, classifies orbital stability and the exponential
//! decay rate toward the orbit, and checks (by sampling) the derivative
//! bounds under which uniqueness and the sharp decay rate `c/2` are
//! guaranteed. A closed-form module handles the two-segment
//! piecewise-constant Hill equation and its parametric-resonance tongues.
//!
//! Nonlinearities are supplied as parsed arithmetic expressions in the
//! variables `t` and `x` (see [`expr`]), so every routine here is a pure
//! function of plain data; the companion CLI crate carries all IO.
//!
//! The crate is `no_std` (it allocates through `alloc` and routes float
//! math through `libm`).

#![cfg_attr(not(test), no_std)]
// Validation guards are written `!(x > 0.0)` on purpose: NaN fails every
// comparison, so the negated form rejects NaN inputs where `x <= 0.0`
// would wave them through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod certify;
pub mod decay;
pub mod expr;
pub mod floquet;
pub mod hill;
pub mod linalg;
pub mod odeint;
pub mod periodic;
pub mod problem;

pub(crate) mod math;
