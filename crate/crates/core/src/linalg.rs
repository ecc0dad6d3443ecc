//! Minimal 2x2 real matrix and complex scalar types.
//!
//! Everything the toolkit needs from linear algebra is planar: monodromy
//! matrices are 2x2 and Floquet multipliers come in real or conjugate
//! pairs, so these two small types replace a matrix library.

use crate::math;

/// Row-major 2x2 real matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        m11: 1.0,
        m12: 0.0,
        m21: 0.0,
        m22: 1.0,
    };

    pub fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2 { m11, m12, m21, m22 }
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
        }
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }

    pub fn sub(&self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            m11: self.m11 - rhs.m11,
            m12: self.m12 - rhs.m12,
            m21: self.m21 - rhs.m21,
            m22: self.m22 - rhs.m22,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(
            self.m11 * self.m11 + self.m12 * self.m12 + self.m21 * self.m21 + self.m22 * self.m22,
        )
    }

    /// Solves `self * x = b` by Cramer's rule. Caller checks the determinant.
    pub fn solve(&self, b: [f64; 2]) -> [f64; 2] {
        let det = self.det();
        [
            (b[0] * self.m22 - b[1] * self.m12) / det,
            (self.m11 * b[1] - self.m21 * b[0]) / det,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m21.is_finite() && self.m22.is_finite()
    }
}

/// Complex scalar used for Floquet multipliers and exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn from_real(re: f64) -> Self {
        Complex { re, im: 0.0 }
    }

    pub fn modulus(&self) -> f64 {
        math::hypot(self.re, self.im)
    }

    /// Principal branch of the complex logarithm.
    pub fn ln(&self) -> Complex {
        Complex {
            re: math::ln(self.modulus()),
            im: math::atan2(self.im, self.re),
        }
    }

    pub fn scale(&self, s: f64) -> Complex {
        Complex {
            re: self.re * s,
            im: self.im * s,
        }
    }

    pub fn conj(&self) -> Complex {
        Complex {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }
}
