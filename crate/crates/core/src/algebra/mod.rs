//! Exact arithmetic over Laurent polynomials in `z^-1` and matrices of them.
//!
//! Every transfer function in the crate is a [`LaurentPoly`] or a ratio of
//! two ([`RationalTF`]). Coefficients are complex throughout; real filters are
//! the special case with zero imaginary parts.

mod laurent;
mod matrix;
mod rational;
pub mod roots;

pub use laurent::{LaurentPoly, TRIM_ABSOLUTE, TRIM_RELATIVE};
pub use matrix::PolyMatrix;
pub use rational::{
    cancel_common_roots, denominator_poles, Poles, RationalMatrix, RationalTF, GCD_TOL,
    RATIONAL_EQ_TOL, STABILITY_RADIUS,
};

use num_complex::Complex64;

/// `W_M = exp(-j 2 pi / M)`.
pub fn twiddle(m: usize) -> Complex64 {
    Complex64::from_polar(1.0, -std::f64::consts::TAU / m as f64)
}
