//! Matrix Wiener and matrix adaptive synthesis filters for uniform filter
//! banks.
//!
//! The analysis stage of an `L`-channel filter bank decimated by `M` maps a
//! scalar input `x(n)` to a vector stream `v(n)`. This crate computes the
//! exact matrix Wiener filter `A(z) = S_dv(z) S_vv(z)^-1` that recovers the
//! blocked, delayed input from `v(n)`, evaluates the modulation-determinant
//! closed forms used to cross-check it, and runs matrix LMS/NLMS filters that
//! converge to the same solution without knowledge of the analysis bank.
//!
//! Module map:
//! - [`algebra`]: Laurent polynomials, polynomial matrices, rational transfer functions.
//! - [`spectra`]: filter bank description, PSD/CSD propagation, time-domain analysis.
//! - [`wiener`]: exact Wiener solve, modulation determinants, reconstruction checks.
//! - [`adaptive`]: matrix LMS/NLMS synthesis filter.
//! - [`harness`]: seeded experiments and result artifacts.
//! - [`verify`]: randomized property suites.

pub mod adaptive;
pub mod algebra;
pub mod error;
pub mod harness;
pub mod presets;
pub mod spectra;
pub mod verify;
pub mod wiener;

pub use adaptive::{AdaptationTrace, MatrixAdaptiveFilter, Normalization, TapTable};
pub use algebra::{LaurentPoly, PolyMatrix, RationalMatrix, RationalTF};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ExperimentResult};
pub use spectra::{BlockedSignal, FilterBankSpec, InputPsd};
pub use wiener::WienerSolution;

pub use num_complex::Complex64;
