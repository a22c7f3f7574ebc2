use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;
const MAX_RELATIVE_RESIDUAL: f64 = 1e-6;

/// Roots of `a[0] x^n + a[1] x^(n-1) + ... + a[n]`.
///
/// Eigenvalues of the companion matrix, each refined by one Newton step.
/// Leading zero coefficients are ignored.
pub fn polynomial_roots(descending: &[Complex64]) -> Result<Vec<Complex64>> {
    let start = descending
        .iter()
        .position(|c| c.norm() > 0.0)
        .unwrap_or(descending.len());
    let a = &descending[start..];
    if a.len() <= 1 {
        return Ok(Vec::new());
    }
    let n = a.len() - 1;
    let lead = a[0];
    let mut companion = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -a[j + 1] / lead;
    }
    for i in 1..n {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    let schur = Schur::try_new(companion, SCHUR_EPS, SCHUR_MAX_ITER).ok_or(Error::RootFinding {
        residual: f64::INFINITY,
    })?;
    let eig = schur.eigenvalues().ok_or(Error::RootFinding {
        residual: f64::INFINITY,
    })?;

    let mut roots = Vec::with_capacity(n);
    let mut worst = 0.0f64;
    for &r0 in eig.iter() {
        let r = newton_polish(a, r0);
        worst = worst.max(relative_residual(a, r));
        roots.push(r);
    }
    // negated so that a NaN residual is rejected
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(worst <= MAX_RELATIVE_RESIDUAL) {
        return Err(Error::RootFinding { residual: worst });
    }
    Ok(roots)
}

fn horner(a: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in a {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn newton_polish(a: &[Complex64], r: Complex64) -> Complex64 {
    let (p, dp) = horner(a, r);
    if dp.norm() == 0.0 {
        return r;
    }
    let candidate = r - p / dp;
    if candidate.is_finite() && horner(a, candidate).0.norm() <= p.norm() {
        candidate
    } else {
        r
    }
}

/// `|p(r)| / sum_k |a_k| |r|^(n-k)`.
pub fn relative_residual(a: &[Complex64], r: Complex64) -> f64 {
    let (p, _) = horner(a, r);
    let rn = r.norm();
    let scale = a.iter().fold(0.0, |acc, c| acc * rn + c.norm());
    if scale == 0.0 {
        0.0
    } else {
        p.norm() / scale
    }
}
