use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::roots::polynomial_roots;
use super::{LaurentPoly, PolyMatrix};
use crate::error::{Error, Result};

/// Relative cross-multiplication residual below which two rational functions
/// are considered equal.
pub const RATIONAL_EQ_TOL: f64 = 1e-9;
/// Tolerance for cancelling approximately common roots.
pub const GCD_TOL: f64 = 1e-8;
/// Poles must lie strictly inside this radius to count as stable.
pub const STABILITY_RADIUS: f64 = 1.0 - 1e-9;

/// Ratio of two Laurent polynomials.
///
/// The denominator is kept as a polynomial in `z^-1` with a real positive
/// constant term; the scaling needed to get there is applied to the numerator
/// as well.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalTF {
    num: LaurentPoly,
    den: LaurentPoly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poles {
    pub roots: Vec<Complex64>,
    pub stable: bool,
}

impl Poles {
    pub fn max_magnitude(&self) -> f64 {
        self.roots.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    fn from_roots(roots: Vec<Complex64>) -> Self {
        let stable = roots.iter().all(|r| r.norm() < STABILITY_RADIUS);
        Self { roots, stable }
    }
}

impl RationalTF {
    pub fn new(num: LaurentPoly, den: LaurentPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let shift = -den.highest_power();
        let (num, den) = (num.shift(shift), den.shift(shift));
        let inv = den.coeff(0).inv();
        Ok(Self {
            num: num.scale(inv),
            den: den.scale(inv),
        })
    }

    pub fn from_poly(p: LaurentPoly) -> Self {
        Self::new(p, LaurentPoly::one()).expect("unit denominator")
    }

    pub fn num(&self) -> &LaurentPoly {
        &self.num
    }

    pub fn den(&self) -> &LaurentPoly {
        &self.den
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.num.eval(z) / self.den.eval(z)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Relative size of `a d - c b` for `self = a/b`, `other = c/d`.
    pub fn cross_residual(&self, other: &Self) -> f64 {
        let lhs = &self.num * &other.den;
        let rhs = &other.num * &self.den;
        lhs.relative_distance(&rhs)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.cross_residual(other) <= tol
    }

    /// Causal when the numerator carries no positive power of `z`.
    pub fn is_causal(&self) -> bool {
        self.num.is_causal()
    }

    /// First `n_terms` coefficients of the power series in `z^-1`.
    pub fn impulse_response(&self, n_terms: usize) -> Result<Vec<Complex64>> {
        if !self.is_causal() {
            return Err(Error::NonCausal {
                max_exponent: self.num.highest_power(),
            });
        }
        let d = self.den.causal_taps();
        let d0 = d[0];
        let mut h: Vec<Complex64> = Vec::with_capacity(n_terms);
        for k in 0..n_terms {
            let mut acc = self.num.coeff(-(k as i64));
            for m in 1..d.len().min(k + 1) {
                acc -= d[m] * h[k - m];
            }
            h.push(acc / d0);
        }
        Ok(h)
    }

    /// Roots of the denominator in the `z` plane.
    pub fn poles(&self) -> Result<Poles> {
        denominator_poles(&self.den)
    }

    /// Cancels denominator roots at which the numerator vanishes to `tol`.
    /// Numerically cancelling factors is ill-conditioned, so this is meant for
    /// display and stability analysis, not for equality tests.
    pub fn reduced(&self, tol: f64) -> Result<Self> {
        let (nums, den) = cancel_common_roots(vec![self.num.clone()], self.den.clone(), tol)?;
        Self::new(nums.into_iter().next().unwrap_or_default(), den)
    }

    pub fn pretty(&self) -> String {
        if self.den == LaurentPoly::one() {
            self.num.pretty()
        } else {
            format!("({}) / ({})", self.num.pretty(), self.den.pretty())
        }
    }
}

/// Poles of `1 / den` where `den` is read as a polynomial in `z^-1`.
pub fn denominator_poles(den: &LaurentPoly) -> Result<Poles> {
    if den.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    let shifted = den.shift(-den.highest_power());
    let roots = polynomial_roots(&shifted.causal_taps())?;
    Ok(Poles::from_roots(roots))
}

fn vanishes_at(p: &LaurentPoly, r: Complex64, tol: f64) -> bool {
    if p.is_zero() {
        return true;
    }
    let rn = r.norm();
    let scale: f64 = p
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm() * rn.powi((p.lowest_power() + k as i64) as i32))
        .sum();
    p.eval(r).norm() <= tol * scale
}

/// Removes every root of `den` that is also a root of all `nums`.
///
/// Common roots are identified on the original polynomials, then divided out
/// in one step: the quotients are sampled on a circle kept away from the
/// cancelled roots and recovered by an inverse DFT. Sequential deflation
/// would compound the error of every inexact root.
pub fn cancel_common_roots(
    nums: Vec<LaurentPoly>,
    den: LaurentPoly,
    tol: f64,
) -> Result<(Vec<LaurentPoly>, LaurentPoly)> {
    let roots = denominator_poles(&den)?.roots;
    let common: Vec<Complex64> = roots
        .into_iter()
        .filter(|&r| vanishes_at(&den, r, tol) && nums.iter().all(|p| vanishes_at(p, r, tol)))
        .collect();
    if common.is_empty() {
        return Ok((nums, den));
    }
    let real = den
        .coeffs()
        .iter()
        .chain(nums.iter().flat_map(|p| p.coeffs()))
        .all(|c| c.im == 0.0);
    let radius = [1.0, 0.8, 1.25, 0.6, 1.6, 0.4, 2.5]
        .into_iter()
        .max_by(|a: &f64, b: &f64| {
            let gap = |rho: f64| {
                common
                    .iter()
                    .map(|r| (r.norm().ln() - rho.ln()).abs())
                    .fold(f64::INFINITY, f64::min)
            };
            gap(*a).total_cmp(&gap(*b))
        })
        .unwrap_or(1.0);
    let divide = |p: &LaurentPoly| divide_by_roots(p, &common, radius, real);
    Ok((nums.iter().map(divide).collect(), divide(&den)))
}

/// `p / prod (1 - r z^-1)` for roots `r` of `p`, recovered from samples on
/// the circle `|z| = radius`.
fn divide_by_roots(p: &LaurentPoly, roots: &[Complex64], radius: f64, real: bool) -> LaurentPoly {
    if p.is_zero() {
        return LaurentPoly::zero();
    }
    let k = roots.len() as i64;
    let lowest = p.lowest_power() + k;
    let n = p.highest_power() - lowest + 1;
    if n <= 0 {
        return LaurentPoly::zero();
    }
    let n = n as usize;
    let samples: Vec<Complex64> = (0..n)
        .map(|j| {
            let z = Complex64::from_polar(radius, std::f64::consts::TAU * j as f64 / n as f64);
            let zi = z.inv();
            let c: Complex64 = roots
                .iter()
                .map(|r| Complex64::new(1.0, 0.0) - r * zi)
                .product();
            p.eval(z) / c * z.powi(-(lowest as i32))
        })
        .collect();
    // samples[j] = sum_t q_t radius^t w^(jt), w = exp(j 2 pi / n)
    let coeffs = (0..n)
        .map(|t| {
            let s: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    v * Complex64::from_polar(
                        1.0,
                        -std::f64::consts::TAU * ((j * t) % n) as f64 / n as f64,
                    )
                })
                .sum();
            let q = s / (n as f64 * radius.powi(t as i32));
            if real {
                Complex64::new(q.re, 0.0)
            } else {
                q
            }
        })
        .collect();
    LaurentPoly::new(lowest, coeffs)
}

/// Matrix of rational transfer functions.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RationalTF>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<RationalTF>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} rational matrix with {} entries",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// `numerators / den` entrywise.
    pub fn from_shared(numerators: &PolyMatrix, den: &LaurentPoly) -> Result<Self> {
        let entries = numerators
            .entries()
            .iter()
            .map(|n| RationalTF::new(n.clone(), den.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(numerators.rows(), numerators.cols(), entries)
    }

    pub fn from_polys(m: &PolyMatrix) -> Self {
        Self::from_shared(m, &LaurentPoly::one()).expect("unit denominator")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &RationalTF {
        &self.entries[r * self.cols + c]
    }

    pub fn entries(&self) -> &[RationalTF] {
        &self.entries
    }

    /// Rewrites the matrix over one denominator: the entries' common
    /// denominator when they all agree, otherwise the product of the distinct
    /// ones.
    pub fn to_shared(&self) -> (PolyMatrix, LaurentPoly) {
        let mut distinct: Vec<LaurentPoly> = Vec::new();
        for e in &self.entries {
            if !distinct.iter().any(|d| d.approx_eq(e.den(), 1e-14)) {
                distinct.push(e.den().clone());
            }
        }
        let common = distinct.iter().fold(LaurentPoly::one(), |acc, d| &acc * d);
        let nums = PolyMatrix::from_fn(self.rows, self.cols, |i, j| {
            let e = self.get(i, j);
            distinct
                .iter()
                .filter(|d| !d.approx_eq(e.den(), 1e-14))
                .fold(e.num().clone(), |acc, d| &acc * d)
        });
        (nums, common)
    }

    pub fn eval(&self, z: Complex64) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(z))
    }

    /// Largest entrywise cross-multiplication residual, relative to the
    /// largest cross product.
    pub fn cross_residual(&self, other: &Self) -> Result<f64> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Dimension(format!(
                "comparing {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        // Normalized by the largest cross product in the matrix, so entries
        // that vanish in exact arithmetic do not compare noise with noise.
        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        for (a, b) in self.entries.iter().zip(&other.entries) {
            let lhs = a.num() * b.den();
            let rhs = b.num() * a.den();
            diff = diff.max((&lhs - &rhs).norm());
            scale = scale.max(lhs.norm()).max(rhs.norm());
        }
        Ok(if scale == 0.0 { 0.0 } else { diff / scale })
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.cross_residual(other).is_ok_and(|r| r <= tol)
    }

    pub fn reduced(&self, tol: f64) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.reduced(tol))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.rows, self.cols, entries)
    }
}
