use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients below this fraction of the largest coefficient magnitude are
/// trimmed from either end of a polynomial.
pub const TRIM_RELATIVE: f64 = 1e-12;
/// Absolute floor for the trim threshold.
pub const TRIM_ABSOLUTE: f64 = 1e-300;

/// A finite two-sided power series `sum_k c_k z^(lowest + k)` with complex
/// coefficients.
///
/// Representations are canonical: leading and trailing coefficients that are
/// negligible relative to the largest one are trimmed after every operation,
/// and the zero polynomial has an empty coefficient list with `lowest = 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LaurentPoly {
    lowest: i64,
    coeffs: Vec<Complex64>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(0, vec![c])
    }

    /// `c * z^exp`.
    pub fn monomial(exp: i64, c: Complex64) -> Self {
        Self::new(exp, vec![c])
    }

    /// Builds `sum_k coeffs[k] z^(lowest + k)` and normalizes it.
    pub fn new(lowest: i64, coeffs: Vec<Complex64>) -> Self {
        Self { lowest, coeffs }.trimmed()
    }

    /// Builds a causal polynomial `c[0] + c[1] z^-1 + c[2] z^-2 + ...`.
    pub fn from_z_inv(coeffs: &[Complex64]) -> Self {
        if coeffs.is_empty() {
            return Self::zero();
        }
        let mut asc = coeffs.to_vec();
        asc.reverse();
        Self::new(-(coeffs.len() as i64 - 1), asc)
    }

    pub fn from_real_z_inv(coeffs: &[f64]) -> Self {
        let c: Vec<Complex64> = coeffs.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        Self::from_z_inv(&c)
    }

    fn trimmed(mut self) -> Self {
        let max = self.max_abs();
        // negated so that NaN also yields zero
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(max > TRIM_ABSOLUTE) {
            return Self::zero();
        }
        let threshold = (TRIM_RELATIVE * max).max(TRIM_ABSOLUTE);
        let first = self
            .coeffs
            .iter()
            .position(|c| c.norm() >= threshold)
            .unwrap_or(0);
        let last = self
            .coeffs
            .iter()
            .rposition(|c| c.norm() >= threshold)
            .unwrap_or(0);
        self.coeffs.truncate(last + 1);
        self.coeffs.drain(..first);
        self.lowest += first as i64;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest exponent of `z` carrying a nonzero coefficient (0 for the zero
    /// polynomial).
    pub fn lowest_power(&self) -> i64 {
        self.lowest
    }

    /// Highest exponent of `z` carrying a nonzero coefficient (0 for the zero
    /// polynomial).
    pub fn highest_power(&self) -> i64 {
        if self.is_zero() {
            0
        } else {
            self.lowest + self.coeffs.len() as i64 - 1
        }
    }

    /// Coefficients in ascending powers of `z`, starting at `lowest_power`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `z^exp`.
    pub fn coeff(&self, exp: i64) -> Complex64 {
        let idx = exp - self.lowest;
        if idx < 0 || idx >= self.coeffs.len() as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// Coefficients of `z^0, z^-1, ..., z^lowest`. Only meaningful for causal
    /// polynomials; positive powers are ignored.
    pub fn causal_taps(&self) -> Vec<Complex64> {
        if self.is_zero() || self.lowest > 0 {
            return Vec::new();
        }
        (0..=(-self.lowest)).map(|k| self.coeff(-k)).collect()
    }

    /// True when no positive power of `z` appears.
    pub fn is_causal(&self) -> bool {
        self.highest_power() <= 0
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Sum of coefficient magnitudes.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        let acc = self
            .coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
        acc * z.powi(self.lowest as i32)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.lowest, self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Multiplies by `z^k`.
    pub fn shift(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self {
            lowest: self.lowest + k,
            coeffs: self.coeffs.clone(),
        }
    }

    /// `A~(z) = A_*(z^-1)`: conjugate the coefficients and negate the exponents.
    pub fn paraconjugate(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self {
            lowest: -self.highest_power(),
            coeffs: self.coeffs.iter().rev().map(|c| c.conj()).collect(),
        }
    }

    /// Keeps the coefficients of `z^(Mk)` and relabels them as `z^k`.
    pub fn downsample(&self, m: usize) -> Self {
        assert!(m >= 1, "decimation factor must be positive");
        if m == 1 || self.is_zero() {
            return self.clone();
        }
        let m = m as i64;
        let lo = self.lowest.div_euclid(m) + i64::from(self.lowest.rem_euclid(m) != 0);
        let hi = self.highest_power().div_euclid(m);
        if hi < lo {
            return Self::zero();
        }
        Self::new(lo, (lo..=hi).map(|k| self.coeff(k * m)).collect())
    }

    /// Divides by `(1 - r z^-1)`. Returns the quotient and a remainder that
    /// vanishes exactly when `r` is a root: `P(r)` for `|r| <= 1`, where
    /// `self = z^lowest P(z)`, and `P(r) / r^deg P` otherwise.
    pub fn deflate(&self, r: Complex64) -> (Self, Complex64) {
        if self.coeffs.len() <= 1 {
            let rem = self.coeffs.first().copied().unwrap_or_default();
            return (Self::zero(), rem);
        }
        // Synthetic division of the ascending-order polynomial by (z - r):
        // from the top for |r| <= 1, from the bottom otherwise, so rounding
        // errors are never amplified by |r|.
        let n = self.coeffs.len();
        let mut q = vec![Complex64::new(0.0, 0.0); n - 1];
        if r.norm() <= 1.0 {
            let mut carry = self.coeffs[n - 1];
            for k in (0..n - 1).rev() {
                q[k] = carry;
                carry = self.coeffs[k] + carry * r;
            }
            (Self::new(self.lowest + 1, q), carry)
        } else {
            // c_0 = -r q_0, c_k = q_{k-1} - r q_k
            q[0] = -self.coeffs[0] / r;
            for k in 1..n - 1 {
                q[k] = (q[k - 1] - self.coeffs[k]) / r;
            }
            let rem = self.coeffs[n - 1] - q[n - 2];
            (Self::new(self.lowest + 1, q), rem)
        }
    }

    /// Relative size of `self - other`, measured against the larger operand.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        let diff = (self - other).norm();
        let scale = self.norm().max(other.norm());
        if scale == 0.0 {
            0.0
        } else {
            diff / scale
        }
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.relative_distance(other) <= tol
    }

    /// Human-readable form such as `4 + 7z^-1 + 2z^-2`, highest power first.
    pub fn pretty(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for exp in (self.lowest..=self.highest_power()).rev() {
            let c = self.coeff(exp);
            if c.norm() == 0.0 {
                continue;
            }
            let (negative, body) = format_coeff(c);
            if out.is_empty() {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let power = match exp {
                0 => String::new(),
                1 => "z".to_string(),
                e => format!("z^{e}"),
            };
            if body == "1" && exp != 0 {
                out.push_str(&power);
            } else {
                out.push_str(&body);
                out.push_str(&power);
            }
        }
        out
    }
}

fn format_coeff(c: Complex64) -> (bool, String) {
    let scale = c.norm();
    if c.im.abs() <= 1e-12 * scale {
        (c.re < 0.0, fmt_real(c.re.abs()))
    } else if c.re.abs() <= 1e-12 * scale {
        (c.im < 0.0, format!("{}j", fmt_real(c.im.abs())))
    } else {
        let sign = if c.im < 0.0 { '-' } else { '+' };
        (
            false,
            format!(
                "({} {sign} {}j)",
                fmt_real_signed(c.re),
                fmt_real(c.im.abs())
            ),
        )
    }
}

fn fmt_real(x: f64) -> String {
    let rounded = (x * 1e6).round() / 1e6;
    if (x - rounded).abs() <= 1e-9 * x.max(1.0) {
        format!("{rounded}")
    } else {
        format!("{x:.6e}")
    }
}

fn fmt_real_signed(x: f64) -> String {
    if x < 0.0 {
        format!("-{}", fmt_real(-x))
    } else {
        fmt_real(x)
    }
}

/// Text form `lowest_power;c0_re,c0_im;c1_re,c1_im;...`. The zero polynomial
/// is written as `0`.
impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.lowest)?;
        for c in &self.coeffs {
            // Adding 0.0 turns -0 into +0 so the text form has no signed zeros.
            write!(f, ";{},{}", c.re + 0.0, c.im + 0.0)?;
        }
        Ok(())
    }
}

impl FromStr for LaurentPoly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(';');
        let lowest = parts
            .next()
            .unwrap_or_default()
            .trim()
            .parse::<i64>()
            .map_err(|e| Error::Parse(format!("lowest power in {s:?}: {e}")))?;
        let mut coeffs = Vec::new();
        for part in parts {
            let (re, im) = part
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("coefficient {part:?} is not re,im")))?;
            let re = re
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{re:?}: {e}")))?;
            let im = im
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{im:?}: {e}")))?;
            coeffs.push(Complex64::new(re, im));
        }
        Ok(Self::new(lowest, coeffs))
    }
}

impl serde::Serialize for LaurentPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for LaurentPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Mul<&LaurentPoly> for &LaurentPoly {
    type Output = LaurentPoly;

    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() || rhs.is_zero() {
            return LaurentPoly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        LaurentPoly::new(self.lowest + rhs.lowest, out)
    }
}

impl Add<&LaurentPoly> for &LaurentPoly {
    type Output = LaurentPoly;

    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let lo = self.lowest.min(rhs.lowest);
        let hi = self.highest_power().max(rhs.highest_power());
        LaurentPoly::new(
            lo,
            (lo..=hi).map(|e| self.coeff(e) + rhs.coeff(e)).collect(),
        )
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;

    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            lowest: self.lowest,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Sub<&LaurentPoly> for &LaurentPoly {
    type Output = LaurentPoly;

    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        self + &(-rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<LaurentPoly> for LaurentPoly {
            type Output = LaurentPoly;
            fn $method(self, rhs: LaurentPoly) -> LaurentPoly {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&LaurentPoly> for LaurentPoly {
            type Output = LaurentPoly;
            fn $method(self, rhs: &LaurentPoly) -> LaurentPoly {
                (&self).$method(rhs)
            }
        }
        impl $tr<LaurentPoly> for &LaurentPoly {
            type Output = LaurentPoly;
            fn $method(self, rhs: LaurentPoly) -> LaurentPoly {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Mul, mul);
forward_owned!(Add, add);
forward_owned!(Sub, sub);
