use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::LaurentPoly;
use crate::error::{Error, Result};

/// Rectangular matrix of Laurent polynomials, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<LaurentPoly>,
}

impl PolyMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<LaurentPoly>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> LaurentPoly,
    ) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be non-empty");
        let entries = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| LaurentPoly::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                LaurentPoly::one()
            } else {
                LaurentPoly::zero()
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &LaurentPoly {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, p: LaurentPoly) {
        self.entries[r * self.cols + c] = p;
    }

    pub fn entries(&self) -> &[LaurentPoly] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(LaurentPoly::is_zero)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// Conjugate transpose with `z -> z^-1`.
    pub fn paraconjugate(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).paraconjugate())
    }

    pub fn scale(&self, p: &LaurentPoly) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * p)
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(LaurentPoly::zero(), |acc, k| {
                acc + self.get(i, k) * rhs.get(k, j)
            })
        }))
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (rhs.rows, rhs.cols) {
            return Err(Error::Dimension(format!(
                "cannot subtract {}x{} from {}x{}",
                rhs.rows, rhs.cols, self.rows, self.cols
            )));
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| {
            self.get(i, j) - rhs.get(i, j)
        }))
    }

    /// Root-sum-square of all coefficient magnitudes.
    pub fn coeff_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|p| p.norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `||self - other|| / max(||self||, ||other||)` over all coefficients.
    pub fn relative_distance(&self, other: &Self) -> Result<f64> {
        let diff = self.sub(other)?.coeff_norm();
        let scale = self.coeff_norm().max(other.coeff_norm());
        Ok(if scale == 0.0 { 0.0 } else { diff / scale })
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        if let Some(&r) = rows.iter().find(|&&r| r >= self.rows) {
            return Err(Error::Dimension(format!("row index {r} out of range")));
        }
        if let Some(&c) = cols.iter().find(|&&c| c >= self.cols) {
            return Err(Error::Dimension(format!("column index {c} out of range")));
        }
        Self::new(
            rows.len(),
            cols.len(),
            rows.iter()
                .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
                .map(|(r, c)| self.get(r, c).clone())
                .collect(),
        )
    }

    pub fn eval(&self, z: Complex64) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(z))
    }

    /// Determinant by cofactor expansion along successive rows. Minors over
    /// the same column subset are shared, so the cost is `O(n 2^n)` polynomial
    /// products rather than `O(n!)`.
    pub fn determinant(&self) -> Result<LaurentPoly> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "determinant of non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        if n > 20 {
            return Err(Error::Dimension(format!(
                "cofactor expansion limited to 20x20, got {n}x{n}"
            )));
        }
        let mut memo = HashMap::new();
        Ok(self.minor_det(0, (1u32 << n) - 1, &mut memo))
    }

    // Determinant of rows start..n restricted to the columns in `mask`.
    fn minor_det(
        &self,
        start: usize,
        mask: u32,
        memo: &mut HashMap<u32, LaurentPoly>,
    ) -> LaurentPoly {
        if mask == 0 {
            return LaurentPoly::one();
        }
        if let Some(p) = memo.get(&mask) {
            return p.clone();
        }
        let mut acc = LaurentPoly::zero();
        let mut sign_positive = true;
        for c in 0..self.cols {
            if mask & (1 << c) == 0 {
                continue;
            }
            let entry = self.get(start, c);
            if !entry.is_zero() {
                let term = entry * &self.minor_det(start + 1, mask & !(1 << c), memo);
                acc = if sign_positive {
                    acc + term
                } else {
                    acc - term
                };
            }
            sign_positive = !sign_positive;
        }
        memo.insert(mask, acc.clone());
        acc
    }

    /// Determinant and adjugate, with `self * adj = det * I`.
    pub fn det_adjugate(&self) -> Result<(LaurentPoly, PolyMatrix)> {
        let det = self.determinant()?;
        let n = self.rows;
        if n == 1 {
            return Ok((det, Self::identity(1)));
        }
        let mut adj = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let keep_rows: Vec<usize> = (0..n).filter(|&r| r != i).collect();
                let keep_cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
                let minor = self.submatrix(&keep_rows, &keep_cols)?.determinant()?;
                let cof = if (i + j) % 2 == 0 { minor } else { -&minor };
                adj.set(j, i, cof);
            }
        }
        Ok((det, adj))
    }
}
