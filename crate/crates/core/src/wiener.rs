//! Exact matrix Wiener synthesis filter `A(z) = S_dv(z) S_vv(z)^-1` and the
//! modulation-determinant expressions used to cross-check it.
//!
//! The solver works in the Laurent polynomial ring: `A = S_dv adj(S_vv) / det(S_vv)`.
//! The determinant of a PSD matrix is paraconjugate-symmetric, so its roots
//! come in pairs `r, 1/r*`; for an invertible bank the outer half cancels
//! against every numerator. Poles and the stability verdict are taken from
//! the denominator after that cancellation.
//!
//! `W = exp(-j 2 pi / M)` throughout. Every identity checked here holds for
//! either sign convention as long as it is used consistently.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    cancel_common_roots, denominator_poles, twiddle, LaurentPoly, PolyMatrix, RationalMatrix,
    RationalTF, GCD_TOL,
};
use crate::error::{Error, Result};
use crate::spectra::{analysis_psd, cross_psd, FilterBankSpec, InputPsd};

/// Relative size of `det(S_vv)` (against a Hadamard-type bound) below which
/// the analysis PSD is treated as singular.
const SINGULAR_TOL: f64 = 1e-10;

/// Exact Wiener synthesis filter for one filter bank and input PSD.
#[derive(Clone, Debug)]
pub struct WienerSolution {
    /// `A(z)`, `M x L`, with approximately common factors cancelled.
    pub a: RationalMatrix,
    /// `S_dv adj(S_vv)` before cancellation.
    pub numerators: PolyMatrix,
    /// `det S_vv`, the unreduced common denominator.
    pub delta: LaurentPoly,
    /// Common denominator of `a`.
    pub denominator: LaurentPoly,
    pub poles: Vec<Complex64>,
    pub stable: bool,
    /// Relative coefficient residual of `A S_vv = S_dv`.
    pub identity_residual: f64,
}

impl WienerSolution {
    /// `M`.
    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    /// `L`.
    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    /// `numerators / delta` without any cancellation. Use this form for
    /// equality tests, which work by cross-multiplication.
    pub fn unreduced(&self) -> Result<RationalMatrix> {
        RationalMatrix::from_shared(&self.numerators, &self.delta)
    }

    pub fn max_pole_magnitude(&self) -> f64 {
        self.poles.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Number of impulse-response terms after which every entry's tail is
    /// below `rel_tail` of its leading coefficient (geometric bound from the
    /// pole radius), capped at `cap`.
    pub fn truncation_length(&self, rel_tail: f64, cap: usize) -> usize {
        let num_span = self
            .a
            .entries()
            .iter()
            .map(|e| (-e.num().lowest_power()).max(0) as usize + 1)
            .max()
            .unwrap_or(1);
        let rho = self.max_pole_magnitude();
        if rho <= 0.0 {
            return num_span.min(cap);
        }
        if rho >= 1.0 {
            return cap;
        }
        let den_span = self.denominator.causal_taps().len();
        let decay = (rel_tail.ln() / rho.ln()).ceil() as usize;
        (decay + num_span + den_span).min(cap)
    }

    /// Impulse responses `[p][q][k]` of every entry. Refused for unstable
    /// solutions, whose power series do not decay.
    pub fn impulse_responses(&self, n_terms: usize) -> Result<Vec<Vec<Vec<Complex64>>>> {
        if !self.stable {
            return Err(Error::Unstable {
                max_pole_magnitude: self.max_pole_magnitude(),
            });
        }
        (0..self.rows())
            .map(|p| {
                (0..self.cols())
                    .map(|q| self.a.get(p, q).impulse_response(n_terms))
                    .collect()
            })
            .collect()
    }

    pub fn to_export(&self) -> WienerExport {
        WienerExport {
            m: self.rows(),
            l: self.cols(),
            delta: self.delta.to_string(),
            entries: (0..self.rows())
                .map(|p| {
                    (0..self.cols())
                        .map(|q| {
                            let e = self.a.get(p, q);
                            RationalExport {
                                num: e.num().to_string(),
                                den: e.den().to_string(),
                            }
                        })
                        .collect()
                })
                .collect(),
            stable: self.stable,
            poles: self.poles.iter().map(|p| [p.re, p.im]).collect(),
        }
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.to_export())?;
        Ok(())
    }
}

/// JSON form of a [`WienerSolution`]. Polynomials use the
/// `lowest_power;re,im;...` text form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WienerExport {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub delta: String,
    pub entries: Vec<Vec<RationalExport>>,
    pub stable: bool,
    pub poles: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalExport {
    pub num: String,
    pub den: String,
}

impl WienerExport {
    /// Rebuilds `A(z)` from the exported strings.
    pub fn matrix(&self) -> Result<RationalMatrix> {
        let mut entries = Vec::with_capacity(self.m * self.l);
        for row in &self.entries {
            for e in row {
                entries.push(RationalTF::new(e.num.parse()?, e.den.parse()?)?);
            }
        }
        RationalMatrix::new(self.m, self.l, entries)
    }
}

/// `A(z) = S_dv(z) adj(S_vv(z)) / det(S_vv(z))`.
pub fn wiener_solve(fb: &FilterBankSpec, sx: &InputPsd) -> Result<WienerSolution> {
    let svv = analysis_psd(fb, sx);
    let sdv = cross_psd(fb, sx);
    let (delta, adj) = svv.det_adjugate()?;

    let bound: f64 = (0..svv.rows())
        .map(|i| {
            (0..svv.cols())
                .map(|j| svv.get(i, j).l1_norm())
                .sum::<f64>()
        })
        .product();
    if delta.is_zero() || delta.l1_norm() <= SINGULAR_TOL * bound {
        return Err(singular_report(fb, sx, &svv));
    }

    let numerators = sdv.mul(&adj)?;
    let identity_residual = numerators
        .mul(&svv)?
        .relative_distance(&sdv.scale(&delta))?;

    let (reduced_nums, denominator) =
        cancel_common_roots(numerators.entries().to_vec(), delta.clone(), GCD_TOL)?;
    let reduced = PolyMatrix::new(numerators.rows(), numerators.cols(), reduced_nums)?;
    let a = RationalMatrix::from_shared(&reduced, &denominator)?;
    let denominator = a.get(0, 0).den().clone();
    let poles = denominator_poles(&denominator)?;

    Ok(WienerSolution {
        a,
        numerators,
        delta,
        denominator,
        poles: poles.roots,
        stable: poles.stable,
        identity_residual,
    })
}

fn singular_report(fb: &FilterBankSpec, sx: &InputPsd, svv: &PolyMatrix) -> Error {
    let l = fb.channels();
    let m = fb.decimation();
    let probes: Vec<Complex64> = (0..8)
        .map(|k| Complex64::from_polar(1.0, 0.37 + TAU * k as f64 / 8.0))
        .collect();
    let rank = probes
        .iter()
        .map(|&z| numeric_rank(&svv.eval(z)))
        .max()
        .unwrap_or(0);

    // Every modulation-determinant term of the full determinant carries E_H(i_1..i_L);
    // count the alias tuples for which it vanishes at a probe point.
    let combos = combinations(m, l);
    let all_rows: Vec<usize> = (0..l).collect();
    let w = principal_root(probes[0], m);
    let vanishing = combos
        .iter()
        .filter(|idx| {
            let e = modulation_det(fb.filters(), &all_rows, idx, w, m, false);
            let s: Complex64 = idx
                .iter()
                .map(|&i| sx.psd().eval(w * twiddle(m).powi(i as i32)))
                .product();
            (e * s).norm() <= 1e-10
        })
        .count();
    Error::SingularBank {
        rank_defect: l - rank,
        vanishing_terms: vanishing,
        total_terms: combos.len(),
    }
}

fn numeric_rank(m: &DMatrix<Complex64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-9 * max).count()
}

/// All strictly increasing `k`-tuples from `0..n`.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(pos) = (0..k).rev().find(|&p| idx[p] < n - k + p) else {
            return out;
        };
        idx[pos] += 1;
        for p in pos + 1..k {
            idx[p] = idx[p - 1] + 1;
        }
    }
}

/// The principal `M`-th root of `z`.
pub fn principal_root(z: Complex64, m: usize) -> Complex64 {
    let (r, theta) = z.to_polar();
    Complex64::from_polar(r.powf(1.0 / m as f64), theta / m as f64)
}

fn modulation_det(
    filters: &[LaurentPoly],
    rows: &[usize],
    alias: &[usize],
    w: Complex64,
    m: usize,
    paraconjugate: bool,
) -> Complex64 {
    let tw = twiddle(m);
    let q = rows.len();
    let mat = DMatrix::from_fn(q, q, |r, k| {
        let s = w * tw.powi(alias[k] as i32);
        let h = &filters[rows[r]];
        if paraconjugate {
            h.paraconjugate().eval(s)
        } else {
            h.eval(s)
        }
    });
    mat.determinant()
}

/// `E_{F_1..F_Q}(i_1..i_Q)`: the determinant of `[F_r(z^(1/M) W^(i_k))]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulationDetSpec {
    row_filters: Vec<LaurentPoly>,
    alias_indices: Vec<usize>,
    m: usize,
}

impl ModulationDetSpec {
    pub fn new(row_filters: Vec<LaurentPoly>, alias_indices: Vec<usize>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument(
                "modulation order must be >= 1".into(),
            ));
        }
        if row_filters.len() != alias_indices.len() || row_filters.is_empty() {
            return Err(Error::Dimension(format!(
                "{} row filters against {} alias indices",
                row_filters.len(),
                alias_indices.len()
            )));
        }
        if alias_indices.windows(2).any(|w| w[0] >= w[1]) || alias_indices.iter().any(|&i| i >= m) {
            return Err(Error::InvalidArgument(format!(
                "alias indices {alias_indices:?} must be strictly increasing in [0, {m})"
            )));
        }
        Ok(Self {
            row_filters,
            alias_indices,
            m,
        })
    }

    /// Value at the chosen root `w` of `z`.
    pub fn eval_at_root(&self, w: Complex64) -> Complex64 {
        let rows: Vec<usize> = (0..self.row_filters.len()).collect();
        modulation_det(
            &self.row_filters,
            &rows,
            &self.alias_indices,
            w,
            self.m,
            false,
        )
    }

    /// Value of the paraconjugate `E~` at the chosen root `w` of `z`.
    pub fn eval_paraconjugate_at_root(&self, w: Complex64) -> Complex64 {
        let rows: Vec<usize> = (0..self.row_filters.len()).collect();
        modulation_det(
            &self.row_filters,
            &rows,
            &self.alias_indices,
            w,
            self.m,
            true,
        )
    }
}

/// Deliberate corruption of the modulation sum, used to show that the
/// determinant cross-check can fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FaultInjection {
    #[default]
    None,
    /// Use `W*` instead of `W` in the row determinant only.
    ConjugateRowTwiddle,
}

/// Sum-over-alias-subsets expression for a `Q x Q` minor of `S_vv`:
///
/// `M^-Q sum_{i_1 < ... < i_Q} prod_k S_xx(w W^(i_k)) E_rows(i..) E~_cols(i..)`
/// with `w` an `M`-th root of `z`.
#[derive(Clone, Debug)]
pub struct ModulationMinor {
    rows: Vec<LaurentPoly>,
    cols: Vec<LaurentPoly>,
    psd: LaurentPoly,
    m: usize,
    alias_sets: Vec<Vec<usize>>,
    fault: FaultInjection,
}

pub fn theorem1_det(
    rows: &[usize],
    cols: &[usize],
    fb: &FilterBankSpec,
    sx: &InputPsd,
) -> Result<ModulationMinor> {
    let q = rows.len();
    let l = fb.channels();
    let m = fb.decimation();
    if q == 0 || q != cols.len() {
        return Err(Error::Dimension(format!(
            "row/column index lists of lengths {} and {}",
            rows.len(),
            cols.len()
        )));
    }
    if q > m {
        return Err(Error::InvalidArgument(format!(
            "minor order {q} exceeds M = {m}"
        )));
    }
    if let Some(bad) = rows.iter().chain(cols).find(|&&i| i >= l) {
        return Err(Error::Dimension(format!(
            "filter index {bad} outside 0..{l}"
        )));
    }
    Ok(ModulationMinor {
        rows: rows.iter().map(|&r| fb.filter(r).clone()).collect(),
        cols: cols.iter().map(|&c| fb.filter(c).clone()).collect(),
        psd: sx.psd().clone(),
        m,
        alias_sets: combinations(m, q),
        fault: FaultInjection::None,
    })
}

impl ModulationMinor {
    pub fn with_fault(mut self, fault: FaultInjection) -> Self {
        self.fault = fault;
        self
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_branch(z, 0)
    }

    /// Evaluates with the root `z^(1/M) W^branch`.
    pub fn eval_branch(&self, z: Complex64, branch: usize) -> Complex64 {
        let m = self.m;
        let tw = twiddle(m);
        let w = principal_root(z, m) * tw.powi(branch as i32);
        let row_w = match self.fault {
            FaultInjection::None => tw,
            FaultInjection::ConjugateRowTwiddle => tw.conj(),
        };
        let q = self.rows.len();
        let row_idx: Vec<usize> = (0..q).collect();
        let cols_tilde: Vec<LaurentPoly> =
            self.cols.iter().map(LaurentPoly::paraconjugate).collect();
        let mut total = Complex64::new(0.0, 0.0);
        for alias in &self.alias_sets {
            let weight: Complex64 = alias
                .iter()
                .map(|&i| self.psd.eval(w * tw.powi(i as i32)))
                .product();
            if weight.norm() == 0.0 {
                continue;
            }
            let e_rows = DMatrix::from_fn(q, q, |r, k| {
                self.rows[r].eval(w * row_w.powi(alias[k] as i32))
            })
            .determinant();
            let e_cols = modulation_det(&cols_tilde, &row_idx, alias, w, m, false);
            total += weight * e_rows * e_cols;
        }
        total / (m as f64).powi(q as i32)
    }
}

/// Determinant of the `Q x Q` submatrix of `S_vv` computed directly from the
/// polynomial entries. Independent of the modulation-sum route.
#[derive(Clone, Debug)]
pub struct SubmatrixDet {
    det: LaurentPoly,
}

pub fn submatrix_det_bruteforce(
    rows: &[usize],
    cols: &[usize],
    fb: &FilterBankSpec,
    sx: &InputPsd,
) -> Result<SubmatrixDet> {
    if rows.len() != cols.len() || rows.is_empty() {
        return Err(Error::Dimension(format!(
            "row/column index lists of lengths {} and {}",
            rows.len(),
            cols.len()
        )));
    }
    let sub = analysis_psd(fb, sx).submatrix(rows, cols)?;
    Ok(SubmatrixDet {
        det: sub.determinant()?,
    })
}

impl SubmatrixDet {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.det.eval(z)
    }

    pub fn polynomial(&self) -> &LaurentPoly {
        &self.det
    }
}

/// `A_{i,j}(z)` of a maximally decimated bank as a ratio of two `M x M`
/// modulation determinants: the bank's own, and the same with row `j`
/// replaced by `z^-(d+i)`.
pub fn closed_form_eval(
    fb: &FilterBankSpec,
    i: usize,
    j: usize,
    d: usize,
    z: Complex64,
) -> Result<Complex64> {
    closed_form_eval_branch(fb, i, j, d, z, 0)
}

pub fn closed_form_eval_branch(
    fb: &FilterBankSpec,
    i: usize,
    j: usize,
    d: usize,
    z: Complex64,
    branch: usize,
) -> Result<Complex64> {
    let m = fb.decimation();
    if !fb.is_maximally_decimated() {
        return Err(Error::InvalidArgument(format!(
            "closed form needs L = M, got L = {} and M = {m}",
            fb.channels()
        )));
    }
    if i >= m || j >= m {
        return Err(Error::Dimension(format!(
            "entry ({i}, {j}) outside {m}x{m}"
        )));
    }
    let w = principal_root(z, m) * twiddle(m).powi(branch as i32);
    let alias: Vec<usize> = (0..m).collect();
    let rows: Vec<usize> = (0..m).collect();
    let den = modulation_det(fb.filters(), &rows, &alias, w, m, false);

    let tw = twiddle(m);
    let den_scale: f64 = (0..m)
        .map(|r| {
            (0..m)
                .map(|k| fb.filter(r).eval(w * tw.powi(k as i32)).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .product();
    if den.norm() <= 1e-12 * den_scale {
        return Err(Error::SingularEvaluation { re: z.re, im: z.im });
    }

    let mut replaced = fb.filters().to_vec();
    replaced[j] = LaurentPoly::monomial(-((d + i) as i64), Complex64::new(1.0, 0.0));
    let num = modulation_det(&replaced, &rows, &alias, w, m, false);
    Ok(num / den)
}

/// Per-angle transform-domain reconstruction residuals.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionReport {
    /// `(angle, residual)` on the unit circle.
    pub points: Vec<(f64, f64)>,
    pub max_residual: f64,
}

impl ReconstructionReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["grid_angle", "residual"])?;
        for (a, r) in &self.points {
            w.write_record([a.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Default grid: 64 uniform angles plus 16 seeded random angles.
pub fn evaluation_grid(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..64)
        .map(|k| TAU * k as f64 / 64.0)
        .chain((0..16).map(|_| rng.random_range(0.0..TAU)))
        .collect()
}

/// Checks `A S_vv A~ = S_dd` and `A S_vd = S_dd` on the unit circle for a
/// maximally decimated bank driven by white input.
pub fn reconstruction_check(
    ws: &WienerSolution,
    fb: &FilterBankSpec,
) -> Result<ReconstructionReport> {
    reconstruction_check_with(ws, fb, &InputPsd::white(1.0))
}

pub fn reconstruction_check_with(
    ws: &WienerSolution,
    fb: &FilterBankSpec,
    sx: &InputPsd,
) -> Result<ReconstructionReport> {
    let m = fb.decimation();
    if !fb.is_maximally_decimated() {
        return Err(Error::InvalidArgument(format!(
            "reconstruction check needs L = M, got L = {} and M = {m}",
            fb.channels()
        )));
    }
    if (ws.rows(), ws.cols()) != (m, fb.channels()) {
        return Err(Error::Dimension(
            "solution does not match filter bank".into(),
        ));
    }
    let svv = analysis_psd(fb, sx);
    let svd = cross_psd(fb, sx).paraconjugate();
    // S_dd(z) entry (i, k) = (z^(k - i) S_xx(z)) decimated by M.
    let sdd = PolyMatrix::from_fn(m, m, |i, k| {
        sx.psd().shift(k as i64 - i as i64).downsample(m)
    });

    let mut points = Vec::new();
    let mut max_residual = 0.0f64;
    for angle in evaluation_grid(0x5eed) {
        let z = Complex64::from_polar(1.0, angle);
        let a = ws.a.eval(z);
        let target = sdd.eval(z);
        let scale = target.norm().max(1e-300);
        let power = &a * svv.eval(z) * a.adjoint() - &target;
        let cross = &a * svd.eval(z) - &target;
        let r = power.norm().max(cross.norm()) / scale;
        max_residual = max_residual.max(r);
        points.push((angle, r));
    }
    Ok(ReconstructionReport {
        points,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::RATIONAL_EQ_TOL;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn z_inv(cs: &[f64]) -> LaurentPoly {
        LaurentPoly::from_real_z_inv(cs)
    }

    fn exp1() -> FilterBankSpec {
        FilterBankSpec::from_taps(2, &[vec![4.0, 7.0, 2.0], vec![3.0, -1.0, -1.5]], 0).unwrap()
    }

    fn exp1_expected() -> RationalMatrix {
        let den = z_inv(&[50.0, -17.0]);
        let nums = [
            z_inv(&[2.0]),
            z_inv(&[14.0]),
            z_inv(&[6.0, -3.0]),
            z_inv(&[-8.0, -4.0]),
        ];
        RationalMatrix::new(
            2,
            2,
            nums.into_iter()
                .map(|n| RationalTF::new(n, den.clone()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn combinations_enumerate_subsets() {
        assert_eq!(combinations(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(combinations(2, 2), vec![vec![0, 1]]);
        assert!(combinations(2, 3).is_empty());
        assert_eq!(combinations(4, 1).len(), 4);
    }

    #[test]
    fn solves_first_bank() {
        let ws = wiener_solve(&exp1(), &InputPsd::white(1.0)).unwrap();
        assert!(ws
            .unreduced()
            .unwrap()
            .approx_eq(&exp1_expected(), RATIONAL_EQ_TOL));
        assert!(ws.a.approx_eq(&exp1_expected(), 1e-9));
        assert!(ws.stable);
        assert_eq!(ws.poles.len(), 1);
        assert!((ws.poles[0] - c(0.34)).norm() < 1e-10);
        assert!(ws.identity_residual < 1e-9);
        // the reduced denominator is 50 - 17 z^-1 up to scale
        let taps = ws.denominator.causal_taps();
        assert_eq!(taps.len(), 2);
        assert!((taps[1] / taps[0] - c(-0.34)).norm() < 1e-12);
    }

    #[test]
    fn scalar_inversion() {
        let fb = FilterBankSpec::from_taps(1, &[vec![4.0]], 0).unwrap();
        let ws = wiener_solve(&fb, &InputPsd::white(1.0)).unwrap();
        let expected = RationalTF::new(LaurentPoly::one(), LaurentPoly::constant(c(4.0))).unwrap();
        assert!(ws.a.get(0, 0).approx_eq(&expected, 1e-12));
        assert!(ws.poles.is_empty() && ws.stable);
    }

    #[test]
    fn singular_bank_is_reported() {
        let fb =
            FilterBankSpec::from_taps(2, &[vec![4.0, 7.0, 2.0], vec![4.0, 7.0, 2.0]], 0).unwrap();
        match wiener_solve(&fb, &InputPsd::white(1.0)) {
            Err(Error::SingularBank {
                rank_defect,
                vanishing_terms,
                total_terms,
            }) => {
                assert_eq!(rank_defect, 1);
                assert_eq!(total_terms, 1);
                assert_eq!(vanishing_terms, 1);
            }
            other => panic!("expected singular error, got {other:?}"),
        }
        assert!(matches!(
            wiener_solve(&exp1(), &InputPsd::white(0.0)),
            Err(Error::SingularBank { .. })
        ));
    }

    #[test]
    fn oversampled_bank_is_singular() {
        let fb = FilterBankSpec::from_taps(
            2,
            &[vec![1.0, 0.5], vec![0.3, -1.0], vec![2.0, 0.0, 1.0]],
            0,
        )
        .unwrap();
        match wiener_solve(&fb, &InputPsd::white(1.0)) {
            Err(Error::SingularBank {
                rank_defect,
                total_terms,
                ..
            }) => {
                assert_eq!(rank_defect, 1);
                assert_eq!(total_terms, 0);
            }
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn delay_chain_bank() {
        // H_i = z^-i: v(n) = [x(Mn), x(Mn - 1), ...] = d(n) when d = 0.
        for m in 1..5 {
            let taps: Vec<Vec<f64>> = (0..m)
                .map(|i| {
                    let mut t = vec![0.0; i + 1];
                    t[i] = 1.0;
                    t
                })
                .collect();
            let fb = FilterBankSpec::from_taps(m, &taps, 0).unwrap();
            let ws = wiener_solve(&fb, &InputPsd::white(1.0)).unwrap();
            let id = RationalMatrix::from_polys(&PolyMatrix::identity(m));
            assert!(ws.a.approx_eq(&id, 1e-12));
            let report = reconstruction_check(&ws, &fb).unwrap();
            assert!(report.max_residual < 1e-12);
        }
    }

    #[test]
    fn modulation_spec_validation() {
        assert!(ModulationDetSpec::new(vec![z_inv(&[1.0])], vec![0], 2).is_ok());
        assert!(ModulationDetSpec::new(vec![z_inv(&[1.0]); 2], vec![1, 0], 2).is_err());
        assert!(ModulationDetSpec::new(vec![z_inv(&[1.0]); 2], vec![0], 2).is_err());
        assert!(ModulationDetSpec::new(vec![z_inv(&[1.0])], vec![2], 2).is_err());
    }

    #[test]
    fn modulation_spec_single_row() {
        let h = z_inv(&[4.0, 7.0, 2.0]);
        let spec = ModulationDetSpec::new(vec![h.clone()], vec![1], 2).unwrap();
        let w = Complex64::from_polar(1.0, 0.3);
        assert!((spec.eval_at_root(w) - h.eval(-w)).norm() < 1e-12);
        assert!((spec.eval_paraconjugate_at_root(w) - h.paraconjugate().eval(-w)).norm() < 1e-12);
    }

    #[test]
    fn first_order_minor_is_aliasing_sum() {
        let fb = exp1();
        let sx = InputPsd::white(1.0);
        let th = theorem1_det(&[0], &[1], &fb, &sx).unwrap();
        let bf = submatrix_det_bruteforce(&[0], &[1], &fb, &sx).unwrap();
        for k in 0..16 {
            let z = Complex64::from_polar(1.0, 0.2 + TAU * k as f64 / 16.0);
            assert!((th.eval(z) - bf.eval(z)).norm() < 1e-10);
        }
    }

    #[test]
    fn full_determinant_first_bank() {
        let fb = exp1();
        let sx = InputPsd::white(1.0);
        let th = theorem1_det(&[0, 1], &[0, 1], &fb, &sx).unwrap();
        let bf = submatrix_det_bruteforce(&[0, 1], &[0, 1], &fb, &sx).unwrap();
        for angle in evaluation_grid(7) {
            let z = Complex64::from_polar(1.0, angle);
            let (a, b) = (th.eval(z), bf.eval(z));
            assert!((a - b).norm() <= 1e-8 * b.norm().max(1.0));
            for branch in 1..2 {
                assert!((th.eval_branch(z, branch) - a).norm() <= 1e-9 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn zero_column_gives_zero() {
        let fb = FilterBankSpec::new(
            3,
            vec![z_inv(&[1.0, 2.0]), LaurentPoly::zero(), z_inv(&[0.0, 1.0])],
            0,
        )
        .unwrap();
        let sx = InputPsd::white(1.0);
        let th = theorem1_det(&[0, 2], &[1, 2], &fb, &sx).unwrap();
        let bf = submatrix_det_bruteforce(&[0, 2], &[1, 2], &fb, &sx).unwrap();
        let z = Complex64::from_polar(1.0, 1.1);
        assert_eq!(th.eval(z).norm(), 0.0);
        assert!(bf.polynomial().is_zero());

        let zero = InputPsd::white(0.0);
        assert!(submatrix_det_bruteforce(&[0], &[0], &fb, &zero)
            .unwrap()
            .polynomial()
            .is_zero());
    }

    #[test]
    fn minor_preconditions() {
        let sx = InputPsd::white(1.0);
        assert!(theorem1_det(&[0, 1, 1], &[0, 1, 0], &exp1(), &sx).is_err());
        assert!(theorem1_det(&[0], &[0, 1], &exp1(), &sx).is_err());
        assert!(theorem1_det(&[2], &[0], &exp1(), &sx).is_err());
    }

    #[test]
    fn closed_form_first_bank() {
        let fb = exp1();
        let expected = exp1_expected();
        for angle in evaluation_grid(3) {
            let z = Complex64::from_polar(1.0, angle);
            for i in 0..2 {
                for j in 0..2 {
                    let cf = closed_form_eval(&fb, i, j, 0, z).unwrap();
                    let ex = expected.get(i, j).eval(z);
                    assert!((cf - ex).norm() <= 1e-8 * ex.norm().max(1e-3));
                }
            }
        }
    }

    #[test]
    fn closed_form_scalar() {
        let fb = FilterBankSpec::from_taps(1, &[vec![2.0, 0.5]], 0).unwrap();
        let z = Complex64::from_polar(1.0, 0.8);
        for d in 0..3 {
            let cf = closed_form_eval(&fb, 0, 0, d, z).unwrap();
            let ex = z.powi(-(d as i32)) / fb.filter(0).eval(z);
            assert!((cf - ex).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_form_preconditions() {
        let z = Complex64::from_polar(1.0, 0.1);
        let fb = FilterBankSpec::from_taps(3, &[vec![1.0], vec![0.0, 1.0]], 0).unwrap();
        assert!(closed_form_eval(&fb, 0, 0, 0, z).is_err());
        assert!(closed_form_eval(&exp1(), 2, 0, 0, z).is_err());
        let dup = FilterBankSpec::from_taps(2, &[vec![1.0, 1.0], vec![1.0, 1.0]], 0).unwrap();
        assert!(matches!(
            closed_form_eval(&dup, 0, 0, 0, z),
            Err(Error::SingularEvaluation { .. })
        ));
    }

    #[test]
    fn export_round_trip() {
        let ws = wiener_solve(&exp1(), &InputPsd::white(1.0)).unwrap();
        let mut buf = Vec::new();
        ws.write_json(&mut buf).unwrap();
        let back: WienerExport = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back.m, 2);
        assert_eq!(back.l, 2);
        assert!(back.stable);
        assert!(back.matrix().unwrap().approx_eq(&exp1_expected(), 1e-9));
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        for key in ["M", "L", "delta", "entries", "stable", "poles"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn impulse_responses_refused_when_unstable() {
        // det of the polyphase matrix has its root outside the unit circle
        let fb = FilterBankSpec::from_taps(1, &[vec![1.0, -2.0]], 0).unwrap();
        let ws = wiener_solve(&fb, &InputPsd::white(1.0)).unwrap();
        assert!(!ws.stable);
        assert!(matches!(
            ws.impulse_responses(4),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn truncation_length_bounds_tail() {
        let ws = wiener_solve(&exp1(), &InputPsd::white(1.0)).unwrap();
        let n = ws.truncation_length(1e-10, 10_000);
        assert!(0.34f64.powi(n as i32 - 2) < 1e-10);
        assert!(n < 40);
    }
}
