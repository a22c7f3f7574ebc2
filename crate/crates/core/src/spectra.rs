//! Second-order statistics of the analysis stage and its time-domain
//! counterpart.
//!
//! Blocking convention: the analysis output is `v_j(n) = sum_l h_j(l) x(Mn - l)`
//! and the desired vector is `d_i(n) = x(Mn - i - d)`. Substituting the first
//! into `E[d_i(n) v_j*(n - k)]` gives `sum_l h_j*(l) R_xx(Mk + l - i - d)`,
//! whose z-transform is `(z^-(d+i) S_xx(z) H~_j(z))` decimated by `M`. Samples
//! before time zero are zero.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{LaurentPoly, PolyMatrix};
use crate::error::{Error, Result};

/// Uniform filter bank analysis stage: `L` causal FIR filters, each followed
/// by decimation by `M`, plus the reconstruction delay `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBankSpec {
    decimation: usize,
    filters: Vec<LaurentPoly>,
    delay: usize,
}

/// On-disk form: `{ "M": int, "d": int, "filters": [[h(0), h(1), ...], ...] }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterBankJson {
    #[serde(rename = "M")]
    pub decimation: usize,
    #[serde(default)]
    pub d: usize,
    pub filters: Vec<Vec<f64>>,
}

impl FilterBankSpec {
    pub fn new(decimation: usize, filters: Vec<LaurentPoly>, delay: usize) -> Result<Self> {
        if decimation == 0 {
            return Err(Error::InvalidArgument(
                "decimation factor M must be >= 1".into(),
            ));
        }
        if filters.is_empty() {
            return Err(Error::InvalidArgument(
                "filter bank needs at least one filter".into(),
            ));
        }
        if let Some(k) = filters.iter().position(|h| !h.is_causal()) {
            return Err(Error::InvalidArgument(format!(
                "filter {k} is not causal (contains z^{})",
                filters[k].highest_power()
            )));
        }
        Ok(Self {
            decimation,
            filters,
            delay,
        })
    }

    /// Builds a bank from real tap lists `h(0), h(1), ...`.
    pub fn from_taps(decimation: usize, taps: &[Vec<f64>], delay: usize) -> Result<Self> {
        Self::new(
            decimation,
            taps.iter()
                .map(|t| LaurentPoly::from_real_z_inv(t))
                .collect(),
            delay,
        )
    }

    pub fn from_json(json: &FilterBankJson) -> Result<Self> {
        Self::from_taps(json.decimation, &json.filters, json.d)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(s)?)
    }

    /// JSON form. Imaginary parts are dropped; the schema carries real taps.
    pub fn to_json(&self) -> FilterBankJson {
        FilterBankJson {
            decimation: self.decimation,
            d: self.delay,
            filters: self
                .filters
                .iter()
                .map(|h| h.causal_taps().iter().map(|c| c.re).collect())
                .collect(),
        }
    }

    pub fn with_delay(&self, delay: usize) -> Self {
        Self {
            delay,
            ..self.clone()
        }
    }

    /// `M`.
    pub fn decimation(&self) -> usize {
        self.decimation
    }

    /// `L`.
    pub fn channels(&self) -> usize {
        self.filters.len()
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn filters(&self) -> &[LaurentPoly] {
        &self.filters
    }

    pub fn filter(&self, j: usize) -> &LaurentPoly {
        &self.filters[j]
    }

    pub fn is_maximally_decimated(&self) -> bool {
        self.channels() == self.decimation
    }

    /// Taps `h_j(0), h_j(1), ...`.
    pub fn taps(&self, j: usize) -> Vec<Complex64> {
        self.filters[j].causal_taps()
    }
}

/// Power spectral density `S_xx(z)` of a scalar wide-sense stationary input.
#[derive(Clone, Debug, PartialEq)]
pub struct InputPsd {
    psd: LaurentPoly,
}

const PSD_GRID: usize = 1024;

impl InputPsd {
    /// Validates paraconjugate symmetry and non-negativity on a unit-circle grid.
    pub fn new(psd: LaurentPoly) -> Result<Self> {
        let scale = psd.l1_norm();
        if !psd.approx_eq(&psd.paraconjugate(), 1e-12) {
            return Err(Error::InvalidArgument(
                "PSD is not paraconjugate-symmetric".into(),
            ));
        }
        for k in 0..PSD_GRID {
            let z = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / PSD_GRID as f64);
            let v = psd.eval(z);
            if v.im.abs() > 1e-9 * scale || v.re < -1e-9 * scale {
                return Err(Error::InvalidArgument(format!(
                    "PSD is not real non-negative on the unit circle (value {v} at grid point {k})"
                )));
            }
        }
        Ok(Self { psd })
    }

    pub fn white(variance: f64) -> Self {
        assert!(variance >= 0.0, "variance must be non-negative");
        Self {
            psd: LaurentPoly::constant(Complex64::new(variance, 0.0)),
        }
    }

    /// `S_xx = sigma^2 G G~` for white noise of variance `sigma^2` driven
    /// through the shaping filter `G`.
    pub fn shaped(g: &LaurentPoly, driving_variance: f64) -> Self {
        assert!(driving_variance >= 0.0, "variance must be non-negative");
        Self {
            psd: (g * &g.paraconjugate()).scale(Complex64::new(driving_variance, 0.0)),
        }
    }

    pub fn psd(&self) -> &LaurentPoly {
        &self.psd
    }

    /// `R_xx(0)`.
    pub fn variance(&self) -> f64 {
        self.psd.coeff(0).re
    }
}

/// Finitely supported autocorrelation sequence with `R(-m) = R*(m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Autocorrelation {
    // R(m) is the coefficient of z^-m.
    transform: LaurentPoly,
}

impl Autocorrelation {
    /// `values[k]` is `R(min_lag + k)`.
    pub fn from_lags(min_lag: i64, values: &[Complex64]) -> Result<Self> {
        let mut rev = values.to_vec();
        rev.reverse();
        let max_lag = min_lag + values.len() as i64 - 1;
        let transform = LaurentPoly::new(-max_lag, rev);
        if !transform.approx_eq(&transform.paraconjugate(), 1e-12) {
            return Err(Error::InvalidArgument(
                "autocorrelation must satisfy R(-m) = conj(R(m))".into(),
            ));
        }
        Ok(Self { transform })
    }

    pub fn from_psd(psd: &InputPsd) -> Self {
        Self {
            transform: psd.psd().clone(),
        }
    }

    pub fn at(&self, lag: i64) -> Complex64 {
        self.transform.coeff(-lag)
    }

    /// Lag range `(min, max)` outside which `R` vanishes.
    pub fn support(&self) -> (i64, i64) {
        (
            -self.transform.highest_power(),
            -self.transform.lowest_power(),
        )
    }
}

/// `S_vv(z) = (H(z) S_xx(z) H~(z))` decimated by `M`, an `L x L` matrix.
pub fn analysis_psd(fb: &FilterBankSpec, sx: &InputPsd) -> PolyMatrix {
    let l = fb.channels();
    let m = fb.decimation();
    let weighted: Vec<LaurentPoly> = fb.filters().iter().map(|h| h * sx.psd()).collect();
    let tilde: Vec<LaurentPoly> = fb
        .filters()
        .iter()
        .map(LaurentPoly::paraconjugate)
        .collect();
    PolyMatrix::from_fn(l, l, |i, j| (&weighted[i] * &tilde[j]).downsample(m))
}

/// `S_dv(z) = (z^-d e_M(z) S_xx(z) H~(z))` decimated by `M`, an `M x L` matrix.
pub fn cross_psd(fb: &FilterBankSpec, sx: &InputPsd) -> PolyMatrix {
    let m = fb.decimation();
    let l = fb.channels();
    let weighted: Vec<LaurentPoly> = fb
        .filters()
        .iter()
        .map(|h| sx.psd() * &h.paraconjugate())
        .collect();
    PolyMatrix::from_fn(m, l, |i, j| {
        weighted[j].shift(-((fb.delay() + i) as i64)).downsample(m)
    })
}

/// `E[d_i(n) v_j*(n - k)] = sum_l h_j*(l) R_xx(Mk + l - i - d)`.
pub fn cross_correlation_dv(
    fb: &FilterBankSpec,
    rxx: &Autocorrelation,
    i: usize,
    j: usize,
    k: i64,
) -> Result<Complex64> {
    if i >= fb.decimation() || j >= fb.channels() {
        return Err(Error::Dimension(format!(
            "index pair ({i}, {j}) outside ({}, {})",
            fb.decimation(),
            fb.channels()
        )));
    }
    let m = fb.decimation() as i64;
    let offset = m * k - i as i64 - fb.delay() as i64;
    Ok(fb
        .taps(j)
        .iter()
        .enumerate()
        .map(|(l, h)| h.conj() * rxx.at(offset + l as i64))
        .sum())
}

/// Sequence of equal-length complex vectors indexed by block time `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockedSignal {
    dim: usize,
    samples: Vec<Vec<Complex64>>,
}

impl BlockedSignal {
    pub fn new(dim: usize, samples: Vec<Vec<Complex64>>) -> Result<Self> {
        if let Some(n) = samples.iter().position(|s| s.len() != dim) {
            return Err(Error::Dimension(format!(
                "block {n} has length {}, expected {dim}",
                samples[n].len()
            )));
        }
        Ok(Self { dim, samples })
    }

    pub fn zeros(dim: usize, len: usize) -> Self {
        Self {
            dim,
            samples: vec![vec![Complex64::new(0.0, 0.0); dim]; len],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn block(&self, n: usize) -> &[Complex64] {
        &self.samples[n]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[Complex64]> {
        self.samples.iter().map(Vec::as_slice)
    }

    pub fn channel(&self, j: usize) -> Vec<Complex64> {
        self.samples.iter().map(|s| s[j]).collect()
    }

    pub fn push(&mut self, block: Vec<Complex64>) -> Result<()> {
        if block.len() != self.dim {
            return Err(Error::Dimension(format!(
                "block of length {}, expected {}",
                block.len(),
                self.dim
            )));
        }
        self.samples.push(block);
        Ok(())
    }

    /// CSV with columns `n, <prefix>0, <prefix>1, ...`. Imaginary parts get
    /// extra `<prefix>j_im` columns only when some sample is complex.
    pub fn write_csv<W: Write>(&self, out: W, prefix: &str) -> Result<()> {
        let complex = self.samples.iter().flatten().any(|c| c.im != 0.0);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["n".to_string()];
        header.extend((0..self.dim).map(|j| format!("{prefix}{j}")));
        if complex {
            header.extend((0..self.dim).map(|j| format!("{prefix}{j}_im")));
        }
        w.write_record(&header)?;
        for (n, s) in self.samples.iter().enumerate() {
            let mut row = vec![n.to_string()];
            row.extend(s.iter().map(|c| c.re.to_string()));
            if complex {
                row.extend(s.iter().map(|c| c.im.to_string()));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn block_count(len: usize, m: usize) -> usize {
    len.div_ceil(m)
}

fn sample_at(x: &[Complex64], t: i64) -> Complex64 {
    if t < 0 || t >= x.len() as i64 {
        Complex64::new(0.0, 0.0)
    } else {
        x[t as usize]
    }
}

/// `v_j(n) = sum_l h_j(l) x(Mn - l)` for every block `n` with `Mn < len(x)`.
pub fn run_analysis(fb: &FilterBankSpec, x: &[Complex64]) -> BlockedSignal {
    let m = fb.decimation();
    let taps: Vec<Vec<Complex64>> = (0..fb.channels()).map(|j| fb.taps(j)).collect();
    let samples = (0..block_count(x.len(), m))
        .map(|n| {
            let t = (m * n) as i64;
            taps.iter()
                .map(|h| {
                    h.iter()
                        .enumerate()
                        .map(|(l, &c)| c * sample_at(x, t - l as i64))
                        .sum()
                })
                .collect()
        })
        .collect();
    BlockedSignal {
        dim: fb.channels(),
        samples,
    }
}

/// `d_i(n) = x(Mn - i - d)`, `i = 0..M`.
pub fn make_desired(x: &[Complex64], m: usize, d: usize) -> BlockedSignal {
    assert!(m >= 1, "decimation factor must be positive");
    let samples = (0..block_count(x.len(), m))
        .map(|n| {
            (0..m)
                .map(|i| sample_at(x, (m * n) as i64 - i as i64 - d as i64))
                .collect()
        })
        .collect();
    BlockedSignal { dim: m, samples }
}

/// Inverse of [`make_desired`]: writes `y_i(n)` back to time `Mn - i - d`.
/// Times outside `0..len` are dropped; times never written stay zero.
pub fn unblock(y: &BlockedSignal, d: usize, len: usize) -> Vec<Complex64> {
    let m = y.dim() as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (n, block) in y.blocks().enumerate() {
        for (i, &v) in block.iter().enumerate() {
            let t = m * n as i64 - i as i64 - d as i64;
            if t >= 0 && t < len as i64 {
                out[t as usize] = v;
            }
        }
    }
    out
}

/// Sample-at-a-time analysis bank; produces `v(n)` whenever the input time is
/// a multiple of `M`.
#[derive(Clone, Debug)]
pub struct AnalysisStream {
    taps: Vec<Vec<Complex64>>,
    decimation: usize,
    // history[0] is the newest sample.
    history: Vec<Complex64>,
    time: usize,
}

impl AnalysisStream {
    pub fn new(fb: &FilterBankSpec) -> Self {
        let taps: Vec<Vec<Complex64>> = (0..fb.channels()).map(|j| fb.taps(j)).collect();
        let depth = taps.iter().map(Vec::len).max().unwrap_or(1).max(1);
        Self {
            taps,
            decimation: fb.decimation(),
            history: vec![Complex64::new(0.0, 0.0); depth],
            time: 0,
        }
    }

    pub fn push(&mut self, x: Complex64) -> Option<Vec<Complex64>> {
        self.history.rotate_right(1);
        self.history[0] = x;
        let emit = self.time.is_multiple_of(self.decimation);
        self.time += 1;
        emit.then(|| {
            self.taps
                .iter()
                .map(|h| h.iter().zip(&self.history).map(|(a, b)| a * b).sum())
                .collect()
        })
    }
}
