//! Matrix adaptive synthesis filter.
//!
//! An `M x L` grid of FIR filters `a_{p,q}` maps the analysis output `v(n)`
//! to `y_p(n) = sum_q sum_m a_{p,q,m} v_q(n - m)`. Each filter is updated by
//! `a_{p,q} += mu_{p,q} e_p(n) conj(u_q(n))`, where `u_q(n)` is channel `q`'s
//! delay line and `e = d - y`. The normalized variant divides the step by the
//! regressor energy, either per input channel or jointly over all channels.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::BlockedSignal;

pub const DEFAULT_EPS: f64 = 1e-8;

/// How the step size is scaled at each update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Plain LMS.
    None,
    /// `mu / (eps + ||u_q||^2)` for the filters fed by channel `q`.
    #[default]
    PerChannel,
    /// `mu / (eps + sum_q ||u_q||^2)` for every filter.
    Joint,
}

#[derive(Clone, Debug)]
pub struct MatrixAdaptiveFilter {
    m: usize,
    l: usize,
    tap_len: usize,
    // indexed p * l + q
    taps: Vec<Vec<Complex64>>,
    steps: Vec<f64>,
    // one per input channel, newest sample first
    delay_lines: Vec<Vec<Complex64>>,
    normalization: Normalization,
    eps: f64,
}

fn check_step(mu: f64) -> Result<()> {
    if mu.is_finite() && mu >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "step size {mu} must be finite and non-negative"
        )))
    }
}

impl MatrixAdaptiveFilter {
    /// Zero-initialized filter with a common tap length and step size.
    pub fn new(
        m: usize,
        l: usize,
        tap_len: usize,
        step: f64,
        normalization: Normalization,
    ) -> Result<Self> {
        if m == 0 || l == 0 {
            return Err(Error::InvalidArgument(format!("filter dimensions {m}x{l}")));
        }
        if tap_len == 0 {
            return Err(Error::InvalidArgument("tap length must be >= 1".into()));
        }
        check_step(step)?;
        let zero = Complex64::new(0.0, 0.0);
        Ok(Self {
            m,
            l,
            tap_len,
            taps: vec![vec![zero; tap_len]; m * l],
            steps: vec![step; m * l],
            delay_lines: vec![vec![zero; tap_len]; l],
            normalization,
            eps: DEFAULT_EPS,
        })
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidArgument(format!("regularizer {eps}")));
        }
        self.eps = eps;
        Ok(self)
    }

    pub fn outputs(&self) -> usize {
        self.m
    }

    pub fn inputs(&self) -> usize {
        self.l
    }

    pub fn tap_len(&self) -> usize {
        self.tap_len
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn taps(&self, p: usize, q: usize) -> &[Complex64] {
        &self.taps[p * self.l + q]
    }

    pub fn set_taps(&mut self, p: usize, q: usize, taps: &[Complex64]) -> Result<()> {
        if taps.len() != self.tap_len {
            return Err(Error::Dimension(format!(
                "{} taps given, filter length is {}",
                taps.len(),
                self.tap_len
            )));
        }
        self.taps[p * self.l + q].copy_from_slice(taps);
        Ok(())
    }

    pub fn step(&self, p: usize, q: usize) -> f64 {
        self.steps[p * self.l + q]
    }

    /// Per-pair step override.
    pub fn set_step(&mut self, p: usize, q: usize, mu: f64) -> Result<()> {
        check_step(mu)?;
        self.steps[p * self.l + q] = mu;
        Ok(())
    }

    pub fn delay_line(&self, q: usize) -> &[Complex64] {
        &self.delay_lines[q]
    }

    pub fn tap_table(&self) -> TapTable {
        TapTable {
            m: self.m,
            l: self.l,
            tap_len: self.tap_len,
            taps: self.taps.clone(),
        }
    }

    fn output(&self) -> Vec<Complex64> {
        (0..self.m)
            .map(|p| {
                (0..self.l)
                    .map(|q| {
                        self.taps(p, q)
                            .iter()
                            .zip(&self.delay_lines[q])
                            .map(|(a, u)| a * u)
                            .sum::<Complex64>()
                    })
                    .sum()
            })
            .collect()
    }

    /// Pushes `v(n)` into the delay lines and returns `y(n)`.
    pub fn filter_block(&mut self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.l {
            return Err(Error::Dimension(format!(
                "input block of length {}, filter expects {}",
                v.len(),
                self.l
            )));
        }
        for (line, &x) in self.delay_lines.iter_mut().zip(v) {
            line.rotate_right(1);
            line[0] = x;
        }
        Ok(self.output())
    }

    #[allow(clippy::needless_range_loop)]
    fn adapt(
        &mut self,
        v: &[Complex64],
        d: &[Complex64],
        norm: Normalization,
    ) -> Result<Vec<Complex64>> {
        if d.len() != self.m {
            return Err(Error::Dimension(format!(
                "desired block of length {}, filter expects {}",
                d.len(),
                self.m
            )));
        }
        let y = self.filter_block(v)?;
        let e: Vec<Complex64> = d.iter().zip(&y).map(|(d, y)| d - y).collect();
        let energy: Vec<f64> = self
            .delay_lines
            .iter()
            .map(|u| u.iter().map(|c| c.norm_sqr()).sum())
            .collect();
        let total: f64 = energy.iter().sum();
        for p in 0..self.m {
            for q in 0..self.l {
                let scale = match norm {
                    Normalization::None => 1.0,
                    Normalization::PerChannel => 1.0 / (self.eps + energy[q]),
                    Normalization::Joint => 1.0 / (self.eps + total),
                };
                let g = e[p] * (self.steps[p * self.l + q] * scale);
                if !g.is_finite() {
                    continue;
                }
                let line = &self.delay_lines[q];
                for (a, u) in self.taps[p * self.l + q].iter_mut().zip(line) {
                    *a += g * u.conj();
                }
            }
        }
        Ok(e)
    }

    /// Plain LMS step. Returns `e(n)`.
    pub fn lms_update(&mut self, v: &[Complex64], d: &[Complex64]) -> Result<Vec<Complex64>> {
        self.adapt(v, d, Normalization::None)
    }

    /// Normalized step, per channel unless the filter is configured for joint
    /// normalization. Returns `e(n)`.
    pub fn nlms_update(&mut self, v: &[Complex64], d: &[Complex64]) -> Result<Vec<Complex64>> {
        let norm = match self.normalization {
            Normalization::Joint => Normalization::Joint,
            _ => Normalization::PerChannel,
        };
        self.adapt(v, d, norm)
    }

    /// Step with the configured normalization.
    pub fn update(&mut self, v: &[Complex64], d: &[Complex64]) -> Result<Vec<Complex64>> {
        self.adapt(v, d, self.normalization)
    }
}

/// Snapshot of all tap vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct TapTable {
    pub m: usize,
    pub l: usize,
    pub tap_len: usize,
    /// indexed `p * l + q`
    pub taps: Vec<Vec<Complex64>>,
}

impl TapTable {
    pub fn zeros(m: usize, l: usize, tap_len: usize) -> Self {
        Self {
            m,
            l,
            tap_len,
            taps: vec![vec![Complex64::new(0.0, 0.0); tap_len]; m * l],
        }
    }

    pub fn get(&self, p: usize, q: usize) -> &[Complex64] {
        &self.taps[p * self.l + q]
    }

    /// One row per tap index, one column per `(p, q)` pair labelled with
    /// 1-based indices, `p` major.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let complex = self.taps.iter().flatten().any(|c| c.im != 0.0);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["tap".to_string()];
        let labels: Vec<String> = (0..self.m)
            .flat_map(|p| (0..self.l).map(move |q| format!("a_{{{},{}}}", p + 1, q + 1)))
            .collect();
        header.extend(labels.iter().cloned());
        if complex {
            header.extend(labels.iter().map(|s| format!("{s}_im")));
        }
        w.write_record(&header)?;
        for k in 0..self.tap_len {
            let mut row = vec![k.to_string()];
            row.extend(self.taps.iter().map(|t| format!("{:.6e}", t[k].re)));
            if complex {
                row.extend(self.taps.iter().map(|t| format!("{:.6e}", t[k].im)));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Learning curve and tap snapshots of one adaptation run.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptationTrace {
    /// `||e(n)||^2` per iteration.
    pub squared_error: Vec<f64>,
    /// `|e_p(n)|^2` per iteration and component.
    pub component_errors: Vec<Vec<f64>>,
    /// `(iteration, taps after that many updates)`.
    pub snapshots: Vec<(usize, TapTable)>,
    /// Taps averaged over the last 10% of iterations.
    pub averaged_taps: Option<TapTable>,
}

/// Mean of `squared_error` over `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorBin {
    pub start: usize,
    pub end: usize,
    pub mean: f64,
}

/// Window at the start of a run used as the reference error level.
pub const INITIAL_WINDOW: usize = 50;

impl AdaptationTrace {
    pub fn len(&self) -> usize {
        self.squared_error.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squared_error.is_empty()
    }

    fn mean(xs: &[f64]) -> f64 {
        if xs.is_empty() {
            f64::NAN
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    }

    /// Mean squared error over the first [`INITIAL_WINDOW`] iterations.
    pub fn initial_level(&self) -> f64 {
        Self::mean(&self.squared_error[..self.len().min(INITIAL_WINDOW)])
    }

    /// Mean squared error over the last `fraction` of iterations.
    pub fn tail_level(&self, fraction: f64) -> f64 {
        let n = ((self.len() as f64 * fraction).ceil() as usize).clamp(1, self.len().max(1));
        Self::mean(&self.squared_error[self.len().saturating_sub(n)..])
    }

    /// `10 log10(tail / initial)` over the last 10% of iterations.
    pub fn final_normalized_db(&self) -> f64 {
        10.0 * (self.tail_level(0.1) / self.initial_level()).log10()
    }

    /// Learning curve in dB relative to [`initial_level`](Self::initial_level).
    pub fn normalized_db(&self) -> Vec<f64> {
        let reference = self.initial_level();
        self.squared_error
            .iter()
            .map(|e| 10.0 * (e / reference).log10())
            .collect()
    }

    /// Bins `[start, 2 start), [2 start, 4 start), ...`, the last one clipped.
    pub fn exponential_bins(&self, start: usize) -> Vec<ErrorBin> {
        assert!(start >= 1, "bins must start at iteration >= 1");
        let mut bins = Vec::new();
        let mut lo = start;
        while lo < self.len() {
            let hi = (2 * lo).min(self.len());
            bins.push(ErrorBin {
                start: lo,
                end: hi,
                mean: Self::mean(&self.squared_error[lo..hi]),
            });
            lo = hi;
        }
        bins
    }

    /// First iteration at which the trailing `window`-average of the error is
    /// `db` below the initial level.
    pub fn iterations_to_db(&self, db: f64, window: usize) -> Option<usize> {
        let window = window.max(1);
        let target = self.initial_level() * 10f64.powf(db / 10.0);
        let mut sum = 0.0;
        for n in 0..self.len() {
            sum += self.squared_error[n];
            if n >= window {
                sum -= self.squared_error[n - window];
            }
            if n + 1 >= window && sum / window as f64 <= target {
                return Some(n);
            }
        }
        None
    }

    /// `iteration, squared_error[, e_0^2, ...]`.
    pub fn write_csv<W: Write>(&self, out: W, components: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let m = self.component_errors.first().map_or(0, Vec::len);
        let mut header = vec!["iteration".to_string(), "squared_error".to_string()];
        if components {
            header.extend((0..m).map(|p| format!("e_{p}^2")));
        }
        w.write_record(&header)?;
        for (n, e) in self.squared_error.iter().enumerate() {
            let mut row = vec![n.to_string(), e.to_string()];
            if components {
                row.extend(self.component_errors[n].iter().map(f64::to_string));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `n_iters` configured updates over `v` and `d`, capturing tap tables
/// after each iteration count listed in `snapshots`.
pub fn run_adaptation(
    f: &mut MatrixAdaptiveFilter,
    v: &BlockedSignal,
    d: &BlockedSignal,
    n_iters: usize,
    snapshots: &[usize],
) -> Result<AdaptationTrace> {
    if v.dim() != f.inputs() || d.dim() != f.outputs() {
        return Err(Error::Dimension(format!(
            "signals of dimension {}/{} for a {}x{} filter",
            v.dim(),
            d.dim(),
            f.outputs(),
            f.inputs()
        )));
    }
    let available = v.len().min(d.len());
    if available < n_iters {
        return Err(Error::SequenceExhausted {
            available,
            requested: n_iters,
        });
    }
    if let Some(&k) = snapshots.iter().find(|&&k| k > n_iters) {
        return Err(Error::InvalidArgument(format!(
            "snapshot at iteration {k} after the last iteration {n_iters}"
        )));
    }

    let mut trace = AdaptationTrace {
        squared_error: Vec::with_capacity(n_iters),
        component_errors: Vec::with_capacity(n_iters),
        snapshots: Vec::new(),
        averaged_taps: None,
    };
    let take_snapshot = |k: usize, f: &MatrixAdaptiveFilter, trace: &mut AdaptationTrace| {
        for _ in snapshots.iter().filter(|&&s| s == k) {
            trace.snapshots.push((k, f.tap_table()));
        }
    };
    take_snapshot(0, f, &mut trace);

    let average_from = n_iters - n_iters.div_ceil(10);
    let mut sum = TapTable::zeros(f.outputs(), f.inputs(), f.tap_len());
    for n in 0..n_iters {
        let e = f.update(v.block(n), d.block(n))?;
        let comps: Vec<f64> = e.iter().map(|c| c.norm_sqr()).collect();
        trace.squared_error.push(comps.iter().sum());
        trace.component_errors.push(comps);
        if n >= average_from {
            for (acc, t) in sum.taps.iter_mut().zip(&f.taps) {
                for (a, b) in acc.iter_mut().zip(t) {
                    *a += b;
                }
            }
        }
        take_snapshot(n + 1, f, &mut trace);
    }
    if n_iters > 0 {
        let count = (n_iters - average_from) as f64;
        for t in sum.taps.iter_mut().flatten() {
            *t /= count;
        }
        trace.averaged_taps = Some(sum);
    }
    trace.snapshots.sort_by_key(|(k, _)| *k);
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(MatrixAdaptiveFilter::new(0, 1, 1, 0.1, Normalization::None).is_err());
        assert!(MatrixAdaptiveFilter::new(1, 1, 0, 0.1, Normalization::None).is_err());
        assert!(MatrixAdaptiveFilter::new(1, 1, 1, -0.1, Normalization::None).is_err());
        assert!(MatrixAdaptiveFilter::new(1, 1, 1, f64::NAN, Normalization::None).is_err());
        let mut f = MatrixAdaptiveFilter::new(2, 2, 3, 0.1, Normalization::None).unwrap();
        assert!(f.filter_block(&[c(1.0)]).is_err());
        assert!(f.lms_update(&[c(1.0), c(1.0)], &[c(1.0)]).is_err());
        assert!(f.set_taps(0, 0, &[c(1.0)]).is_err());
        assert!(f.set_step(0, 1, -1.0).is_err());
    }

    #[test]
    fn zero_taps_give_zero_output() {
        let mut f = MatrixAdaptiveFilter::new(2, 3, 4, 0.1, Normalization::None).unwrap();
        let y = f.filter_block(&[c(1.0), c(-2.0), c(5.0)]).unwrap();
        assert_eq!(y, vec![c(0.0); 2]);
    }

    #[test]
    fn identity_pattern_passes_through() {
        let mut f = MatrixAdaptiveFilter::new(3, 3, 1, 0.1, Normalization::None).unwrap();
        for p in 0..3 {
            f.set_taps(p, p, &[c(1.0)]).unwrap();
        }
        let v = [c(1.5), c(-2.0), c(0.25)];
        assert_eq!(f.filter_block(&v).unwrap(), v.to_vec());
    }

    #[test]
    fn convolution_sum() {
        let mut f = MatrixAdaptiveFilter::new(1, 2, 3, 0.1, Normalization::None).unwrap();
        f.set_taps(0, 1, &[c(0.0), c(0.0), c(3.0)]).unwrap();
        f.filter_block(&[c(0.0), c(5.0)]).unwrap();
        f.filter_block(&[c(0.0), c(0.0)]).unwrap();
        let y = f.filter_block(&[c(0.0), c(0.0)]).unwrap();
        assert_eq!(y, vec![c(15.0)]);
    }

    #[test]
    fn lms_one_step() {
        let mut f = MatrixAdaptiveFilter::new(1, 1, 1, 0.5, Normalization::None).unwrap();
        let e = f.lms_update(&[c(2.0)], &[c(4.0)]).unwrap();
        assert_eq!(e, vec![c(4.0)]);
        assert_eq!(f.taps(0, 0), &[c(4.0)]);
    }

    #[test]
    fn lms_fixed_point_and_zero_step() {
        let mut f = MatrixAdaptiveFilter::new(1, 1, 1, 0.5, Normalization::None).unwrap();
        f.set_taps(0, 0, &[c(2.0)]).unwrap();
        let e = f.lms_update(&[c(3.0)], &[c(6.0)]).unwrap();
        assert_eq!(e, vec![c(0.0)]);
        assert_eq!(f.taps(0, 0), &[c(2.0)]);

        let mut g = MatrixAdaptiveFilter::new(2, 2, 3, 0.0, Normalization::None).unwrap();
        for k in 0..20 {
            let x = k as f64;
            g.lms_update(&[c(x), c(-x)], &[c(1.0), c(x * x)]).unwrap();
        }
        assert!(g.tap_table().taps.iter().flatten().all(|t| *t == c(0.0)));
    }

    #[test]
    fn nlms_one_step() {
        let mut f = MatrixAdaptiveFilter::new(1, 1, 1, 0.6, Normalization::PerChannel)
            .unwrap()
            .with_eps(0.0)
            .unwrap();
        f.nlms_update(&[c(2.0)], &[c(4.0)]).unwrap();
        assert!((f.taps(0, 0)[0] - c(1.2)).norm() < 1e-15);
    }

    #[test]
    fn nlms_zero_history_is_guarded() {
        let mut f = MatrixAdaptiveFilter::new(2, 2, 4, 0.6, Normalization::PerChannel).unwrap();
        let e = f
            .nlms_update(&[c(0.0), c(0.0)], &[c(1.0), c(-1.0)])
            .unwrap();
        assert_eq!(e, vec![c(1.0), c(-1.0)]);
        assert!(f
            .tap_table()
            .taps
            .iter()
            .flatten()
            .all(|t| t.is_finite() && *t == c(0.0)));
    }

    #[test]
    fn joint_normalization() {
        let mut f = MatrixAdaptiveFilter::new(1, 2, 1, 1.0, Normalization::Joint)
            .unwrap()
            .with_eps(0.0)
            .unwrap();
        f.nlms_update(&[c(1.0), c(2.0)], &[c(5.0)]).unwrap();
        // e = 5, energy 1 + 4 = 5 -> a = conj(u)
        assert!((f.taps(0, 0)[0] - c(1.0)).norm() < 1e-15);
        assert!((f.taps(0, 1)[0] - c(2.0)).norm() < 1e-15);
    }

    #[test]
    fn complex_update_uses_conjugate_regressor() {
        let mut f = MatrixAdaptiveFilter::new(1, 1, 1, 1.0, Normalization::None).unwrap();
        let j = Complex64::new(0.0, 1.0);
        f.lms_update(&[j], &[c(1.0)]).unwrap();
        assert_eq!(f.taps(0, 0), &[-j]);
        // the updated filter now reproduces the desired sample
        let mut g = f.clone();
        assert_eq!(g.filter_block(&[j]).unwrap(), vec![c(1.0)]);
    }

    #[test]
    fn trace_bookkeeping() {
        let v =
            BlockedSignal::new(1, (0..20).map(|k| vec![c((k as f64).cos())]).collect()).unwrap();
        let d = BlockedSignal::new(
            1,
            (0..20).map(|k| vec![c(0.5 * (k as f64).cos())]).collect(),
        )
        .unwrap();
        let mut f = MatrixAdaptiveFilter::new(1, 1, 2, 0.5, Normalization::PerChannel).unwrap();
        let trace = run_adaptation(&mut f, &v, &d, 20, &[0, 10, 20]).unwrap();
        assert_eq!(trace.len(), 20);
        assert_eq!(trace.component_errors.len(), 20);
        let its: Vec<usize> = trace.snapshots.iter().map(|(k, _)| *k).collect();
        assert_eq!(its, vec![0, 10, 20]);
        assert_eq!(trace.snapshots[2].1, f.tap_table());
        assert!(trace.snapshots[0]
            .1
            .taps
            .iter()
            .flatten()
            .all(|t| *t == c(0.0)));
        assert!(trace.averaged_taps.is_some());

        let mut g = MatrixAdaptiveFilter::new(1, 1, 2, 0.5, Normalization::PerChannel).unwrap();
        assert!(matches!(
            run_adaptation(&mut g, &v, &d, 21, &[]),
            Err(Error::SequenceExhausted {
                available: 20,
                requested: 21
            })
        ));
        assert!(run_adaptation(&mut g, &v, &d, 5, &[6]).is_err());
    }

    #[test]
    fn zero_iterations() {
        let v = BlockedSignal::zeros(2, 0);
        let d = BlockedSignal::zeros(2, 0);
        let mut f = MatrixAdaptiveFilter::new(2, 2, 3, 0.5, Normalization::PerChannel).unwrap();
        let trace = run_adaptation(&mut f, &v, &d, 0, &[0]).unwrap();
        assert!(trace.is_empty());
        assert!(trace.averaged_taps.is_none());
        assert_eq!(trace.snapshots.len(), 1);
    }

    #[test]
    fn exponential_bins_cover_tail() {
        let trace = AdaptationTrace {
            squared_error: (0..300).map(|k| 1.0 / (k + 1) as f64).collect(),
            component_errors: vec![vec![]; 300],
            snapshots: vec![],
            averaged_taps: None,
        };
        let bins = trace.exponential_bins(50);
        assert_eq!(
            bins.iter().map(|b| (b.start, b.end)).collect::<Vec<_>>(),
            vec![(50, 100), (100, 200), (200, 300)]
        );
        assert!(bins.windows(2).all(|w| w[1].mean <= w[0].mean));
        assert!(trace.iterations_to_db(-10.0, 1).is_some());
    }

    #[test]
    fn tap_table_csv_header() {
        let t = TapTable::zeros(2, 2, 3);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            r#"tap,"a_{1,1}","a_{1,2}","a_{2,1}","a_{2,2}""#
        );
        assert_eq!(text.lines().count(), 4);
    }

    // Straight-loop reference for one LMS step, written independently of the
    // filter's internal layout.
    fn reference_lms(
        taps: &[Vec<Vec<Complex64>>],
        history: &[Vec<Complex64>],
        d: &[Complex64],
        mu: f64,
    ) -> Vec<Vec<Vec<Complex64>>> {
        let m = taps.len();
        let l = taps[0].len();
        let mut e = vec![Complex64::new(0.0, 0.0); m];
        for p in 0..m {
            let mut y = Complex64::new(0.0, 0.0);
            for q in 0..l {
                for k in 0..taps[p][q].len() {
                    y += taps[p][q][k] * history[q][k];
                }
            }
            e[p] = d[p] - y;
        }
        let mut out = taps.to_vec();
        for p in 0..m {
            for q in 0..l {
                for k in 0..out[p][q].len() {
                    out[p][q][k] += mu * e[p] * history[q][k].conj();
                }
            }
        }
        out
    }

    fn cplx() -> impl Strategy<Value = Complex64> {
        (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(r, i)| Complex64::new(r, i))
    }

    proptest! {
        #[test]
        #[allow(clippy::needless_range_loop)]
        fn lms_matches_reference(
            m in 1usize..4, l in 1usize..4, tap_len in 1usize..4,
            mu in 0.0f64..0.5, seedvals in prop::collection::vec(cplx(), 200)
        ) {
            let mut it = seedvals.into_iter().cycle();
            let mut f = MatrixAdaptiveFilter::new(m, l, tap_len, mu, Normalization::None).unwrap();
            let mut taps = vec![vec![vec![Complex64::new(0.0, 0.0); tap_len]; l]; m];
            for p in 0..m {
                for q in 0..l {
                    let t: Vec<Complex64> = (0..tap_len).map(|_| it.next().unwrap()).collect();
                    f.set_taps(p, q, &t).unwrap();
                    taps[p][q] = t;
                }
            }
            let mut history = vec![vec![Complex64::new(0.0, 0.0); tap_len]; l];
            for _ in 0..3 {
                let v: Vec<Complex64> = (0..l).map(|_| it.next().unwrap()).collect();
                let d: Vec<Complex64> = (0..m).map(|_| it.next().unwrap()).collect();
                for q in 0..l {
                    history[q].insert(0, v[q]);
                    history[q].truncate(tap_len);
                }
                taps = reference_lms(&taps, &history, &d, mu);
                f.lms_update(&v, &d).unwrap();
            }
            for p in 0..m {
                for q in 0..l {
                    for (a, b) in f.taps(p, q).iter().zip(&taps[p][q]) {
                        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
                    }
                }
            }
        }

        #[test]
        fn nlms_update_is_scale_homogeneous(
            alpha in 0.1f64..100.0, vals in prop::collection::vec(cplx(), 12)
        ) {
            // Scaling v and d by alpha scales e by alpha and leaves the tap
            // change unchanged (eps = 0).
            let run = |s: f64| {
                let mut f = MatrixAdaptiveFilter::new(2, 2, 2, 0.6, Normalization::PerChannel)
                    .unwrap().with_eps(0.0).unwrap();
                let mut es = Vec::new();
                for k in 0..3 {
                    let v = [vals[4 * k] * s, vals[4 * k + 1] * s];
                    let d = [vals[4 * k + 2] * s, vals[4 * k + 3] * s];
                    es.push(f.nlms_update(&v, &d).unwrap());
                }
                (f.tap_table(), es)
            };
            let (t1, e1) = run(1.0);
            let (ta, ea) = run(alpha);
            for (a, b) in t1.taps.iter().flatten().zip(ta.taps.iter().flatten()) {
                prop_assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()));
            }
            for (a, b) in e1.iter().flatten().zip(ea.iter().flatten()) {
                prop_assert!((a * alpha - b).norm() <= 1e-9 * (1.0 + b.norm()));
            }
        }
    }
}
