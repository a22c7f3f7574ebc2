//! Seeded experiments: input generation, analysis, adaptation, the exact
//! Wiener reference, comparison metrics, and result artifacts.
//!
//! Gaussian samples come from `ChaCha8Rng` (rand_chacha 0.9) seeded with
//! `seed_from_u64`, transformed by the ziggurat `StandardNormal` sampler of
//! rand_distr 0.5. The same string is written to `metrics.json`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::adaptive::{
    run_adaptation, AdaptationTrace, ErrorBin, MatrixAdaptiveFilter, Normalization, TapTable,
};
use crate::algebra::LaurentPoly;
use crate::error::{Error, Result};
use crate::spectra::{
    make_desired, run_analysis, unblock, BlockedSignal, FilterBankJson, FilterBankSpec, InputPsd,
};
use crate::wiener::{wiener_solve, WienerSolution};

pub const GENERATOR: &str =
    "rand_chacha 0.9 ChaCha8Rng::seed_from_u64 + rand_distr 0.5 StandardNormal (ziggurat)";

/// Relative tail below which Wiener impulse responses are truncated.
pub const TRUNCATION_TAIL: f64 = 1e-10;
const TRUNCATION_CAP: usize = 100_000;

/// Fraction of the run treated as steady state.
pub const STEADY_STATE_FRACTION: f64 = 0.2;

/// First iteration of the binned learning-curve check.
pub const BIN_START: usize = 50;

fn unit() -> f64 {
    1.0
}

/// Input process. `variance` is the variance of `x(n)` itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputModel {
    White {
        #[serde(default = "unit")]
        variance: f64,
    },
    /// White noise filtered by `G(z) = g[0] + g[1] z^-1 + ...`.
    Shaped {
        g: Vec<f64>,
        #[serde(default = "unit")]
        variance: f64,
    },
}

impl Default for InputModel {
    fn default() -> Self {
        InputModel::White { variance: 1.0 }
    }
}

impl InputModel {
    pub fn variance(&self) -> f64 {
        match self {
            InputModel::White { variance } | InputModel::Shaped { variance, .. } => *variance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.variance();
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "input.variance: {v} is not positive"
            )));
        }
        if let InputModel::Shaped { g, .. } = self {
            if g.iter().all(|c| *c == 0.0) || g.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument(
                    "input.g: shaping filter must be finite and nonzero".into(),
                ));
            }
        }
        Ok(())
    }

    /// Variance of the white driving noise.
    pub fn driving_variance(&self) -> f64 {
        match self {
            InputModel::White { variance } => *variance,
            InputModel::Shaped { g, variance } => variance / g.iter().map(|c| c * c).sum::<f64>(),
        }
    }

    pub fn psd(&self) -> InputPsd {
        match self {
            InputModel::White { variance } => InputPsd::white(*variance),
            InputModel::Shaped { g, .. } => {
                InputPsd::shaped(&LaurentPoly::from_real_z_inv(g), self.driving_variance())
            }
        }
    }
}

/// `n` samples of the model, stationary from the first sample (the shaping
/// filter is primed with its own length of extra noise).
pub fn generate_wss(model: &InputModel, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = model.driving_variance().sqrt();
    match model {
        InputModel::White { .. } => (0..n)
            .map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect(),
        InputModel::Shaped { g, .. } => {
            let prime = g.len() - 1;
            let w: Vec<f64> = (0..n + prime)
                .map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect();
            (0..n)
                .map(|t| {
                    g.iter()
                        .enumerate()
                        .map(|(k, c)| c * w[t + prime - k])
                        .sum()
                })
                .collect()
        }
    }
}

pub fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&r| Complex64::new(r, 0.0)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Lms,
    Nlms,
}

/// One adaptation experiment. JSON schema:
///
/// ```json
/// {
///   "bank": { "M": 2, "d": 0, "filters": [[4, 7, 2], [3, -1, -1.5]] },
///   "input": { "model": "white", "variance": 1.0 },
///   "seed": 1,
///   "algorithm": "nlms",
///   "normalization": "per_channel",
///   "step": 0.6,
///   "tap_len": 11,
///   "n_iters": 2000,
///   "snapshots": [500, 2000],
///   "d": 0
/// }
/// ```
///
/// `input` defaults to unit-variance white noise, `normalization` to
/// `per_channel` (ignored for `lms`), `snapshots` to none beyond the final
/// iteration, and `d` to the bank's own delay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub bank: FilterBankJson,
    #[serde(default)]
    pub input: InputModel,
    pub seed: u64,
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
    pub step: f64,
    pub tap_len: usize,
    pub n_iters: usize,
    #[serde(default)]
    pub snapshots: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        if cfg.n_iters == 0 {
            return Err(Error::InvalidArgument("n_iters: must be >= 1".into()));
        }
        Ok(cfg)
    }

    /// Checks everything except `n_iters >= 1`, which only applies to
    /// configuration files (a zero-iteration run is a valid degenerate case).
    pub fn validate(&self) -> Result<()> {
        self.filter_bank()?;
        self.input.validate()?;
        if !(self.step.is_finite() && self.step >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "step: {} is not a valid step size",
                self.step
            )));
        }
        if self.tap_len == 0 {
            return Err(Error::InvalidArgument("tap_len: must be >= 1".into()));
        }
        if self.algorithm == Algorithm::Lms
            && self.normalization.is_some_and(|n| n != Normalization::None)
        {
            return Err(Error::InvalidArgument(
                "normalization: only meaningful with algorithm \"nlms\"".into(),
            ));
        }
        Ok(())
    }

    pub fn filter_bank(&self) -> Result<FilterBankSpec> {
        let fb = FilterBankSpec::from_json(&self.bank)
            .map_err(|e| Error::InvalidArgument(format!("bank: {e}")))?;
        Ok(match self.d {
            Some(d) => fb.with_delay(d),
            None => fb,
        })
    }

    pub fn normalization_mode(&self) -> Normalization {
        match self.algorithm {
            Algorithm::Lms => Normalization::None,
            Algorithm::Nlms => match self.normalization {
                Some(Normalization::Joint) => Normalization::Joint,
                _ => Normalization::PerChannel,
            },
        }
    }

    /// Snapshot schedule with the final iteration included, sorted and
    /// without duplicates or entries past the end.
    pub fn snapshot_schedule(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .snapshots
            .iter()
            .copied()
            .filter(|&k| k <= self.n_iters)
            .chain([self.n_iters])
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Per-pair difference between adaptive taps and the Wiener impulse response.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairComparison {
    pub p: usize,
    pub q: usize,
    pub max_abs_diff: f64,
    pub distance: f64,
    pub wiener_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TapComparison {
    pub n_terms: usize,
    pub pairs: Vec<PairComparison>,
    pub max_abs_diff: f64,
    /// Euclidean distance over all pairs and terms.
    pub distance: f64,
    pub wiener_norm: f64,
    /// `distance / wiener_norm`.
    pub relative_distance: f64,
}

/// Compares the first `n_terms` coefficients of every tap vector (zero past
/// its length) against the Wiener impulse responses.
#[allow(clippy::needless_range_loop)]
pub fn compare_to_wiener(
    taps: &TapTable,
    ws: &WienerSolution,
    n_terms: usize,
) -> Result<TapComparison> {
    if (taps.m, taps.l) != (ws.rows(), ws.cols()) {
        return Err(Error::Dimension(format!(
            "{}x{} tap table against a {}x{} Wiener filter",
            taps.m,
            taps.l,
            ws.rows(),
            ws.cols()
        )));
    }
    let h = ws.impulse_responses(n_terms)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut pairs = Vec::new();
    let (mut dist2, mut norm2, mut max_abs) = (0.0, 0.0, 0.0f64);
    for p in 0..taps.m {
        for q in 0..taps.l {
            let a = taps.get(p, q);
            let (mut d2, mut n2, mut mx) = (0.0, 0.0, 0.0f64);
            for (k, w) in h[p][q].iter().enumerate() {
                let diff = (a.get(k).copied().unwrap_or(zero) - w).norm();
                d2 += diff * diff;
                n2 += w.norm_sqr();
                mx = mx.max(diff);
            }
            dist2 += d2;
            norm2 += n2;
            max_abs = max_abs.max(mx);
            pairs.push(PairComparison {
                p,
                q,
                max_abs_diff: mx,
                distance: d2.sqrt(),
                wiener_norm: n2.sqrt(),
            });
        }
    }
    let distance = dist2.sqrt();
    let wiener_norm = norm2.sqrt();
    Ok(TapComparison {
        n_terms,
        pairs,
        max_abs_diff: max_abs,
        distance,
        wiener_norm,
        relative_distance: distance / wiener_norm,
    })
}

/// Impulse responses of `ws` as a tap table of length `n_terms`.
pub fn wiener_tap_table(ws: &WienerSolution, n_terms: usize) -> Result<TapTable> {
    let h = ws.impulse_responses(n_terms)?;
    Ok(TapTable {
        m: ws.rows(),
        l: ws.cols(),
        tap_len: n_terms,
        taps: h.into_iter().flatten().collect(),
    })
}

/// Runs `v` through the fixed FIR matrix `taps`.
pub fn synthesize(taps: &TapTable, v: &BlockedSignal) -> Result<BlockedSignal> {
    let mut f = MatrixAdaptiveFilter::new(taps.m, taps.l, taps.tap_len, 0.0, Normalization::None)?;
    for p in 0..taps.m {
        for q in 0..taps.l {
            f.set_taps(p, q, taps.get(p, q))?;
        }
    }
    let mut y = BlockedSignal::zeros(taps.m, 0);
    for block in v.blocks() {
        y.push(f.filter_block(block)?)?;
    }
    Ok(y)
}

/// `sum |xhat(t) - x(t - d)|^2 / sum |x(t - d)|^2` over the last
/// [`STEADY_STATE_FRACTION`] of samples.
pub fn reconstruction_mse(x: &[Complex64], xhat: &[Complex64], d: usize) -> f64 {
    let n = x.len().min(xhat.len());
    let start = (n - (n as f64 * STEADY_STATE_FRACTION).ceil() as usize).max(d);
    let (mut err, mut pow) = (0.0, 0.0);
    for t in start..n {
        let r = x[t - d];
        err += (xhat[t] - r).norm_sqr();
        pow += r.norm_sqr();
    }
    err / pow
}

/// Analysis followed by the truncated Wiener synthesis filter; returns the
/// relative steady-state reconstruction MSE of `x(n - d)` over the samples
/// the synthesis output covers.
pub fn wiener_reconstruction(fb: &FilterBankSpec, taps: &TapTable, x: &[Complex64]) -> Result<f64> {
    let v = run_analysis(fb, x);
    let y = synthesize(taps, &v)?;
    let xhat = unblock(&y, fb.delay(), x.len());
    // times after M(N - 1) - d are never produced by the synthesis output
    let covered = (fb.decimation() * v.len() + 1).saturating_sub(fb.decimation() + fb.delay());
    Ok(reconstruction_mse(
        &x[..covered],
        &xhat[..covered],
        fb.delay(),
    ))
}

/// Comparison figures written to `metrics.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub generator: String,
    pub seed: u64,
    pub n_iters: usize,
    pub wiener_stable: bool,
    pub wiener_max_pole_magnitude: f64,
    pub wiener_identity_residual: f64,
    /// Length of the truncated Wiener impulse responses.
    pub wiener_truncation: usize,
    /// Final taps against the Wiener impulse responses (`None` if unstable).
    pub final_taps: Option<TapComparison>,
    /// Taps averaged over the last 10% of iterations.
    pub averaged_taps: Option<TapComparison>,
    /// Mean `||e(n)||^2` over the steady-state window.
    pub steady_state_mse: f64,
    /// Steady-state `sum ||e||^2 / sum ||d||^2` of the adaptive filter.
    pub adaptive_relative_mse: f64,
    /// Relative reconstruction MSE of the truncated Wiener filter on the
    /// same input.
    pub wiener_reconstruction_mse: Option<f64>,
    pub initial_mse: f64,
    pub final_normalized_db: f64,
    pub binned_mse: Vec<ErrorBin>,
    pub bins_non_increasing: bool,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub trace: AdaptationTrace,
    pub final_taps: TapTable,
    pub wiener: WienerSolution,
    /// Truncated impulse responses of the Wiener filter, `None` if unstable.
    pub wiener_taps: Option<TapTable>,
    pub metrics: Metrics,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let fb = cfg.filter_bank()?;
    let m = fb.decimation();
    let ws = wiener_solve(&fb, &cfg.input.psd())?;

    let x = to_complex(&generate_wss(&cfg.input, m * cfg.n_iters, cfg.seed));
    let v = run_analysis(&fb, &x);
    let d = make_desired(&x, m, fb.delay());

    let mut f = MatrixAdaptiveFilter::new(
        m,
        fb.channels(),
        cfg.tap_len,
        cfg.step,
        cfg.normalization_mode(),
    )?;
    let trace = run_adaptation(&mut f, &v, &d, cfg.n_iters, &cfg.snapshot_schedule())?;
    let final_taps = f.tap_table();

    let truncation = ws
        .truncation_length(TRUNCATION_TAIL, TRUNCATION_CAP)
        .max(cfg.tap_len);
    let wiener_taps = if ws.stable {
        Some(wiener_tap_table(&ws, truncation)?)
    } else {
        None
    };
    let (final_cmp, avg_cmp, recon) = match &wiener_taps {
        Some(wt) => {
            let fc = compare_to_wiener(&final_taps, &ws, truncation)?;
            let ac = trace
                .averaged_taps
                .as_ref()
                .map(|t| compare_to_wiener(t, &ws, truncation))
                .transpose()?;
            let r = if x.is_empty() {
                None
            } else {
                Some(wiener_reconstruction(&fb, wt, &x)?)
            };
            (Some(fc), ac, r)
        }
        None => (None, None, None),
    };

    let n = trace.len();
    let ss_start = n - (n as f64 * STEADY_STATE_FRACTION).ceil() as usize;
    let ss = &trace.squared_error[ss_start..];
    let steady_state_mse = if ss.is_empty() {
        f64::NAN
    } else {
        ss.iter().sum::<f64>() / ss.len() as f64
    };
    let desired_power: f64 = (ss_start..n)
        .map(|k| d.block(k).iter().map(|c| c.norm_sqr()).sum::<f64>())
        .sum();
    let bins = trace.exponential_bins(BIN_START);
    let metrics = Metrics {
        generator: GENERATOR.to_string(),
        seed: cfg.seed,
        n_iters: cfg.n_iters,
        wiener_stable: ws.stable,
        wiener_max_pole_magnitude: ws.max_pole_magnitude(),
        wiener_identity_residual: ws.identity_residual,
        wiener_truncation: truncation,
        final_taps: final_cmp,
        averaged_taps: avg_cmp,
        steady_state_mse,
        adaptive_relative_mse: ss.iter().sum::<f64>() / desired_power,
        wiener_reconstruction_mse: recon,
        initial_mse: trace.initial_level(),
        final_normalized_db: trace.final_normalized_db(),
        bins_non_increasing: bins.windows(2).all(|w| w[1].mean <= w[0].mean),
        binned_mse: bins,
    };
    Ok(ExperimentResult {
        config: cfg.clone(),
        trace,
        final_taps,
        wiener: ws,
        wiener_taps,
        metrics,
    })
}

impl ExperimentResult {
    /// Writes `trace.csv`, `taps_iter<k>.csv` per snapshot, `wiener.json`,
    /// `wiener_taps.csv` (stable solutions only), `metrics.json` and
    /// `config.json` into `dir`, creating it if needed.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let create = |name: &str| -> Result<BufWriter<File>> {
            Ok(BufWriter::new(File::create(dir.join(name))?))
        };
        self.trace.write_csv(create("trace.csv")?, true)?;
        for (k, t) in &self.trace.snapshots {
            t.write_csv(create(&format!("taps_iter{k}.csv"))?)?;
        }
        self.wiener.write_json(create("wiener.json")?)?;
        if let Some(wt) = &self.wiener_taps {
            wt.write_csv(create("wiener_taps.csv")?)?;
        }
        serde_json::to_writer_pretty(create("metrics.json")?, &self.metrics)?;
        serde_json::to_writer_pretty(create("config.json")?, &self.config)?;
        Ok(())
    }
}
