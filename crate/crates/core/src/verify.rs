//! Randomized property suites over random filter banks and input spectra.
//!
//! Each suite draws its cases from its own `ChaCha8Rng`, seeded from the
//! user seed and a per-suite constant, and reports a [`PropertyOutcome`].

use std::f64::consts::TAU;
use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{LaurentPoly, RATIONAL_EQ_TOL};
use crate::error::{Error, Result};
use crate::spectra::{FilterBankSpec, InputPsd};
use crate::wiener::{
    closed_form_eval, closed_form_eval_branch, combinations, reconstruction_check_with,
    submatrix_det_bruteforce, theorem1_det, wiener_solve, FaultInjection,
};

pub const THEOREM1_TOL: f64 = 1e-8;
pub const BRANCH_TOL: f64 = 1e-9;
pub const CONSISTENCY_TOL: f64 = 1e-8;
pub const IDENTITY_TOL: f64 = 1e-9;
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
/// Cross-multiplication residual above which two solutions count as
/// different.
pub const DEPENDENCE_GAP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub quick: bool,
    pub fault: FaultInjection,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0x0b5e_55ed,
            quick: false,
            fault: FaultInjection::None,
        }
    }
}

impl VerifyOptions {
    fn cases(&self, full: usize, quick: usize) -> usize {
        if self.quick {
            quick
        } else {
            full
        }
    }

    fn rng(&self, suite: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ suite.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub checks: usize,
    pub failures: usize,
    /// Largest normalized error seen (for dependence checks: the largest
    /// difference found).
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
    pub elapsed: Duration,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }

    fn note(mut self, note: String) -> Self {
        self.detail = if self.detail.is_empty() {
            note
        } else {
            format!("{}; {note}", self.detail)
        };
        self
    }

    fn with_rejections(self, rejected: usize) -> Self {
        if rejected == 0 {
            self
        } else {
            self.note(format!("{rejected} singular banks redrawn"))
        }
    }
}

impl fmt::Display for PropertyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} cases, {} checks, {} failures, worst {:.3e} (tol {:.1e}), {:.2}s",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.checks,
            self.failures,
            self.worst,
            self.tolerance,
            self.elapsed.as_secs_f64()
        )?;
        if !self.detail.is_empty() {
            write!(f, " [{}]", self.detail)?;
        }
        Ok(())
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    start: Instant,
    cases: usize,
    checks: usize,
    failures: usize,
    worst: f64,
    notes: Vec<String>,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            start: Instant::now(),
            cases: 0,
            checks: 0,
            failures: 0,
            worst: 0.0,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, err: f64, context: impl FnOnce() -> String) {
        self.checks += 1;
        if err.is_nan() || err > self.tolerance {
            self.failures += 1;
            if self.notes.len() < 3 {
                self.notes.push(format!("{} (err {err:.3e})", context()));
            }
        }
        if !err.is_nan() {
            self.worst = self.worst.max(err);
        }
    }

    fn fail(&mut self, why: String) {
        self.checks += 1;
        self.failures += 1;
        if self.notes.len() < 3 {
            self.notes.push(why);
        }
    }

    fn finish(self) -> PropertyOutcome {
        PropertyOutcome {
            name: self.name,
            cases: self.cases,
            checks: self.checks,
            failures: self.failures,
            worst: self.worst,
            tolerance: self.tolerance,
            detail: self.notes.join("; "),
            elapsed: self.start.elapsed(),
        }
    }
}

/// Real FIR taps of length `1..=max_order + 1` with coefficients in
/// `[-1, 1)` and a nonzero leading tap.
pub fn random_taps<R: Rng>(rng: &mut R, max_order: usize) -> Vec<f64> {
    let len = rng.random_range(1..=max_order + 1);
    let mut t: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
    if t[0].abs() < 0.05 {
        t[0] = 0.5;
    }
    t
}

pub fn random_bank<R: Rng>(
    rng: &mut R,
    m: usize,
    l: usize,
    max_order: usize,
    d: usize,
) -> FilterBankSpec {
    let taps: Vec<Vec<f64>> = (0..l).map(|_| random_taps(rng, max_order)).collect();
    FilterBankSpec::from_taps(m, &taps, d).expect("random bank is causal")
}

/// Draws banks until one has an invertible `S_vv` for white input. Returns
/// the bank and the number of singular draws rejected.
pub fn random_invertible_bank<R: Rng>(
    rng: &mut R,
    m: usize,
    l: usize,
    max_order: usize,
    d: usize,
) -> (FilterBankSpec, usize) {
    let mut rejected = 0;
    loop {
        let fb = random_bank(rng, m, l, max_order, d);
        match wiener_solve(&fb, &InputPsd::white(1.0)) {
            Err(Error::SingularBank { .. }) if rejected < 1000 => rejected += 1,
            _ => return (fb, rejected),
        }
    }
}

/// `var G G~` for random `G` of order `<= max_order`.
pub fn random_psd<R: Rng>(rng: &mut R, max_order: usize) -> InputPsd {
    let g = LaurentPoly::from_real_z_inv(&random_taps(rng, max_order));
    InputPsd::shaped(&g, rng.random_range(0.5..2.0))
}

fn unit_point<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..TAU))
}

fn subset<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let all = combinations(n, k);
    all[rng.random_range(0..all.len())].clone()
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

/// The modulation-sum expression for random minors of `S_vv` against the
/// polynomial determinant of the same submatrix.
pub fn theorem1_suite(opts: &VerifyOptions) -> PropertyOutcome {
    let mut t = Tally::new("theorem1_agreement", THEOREM1_TOL);
    let mut rng = opts.rng(1);
    let points = 32;
    for _ in 0..opts.cases(500, 60) {
        let m = rng.random_range(2..=4);
        let l = rng.random_range(1..=4);
        let q = rng.random_range(1..=l.min(m));
        let fb = random_bank(&mut rng, m, l, 4, 0);
        let sx = if rng.random_bool(0.25) {
            InputPsd::white(rng.random_range(0.5..2.0))
        } else {
            random_psd(&mut rng, 3)
        };
        let rows = subset(&mut rng, l, q);
        let cols = subset(&mut rng, l, q);
        t.cases += 1;
        let (fast, brute) = match (
            theorem1_det(&rows, &cols, &fb, &sx),
            submatrix_det_bruteforce(&rows, &cols, &fb, &sx),
        ) {
            (Ok(a), Ok(b)) => (a.with_fault(opts.fault), b),
            (Err(e), _) | (_, Err(e)) => {
                t.fail(format!("M={m} L={l} Q={q}: {e}"));
                continue;
            }
        };
        for _ in 0..points {
            let z = unit_point(&mut rng);
            let err = rel(fast.eval(z), brute.eval(z));
            t.check(err, || {
                format!("M={m} L={l} Q={q} rows={rows:?} cols={cols:?} z={z:.4}")
            });
        }
    }
    t.finish()
}

/// Both expressions in `z^(1/M)` must not depend on which root is used.
pub fn branch_independence_suite(opts: &VerifyOptions) -> PropertyOutcome {
    let mut t = Tally::new("branch_independence", BRANCH_TOL);
    let mut rng = opts.rng(2);
    let mut skipped = 0;
    let mut rejected = 0;
    for _ in 0..opts.cases(120, 20) {
        let m = rng.random_range(2..=4);
        let d = rng.random_range(0..=2);
        let (fb, r) = random_invertible_bank(&mut rng, m, m, 4, d);
        rejected += r;
        let sx = random_psd(&mut rng, 3);
        let q = rng.random_range(1..=m);
        let rows = subset(&mut rng, m, q);
        let cols = subset(&mut rng, m, q);
        let (i, j) = (rng.random_range(0..m), rng.random_range(0..m));
        t.cases += 1;
        let minor = match theorem1_det(&rows, &cols, &fb, &sx) {
            Ok(x) => x.with_fault(opts.fault),
            Err(e) => {
                t.fail(e.to_string());
                continue;
            }
        };
        for _ in 0..8 {
            let z = unit_point(&mut rng);
            let base = minor.eval_branch(z, 0);
            let cf0 = closed_form_eval_branch(&fb, i, j, fb.delay(), z, 0);
            for b in 1..m {
                t.check(rel(minor.eval_branch(z, b), base), || {
                    format!("minor M={m} branch {b}")
                });
                match (
                    cf0.as_ref(),
                    closed_form_eval_branch(&fb, i, j, fb.delay(), z, b).as_ref(),
                ) {
                    (Ok(a), Ok(c)) => t.check(rel(*c, *a), || {
                        format!("closed form M={m} ({i},{j}) branch {b}")
                    }),
                    (Err(Error::SingularEvaluation { .. }), _)
                    | (_, Err(Error::SingularEvaluation { .. })) => skipped += 1,
                    (Err(e), _) | (_, Err(e)) => t.fail(e.to_string()),
                }
            }
        }
    }
    let out = t.finish().with_rejections(rejected);
    if skipped > 0 {
        out.note(format!("{skipped} singular evaluations skipped"))
    } else {
        out
    }
}

/// The modulation-determinant closed form against the solved Wiener
/// entries on the unit circle (maximally decimated banks).
pub fn closed_form_consistency_suite(opts: &VerifyOptions) -> PropertyOutcome {
    let mut t = Tally::new("closed_form_consistency", CONSISTENCY_TOL);
    let mut rejected = 0;
    let mut rng = opts.rng(3);
    for _ in 0..opts.cases(60, 12) {
        let m = rng.random_range(1..=4);
        let d = rng.random_range(0..=2);
        let (fb, r) = random_invertible_bank(&mut rng, m, m, 4, d);
        rejected += r;
        t.cases += 1;
        let ws = match wiener_solve(&fb, &InputPsd::white(1.0)) {
            Ok(ws) => ws,
            Err(e) => {
                t.fail(format!("M={m}: {e}"));
                continue;
            }
        };
        for _ in 0..16 {
            let z = unit_point(&mut rng);
            let a = ws.a.eval(z);
            for i in 0..m {
                for j in 0..m {
                    match closed_form_eval(&fb, i, j, fb.delay(), z) {
                        Ok(v) => t.check(rel(v, a[(i, j)]), || format!("M={m} ({i},{j}) z={z:.4}")),
                        Err(Error::SingularEvaluation { .. }) => {}
                        Err(e) => t.fail(e.to_string()),
                    }
                }
            }
        }
    }
    t.finish().with_rejections(rejected)
}

/// Maximally decimated banks: the Wiener filter for white input equals the
/// one for a random shaped input.
pub fn psd_independence_suite(opts: &VerifyOptions) -> PropertyOutcome {
    let mut t = Tally::new("psd_independence", RATIONAL_EQ_TOL);
    let mut rejected = 0;
    let mut rng = opts.rng(4);
    for _ in 0..opts.cases(60, 12) {
        let m = rng.random_range(1..=4);
        let d = rng.random_range(0..=2);
        let (fb, r) = random_invertible_bank(&mut rng, m, m, 4, d);
        rejected += r;
        let sx = random_psd(&mut rng, 3);
        t.cases += 1;
        match (
            wiener_solve(&fb, &InputPsd::white(1.0)),
            wiener_solve(&fb, &sx),
        ) {
            (Ok(a), Ok(b)) => match a.a.cross_residual(&b.a) {
                Ok(r) => t.check(r, || format!("M={m}")),
                Err(e) => t.fail(e.to_string()),
            },
            (Err(e), _) | (_, Err(e)) => t.fail(format!("M={m}: {e}")),
        }
    }
    t.finish().with_rejections(rejected)
}

/// Searches random banks with `L` channels and decimation `M` for an
/// instance whose white-input and shaped-input Wiener filters differ.
/// Passes when one is found; `worst` is the largest difference seen.
pub fn psd_dependence_search(
    opts: &VerifyOptions,
    m: usize,
    l: usize,
    attempts: usize,
) -> PropertyOutcome {
    let name = if l < m {
        "psd_dependence_fewer_channels"
    } else {
        "psd_dependence_oversampled"
    };
    let mut t = Tally::new(name, DEPENDENCE_GAP);
    let mut rng = opts.rng(5 + (m * 16 + l) as u64);
    let mut singular = 0;
    let mut found = None;
    for _ in 0..attempts {
        let fb = random_bank(&mut rng, m, l, 4, 0);
        let sx = random_psd(&mut rng, 3);
        t.cases += 1;
        match (
            wiener_solve(&fb, &InputPsd::white(1.0)),
            wiener_solve(&fb, &sx),
        ) {
            (Ok(a), Ok(b)) => {
                let r = a.a.cross_residual(&b.a).unwrap_or(f64::NAN);
                t.checks += 1;
                t.worst = t.worst.max(r);
                if r > DEPENDENCE_GAP {
                    found = Some(r);
                    break;
                }
            }
            (Err(Error::SingularBank { .. }), _) | (_, Err(Error::SingularBank { .. })) => {
                singular += 1
            }
            (Err(e), _) | (_, Err(e)) => t.fail(e.to_string()),
        }
    }
    let mut out = t.finish();
    let mut notes = vec![format!("M={m} L={l}")];
    match found {
        Some(r) => notes.push(format!("solutions differ, residual {r:.3e}")),
        None => {
            out.failures += 1;
            notes.push(format!("no differing instance in {} attempts", out.cases));
        }
    }
    if singular > 0 {
        notes.push(format!("{singular} singular S_vv"));
    }
    if !out.detail.is_empty() {
        notes.push(out.detail.clone());
    }
    out.detail = notes.join(", ");
    out
}

/// `A S_vv = S_dv` for every solved instance, and transform-domain
/// reconstruction for maximally decimated banks.
pub fn wiener_identity_suite(opts: &VerifyOptions) -> PropertyOutcome {
    let mut t = Tally::new("wiener_identity", IDENTITY_TOL);
    let mut rejected = 0;
    let mut rng = opts.rng(6);
    for _ in 0..opts.cases(60, 12) {
        let m = rng.random_range(1..=4);
        let l = rng.random_range(1..=m);
        let d = rng.random_range(0..=2);
        let (fb, r) = random_invertible_bank(&mut rng, m, l, 4, d);
        rejected += r;
        let sx = random_psd(&mut rng, 3);
        t.cases += 1;
        match wiener_solve(&fb, &sx) {
            Ok(ws) => {
                t.check(ws.identity_residual, || format!("M={m} L={l} identity"));
                if l == m {
                    match reconstruction_check_with(&ws, &fb, &sx) {
                        // reported against the looser reconstruction tolerance
                        Ok(rep) => t
                            .check(rep.max_residual * IDENTITY_TOL / RECONSTRUCTION_TOL, || {
                                format!("M={m} reconstruction residual {:.3e}", rep.max_residual)
                            }),
                        Err(e) => t.fail(e.to_string()),
                    }
                }
            }
            Err(e) => t.fail(format!("M={m} L={l}: {e}")),
        }
    }
    t.finish().with_rejections(rejected)
}

/// Every suite run by `verify`.
pub fn run_all(opts: &VerifyOptions) -> Vec<PropertyOutcome> {
    vec![
        theorem1_suite(opts),
        branch_independence_suite(opts),
        closed_form_consistency_suite(opts),
        psd_independence_suite(opts),
        psd_dependence_search(opts, 3, 2, 20),
        wiener_identity_suite(opts),
    ]
}

/// Convenience for callers that want a single verdict.
pub fn all_passed(outcomes: &[PropertyOutcome]) -> Result<()> {
    match outcomes.iter().find(|o| !o.passed()) {
        None => Ok(()),
        Some(o) => Err(Error::InvalidArgument(format!(
            "property {} failed",
            o.name
        ))),
    }
}
