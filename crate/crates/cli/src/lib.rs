//! Subcommands of the `ufb` binary.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error,
//! 3 singular analysis bank, 4 property failure.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use ufb_core::harness::{run_experiment, ExperimentConfig, ExperimentResult};
use ufb_core::presets::{Preset, DEFAULT_SEED};
use ufb_core::spectra::FilterBankSpec;
use ufb_core::verify::{run_all, VerifyOptions};
use ufb_core::wiener::{reconstruction_check, wiener_solve, FaultInjection, WienerSolution};
use ufb_core::InputPsd;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("singular filter bank: {0}")]
    Singular(String),
    #[error("{0} failing properties")]
    Property(usize),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Singular(_) => 3,
            CliError::Property(_) => 4,
        }
    }
}

impl From<ufb_core::Error> for CliError {
    fn from(e: ufb_core::Error) -> Self {
        match e {
            ufb_core::Error::SingularBank { .. } => CliError::Singular(e.to_string()),
            ufb_core::Error::InvalidArgument(_)
            | ufb_core::Error::Json(_)
            | ufb_core::Error::Parse(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "ufb",
    version,
    about = "Matrix Wiener and adaptive synthesis filters for uniform filter banks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the Wiener synthesis filter of a filter bank (white input).
    Wiener(WienerArgs),
    /// Run an adaptation experiment from a config file.
    Adapt(AdaptArgs),
    /// Run the randomized property suites.
    Verify(VerifyArgs),
    /// Reproduce a built-in experiment.
    Repro(ReproArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory, created if absent.
    #[arg(long)]
    pub out: PathBuf,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct WienerArgs {
    /// Filter bank JSON: {"M": int, "d": int, "filters": [[h0, h1, ...], ...]}.
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RunOverrides {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of adaptation iterations (blocks).
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AdaptArgs {
    /// Experiment config JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub overrides: RunOverrides,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    /// exp1 or exp2.
    pub preset: String,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub overrides: RunOverrides,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Reduced case counts.
    #[arg(long)]
    pub quick: bool,
    /// Corrupt the modulation sum (test-only).
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Wiener(a) => cmd_wiener(&a).map(|_| ()),
        Command::Adapt(a) => cmd_adapt(&a).map(|_| ()),
        Command::Verify(a) => cmd_verify(&a),
        Command::Repro(a) => cmd_repro(&a).map(|_| ()),
    }
}

fn read_config(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn config_error(path: &Path, e: ufb_core::Error) -> CliError {
    match e {
        ufb_core::Error::Json(_)
        | ufb_core::Error::InvalidArgument(_)
        | ufb_core::Error::Parse(_) => CliError::Config(format!("{}: {e}", path.display())),
        other => other.into(),
    }
}

/// Creates `out`, refusing a non-empty existing directory unless forced.
fn prepare_output(o: &OutputArgs) -> CliResult<()> {
    if o.out.exists() {
        if !o.out.is_dir() {
            return Err(CliError::Config(format!(
                "{} exists and is not a directory",
                o.out.display()
            )));
        }
        let non_empty = fs::read_dir(&o.out)
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .next()
            .is_some();
        if non_empty && !o.force {
            return Err(CliError::Config(format!(
                "{} is not empty; pass --force to overwrite",
                o.out.display()
            )));
        }
    }
    fs::create_dir_all(&o.out).map_err(|e| CliError::Runtime(format!("{}: {e}", o.out.display())))
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

pub fn cmd_wiener(a: &WienerArgs) -> CliResult<WienerSolution> {
    let text = read_config(&a.config)?;
    let fb = FilterBankSpec::from_json_str(&text).map_err(|e| config_error(&a.config, e))?;
    prepare_output(&a.output)?;
    let ws = wiener_solve(&fb, &InputPsd::white(1.0))?;
    ws.write_json(BufWriter::new(
        File::create(a.output.out.join("wiener.json")).map_err(io_err)?,
    ))?;

    println!("A(z), {}x{}, d = {}:", ws.rows(), ws.cols(), fb.delay());
    for p in 0..ws.rows() {
        for q in 0..ws.cols() {
            println!("  A[{p}][{q}] = {}", ws.a.get(p, q).pretty());
        }
    }
    let poles: Vec<String> = ws.poles.iter().map(|p| format!("{:.6}", p)).collect();
    println!(
        "{} (max |pole| {:.6}; poles [{}])",
        if ws.stable { "stable" } else { "unstable" },
        ws.max_pole_magnitude(),
        poles.join(", ")
    );
    if fb.is_maximally_decimated() {
        let rep = reconstruction_check(&ws, &fb)?;
        rep.write_csv(BufWriter::new(
            File::create(a.output.out.join("residual.csv")).map_err(io_err)?,
        ))?;
        println!(
            "reconstruction residual on the unit circle: {:.3e}",
            rep.max_residual
        );
    }
    Ok(ws)
}

fn apply_overrides(cfg: &mut ExperimentConfig, o: &RunOverrides) {
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(n) = o.iters {
        cfg.n_iters = n;
    }
    if let Some(mu) = o.step {
        cfg.step = mu;
    }
}

fn run_and_write(cfg: &ExperimentConfig, out: &OutputArgs) -> CliResult<ExperimentResult> {
    cfg.validate()?;
    prepare_output(out)?;
    let start = Instant::now();
    eprintln!("running {} iterations (seed {})", cfg.n_iters, cfg.seed);
    let r = run_experiment(cfg)?;
    r.write_dir(&out.out)?;
    let m = &r.metrics;
    println!(
        "iterations: {} in {:.2}s",
        m.n_iters,
        start.elapsed().as_secs_f64()
    );
    println!(
        "Wiener filter: {} (max |pole| {:.6})",
        if m.wiener_stable {
            "stable"
        } else {
            "unstable"
        },
        m.wiener_max_pole_magnitude
    );
    println!("final normalized error: {:.1} dB", m.final_normalized_db);
    println!("steady-state MSE: {:.3e}", m.steady_state_mse);
    if let Some(c) = &m.final_taps {
        println!(
            "tap distance to Wiener: {:.3e} relative, max |diff| {:.3e}",
            c.relative_distance, c.max_abs_diff
        );
    }
    if let Some(r) = m.wiener_reconstruction_mse {
        println!("Wiener reconstruction MSE: {r:.3e}");
    }
    println!("artifacts in {}", out.out.display());
    Ok(r)
}

pub fn cmd_adapt(a: &AdaptArgs) -> CliResult<ExperimentResult> {
    let text = read_config(&a.config)?;
    let mut cfg = ExperimentConfig::from_json_str(&text).map_err(|e| config_error(&a.config, e))?;
    apply_overrides(&mut cfg, &a.overrides);
    run_and_write(&cfg, &a.output)
}

pub fn cmd_repro(a: &ReproArgs) -> CliResult<ExperimentResult> {
    let preset = Preset::from_name(&a.preset).ok_or_else(|| {
        CliError::Config(format!(
            "unknown preset {:?} (expected exp1 or exp2)",
            a.preset
        ))
    })?;
    let mut cfg = preset.config(DEFAULT_SEED);
    apply_overrides(&mut cfg, &a.overrides);
    let r = run_and_write(&cfg, &a.output)?;
    let t = &r.final_taps;
    println!("taps at iteration {}:", cfg.n_iters);
    let header: Vec<String> = (0..t.m)
        .flat_map(|p| {
            (0..t.l).map(move |q| format!("{:>11}", format!("a_{{{},{}}}", p + 1, q + 1)))
        })
        .collect();
    println!("{}", header.join(" "));
    for k in 0..t.tap_len {
        let row: Vec<String> = t
            .taps
            .iter()
            .map(|v| format!("{:>11.3e}", v[k].re))
            .collect();
        println!("{}", row.join(" "));
    }
    Ok(r)
}

pub fn cmd_verify(a: &VerifyArgs) -> CliResult<()> {
    let opts = VerifyOptions {
        seed: a.seed.unwrap_or(VerifyOptions::default().seed),
        quick: a.quick,
        fault: if a.inject_fault {
            FaultInjection::ConjugateRowTwiddle
        } else {
            FaultInjection::None
        },
    };
    let outcomes = run_all(&opts);
    for o in &outcomes {
        println!("{o}");
    }
    match outcomes.iter().filter(|o| !o.passed()).count() {
        0 => Ok(()),
        n => Err(CliError::Property(n)),
    }
}
