//! Command-line front end: JSON config ingestion, the estimate / oracle /
//! bench subcommands, result persistence with a manifest per run.
//!
//! Exit codes: 0 success, 1 config or dimension error, 2 estimate completed
//! but did not converge (results are still written).

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use num_complex::Complex64 as c64;
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bench::{
    default_sweep_plant, run_convergence_study, run_noise_study, run_sweep, write_convergence_csv,
    write_noise_csv, write_sweep_csv, write_trace_csv, BenchCampaign,
};
use crate::blocks::BlockStructure;
use crate::datadriven::{estimate_mu, EstimateConfig, SimulatedOracle};
use crate::error::{MuError, Result};
use crate::lti::{random_stable, StateSpaceModel};
use crate::oracle::{bounds_for_matrix, sigma_max};
use crate::power::derive_seed;

#[derive(Parser, Debug)]
#[command(
    name = "mu-probe",
    version,
    about = "Structured-singular-value lower bounds from time-domain experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Data-driven estimation run: per-bin CSV + summary JSON.
    Estimate(CommonArgs),
    /// Analytic bounds for a static matrix or a plant over a grid.
    Oracle(CommonArgs),
    /// Benchmark campaigns: structure sweep, convergence study, noise study.
    Bench(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Estimate(a) | Command::Oracle(a) | Command::Bench(a) => a,
        }
    }
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the number of frequency bins.
    #[arg(long = "n-freq")]
    pub n_freq: Option<usize>,
    /// Override the convergence tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Override the measurement-noise variance.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Override the repetition count (bench campaigns).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Suppress the human-readable summary on stdout.
    #[arg(long)]
    pub quiet: bool,
}

/// Plant given either inline as state-space matrices or as a seeded
/// generator of a random stable plant.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PlantSpec {
    Model(StateSpaceModel),
    Generator(GeneratorSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n: usize,
    #[serde(default)]
    pub n_x: Option<usize>,
    #[serde(default = "default_pole_radius")]
    pub pole_radius_max: f64,
    pub seed: u64,
}

fn default_pole_radius() -> f64 {
    0.85
}

impl PlantSpec {
    pub fn build(&self) -> Result<StateSpaceModel> {
        match self {
            PlantSpec::Model(m) => Ok(m.clone()),
            PlantSpec::Generator(g) => {
                random_stable(g.n, g.n_x.unwrap_or(2 * g.n), g.pole_radius_max, g.seed)
            }
        }
    }
}

fn default_n_freq() -> usize {
    1024
}
fn default_tol() -> f64 {
    1e-4
}
fn default_max_iter() -> usize {
    100
}
fn default_max_restarts() -> usize {
    5
}
fn default_warm_periods() -> usize {
    5
}
fn default_true() -> bool {
    true
}
fn default_reps() -> usize {
    25
}
fn default_samples() -> usize {
    20_000
}
fn default_scaling_iters() -> usize {
    40
}
fn default_grid() -> usize {
    512
}
fn default_sweep_n_list() -> Vec<usize> {
    vec![256, 1024, 4096]
}
fn default_dim_list() -> Vec<usize> {
    vec![2, 3, 4]
}
fn default_variances() -> Vec<f64> {
    vec![0.0, 1e-6, 1e-4, 1e-2]
}
fn default_study_n_freq() -> usize {
    128
}
fn default_tol_match() -> f64 {
    0.02
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateFileConfig {
    plant: PlantSpec,
    structure: BlockStructure,
    #[serde(rename = "N", default = "default_n_freq")]
    n_freq: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default = "default_max_iter")]
    max_iter: usize,
    #[serde(default = "default_max_restarts")]
    max_restarts: usize,
    #[serde(default)]
    noise_variance: f64,
    #[serde(default = "default_warm_periods")]
    warm_periods: usize,
    #[serde(default = "default_true")]
    real_mode: bool,
}

/// Complex matrix as real/imaginary parts; `im` defaults to zero.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixJson {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    fn build(&self) -> Result<Array2<c64>> {
        let rows = self.re.len();
        if rows == 0 || self.re.iter().any(|r| r.len() != self.re[0].len()) {
            return Err(MuError::Config("matrix 're' must be rectangular".into()));
        }
        let cols = self.re[0].len();
        if let Some(im) = &self.im {
            if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                return Err(MuError::Config("matrix 'im' shape must match 're'".into()));
            }
        }
        Ok(Array2::from_shape_fn((rows, cols), |(i, j)| {
            c64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j]))
        }))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleFileConfig {
    #[serde(default)]
    matrix: Option<MatrixJson>,
    #[serde(default)]
    plant: Option<PlantSpec>,
    structure: BlockStructure,
    #[serde(default = "default_grid")]
    grid: usize,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default = "default_scaling_iters")]
    scaling_iters: usize,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchFileConfig {
    kind: String,
    #[serde(default)]
    plant: Option<PlantSpec>,
    #[serde(default)]
    structure: Option<BlockStructure>,
    /// Frequency-bin counts for the structure sweep.
    #[serde(default = "default_sweep_n_list")]
    n_freq_list: Vec<usize>,
    /// Plant dimensions for the convergence study.
    #[serde(default = "default_dim_list")]
    n_list: Vec<usize>,
    #[serde(default = "default_reps")]
    reps: usize,
    #[serde(default = "default_variances")]
    variances: Vec<f64>,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default = "default_max_iter")]
    max_iter: usize,
    #[serde(default = "default_max_restarts")]
    max_restarts: usize,
    #[serde(default = "default_warm_periods")]
    warm_periods: usize,
    #[serde(default)]
    noise_variance: f64,
    /// Frequency bins for the convergence and noise studies.
    #[serde(default = "default_study_n_freq")]
    n_freq: usize,
    #[serde(default = "default_tol_match")]
    tol_match: f64,
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| MuError::Config(format!("{}: {e}", path.display())))
}

fn write_manifest(
    out_dir: &Path,
    kind: &str,
    seed: u64,
    artifacts: &[&str],
    extra: serde_json::Value,
) -> Result<()> {
    let manifest = serde_json::json!({
        "kind": kind,
        "seed": seed,
        "artifacts": artifacts,
        "extra": extra,
    });
    fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(())
}

/// Configure the global worker pool from `MU_PROBE_THREADS` (0 or unset =
/// automatic). Safe to call more than once; later calls are no-ops.
pub fn init_thread_pool() {
    if let Ok(v) = std::env::var("MU_PROBE_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn cmd_estimate(args: &CommonArgs) -> Result<i32> {
    let mut cfg: EstimateFileConfig = read_config(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.n_freq {
        cfg.n_freq = n;
    }
    if let Some(t) = args.tol {
        cfg.tol = t;
    }
    if let Some(v) = args.noise {
        cfg.noise_variance = v;
    }
    let plant = cfg.plant.build()?;
    if plant.n() != cfg.structure.n() {
        return Err(MuError::DimensionMismatch(format!(
            "plant is {0}x{0} but structure blocks sum to {1}",
            plant.n(),
            cfg.structure.n()
        )));
    }
    let oracle = SimulatedOracle::new(
        plant,
        cfg.warm_periods,
        cfg.noise_variance,
        derive_seed(cfg.seed, 0x7015E),
    )?;
    let est = estimate_mu(
        &oracle,
        &cfg.structure,
        &EstimateConfig {
            n_freq: cfg.n_freq,
            seed: cfg.seed,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            max_restarts: cfg.max_restarts,
            real_mode: cfg.real_mode,
        },
    )?;

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("bins.csv"), est.csv_string())?;
    fs::write(
        args.out.join("summary.json"),
        serde_json::to_string_pretty(&est.summary())? + "\n",
    )?;
    write_manifest(
        &args.out,
        "estimate",
        cfg.seed,
        &["bins.csv", "summary.json"],
        serde_json::json!({"N": cfg.n_freq, "tol": cfg.tol}),
    )?;
    if !args.quiet {
        println!(
            "mu = {:.6} at omega = {:.6} (bin {}), {} iterations, {} experiments, converged = {}",
            est.mu, est.peak_omega, est.peak_bin, est.iterations, est.experiments, est.converged
        );
    }
    Ok(if est.converged { 0 } else { 2 })
}

fn cmd_oracle(args: &CommonArgs) -> Result<i32> {
    let mut cfg: OracleFileConfig = read_config(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.n_freq {
        cfg.grid = n;
    }
    let (m, extra) = match (&cfg.matrix, &cfg.plant) {
        (Some(mj), None) => (mj.build()?, serde_json::json!({})),
        (None, Some(ps)) => {
            let plant = ps.build()?;
            // peak of the largest-singular-value sweep, then bounds there
            let mut best = (0usize, f64::NEG_INFINITY);
            for k in 0..cfg.grid.max(2) {
                let omega = 2.0 * std::f64::consts::PI * k as f64 / cfg.grid.max(2) as f64;
                let s = sigma_max(&plant.freq_response(omega)?)?;
                if s > best.1 {
                    best = (k, s);
                }
            }
            let omega = 2.0 * std::f64::consts::PI * best.0 as f64 / cfg.grid.max(2) as f64;
            (
                plant.freq_response(omega)?,
                serde_json::json!({"peak_omega": omega, "hinf": best.1, "grid": cfg.grid}),
            )
        }
        _ => {
            return Err(MuError::Config(
                "exactly one of 'matrix' or 'plant' must be given".into(),
            ))
        }
    };
    if m.nrows() != cfg.structure.n() || m.ncols() != cfg.structure.n() {
        return Err(MuError::DimensionMismatch(format!(
            "matrix is {}x{} but structure blocks sum to {}",
            m.nrows(),
            m.ncols(),
            cfg.structure.n()
        )));
    }
    let report = bounds_for_matrix(&m, &cfg.structure, cfg.samples, cfg.scaling_iters, cfg.seed)?;
    fs::create_dir_all(&args.out)?;
    let mut js = serde_json::to_value(&report)?;
    if let Some(obj) = js.as_object_mut() {
        for (k, v) in extra.as_object().unwrap() {
            obj.insert(k.clone(), v.clone());
        }
    }
    fs::write(
        args.out.join("bounds.json"),
        serde_json::to_string_pretty(&js)? + "\n",
    )?;
    write_manifest(&args.out, "oracle", cfg.seed, &["bounds.json"], extra)?;
    if !args.quiet {
        println!(
            "lower = {:.6} ({}), upper = {:.6} ({})",
            report.lower, report.lower_method, report.upper, report.upper_method
        );
    }
    Ok(0)
}

fn cmd_bench(args: &CommonArgs) -> Result<i32> {
    let mut cfg: BenchFileConfig = read_config(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.n_freq {
        cfg.n_freq = n;
    }
    if let Some(t) = args.tol {
        cfg.tol = t;
    }
    if let Some(v) = args.noise {
        cfg.noise_variance = v;
    }
    if let Some(r) = args.reps {
        cfg.reps = r;
    }
    let campaign = BenchCampaign {
        seed: cfg.seed,
        warm_periods: cfg.warm_periods,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        max_restarts: cfg.max_restarts,
        noise_variance: cfg.noise_variance,
    };
    fs::create_dir_all(&args.out)?;
    match cfg.kind.as_str() {
        "sweep" => {
            let plant = match &cfg.plant {
                Some(ps) => ps.build()?,
                None => default_sweep_plant(cfg.seed)?,
            };
            let report = run_sweep(&campaign, &plant, &cfg.n_freq_list)?;
            let mut buf = Vec::new();
            write_sweep_csv(&report.rows, &mut buf)?;
            fs::write(args.out.join("sweep.csv"), buf)?;
            let mut buf = Vec::new();
            write_trace_csv(&report.traces, &mut buf)?;
            fs::write(args.out.join("sweep_trace.csv"), buf)?;
            write_manifest(
                &args.out,
                "bench/sweep",
                cfg.seed,
                &["sweep.csv", "sweep_trace.csv"],
                serde_json::json!({"n_freq_list": cfg.n_freq_list}),
            )?;
            if !args.quiet {
                println!("sweep: {} rows -> sweep.csv", report.rows.len());
            }
        }
        "convergence" => {
            let rows = run_convergence_study(
                &campaign,
                &cfg.n_list,
                cfg.reps,
                cfg.n_freq,
                cfg.tol_match,
            )?;
            let mut buf = Vec::new();
            write_convergence_csv(&rows, &mut buf)?;
            fs::write(args.out.join("convergence.csv"), buf)?;
            write_manifest(
                &args.out,
                "bench/convergence",
                cfg.seed,
                &["convergence.csv"],
                serde_json::json!({"n_list": cfg.n_list, "reps": cfg.reps}),
            )?;
            if !args.quiet {
                println!("convergence study: {} rows -> convergence.csv", rows.len());
            }
        }
        "noise" => {
            let plant = match &cfg.plant {
                Some(ps) => ps.build()?,
                None => default_sweep_plant(cfg.seed)?,
            };
            let structure = cfg
                .structure
                .clone()
                .unwrap_or_else(|| BlockStructure::single_full(plant.n()));
            if structure.n() != plant.n() {
                return Err(MuError::DimensionMismatch(format!(
                    "plant is {0}x{0} but structure blocks sum to {1}",
                    plant.n(),
                    structure.n()
                )));
            }
            let rows = run_noise_study(
                &campaign,
                &plant,
                &structure,
                &cfg.variances,
                cfg.reps,
                cfg.n_freq,
            )?;
            let mut buf = Vec::new();
            write_noise_csv(&rows, &mut buf)?;
            fs::write(args.out.join("noise.csv"), buf)?;
            // noiseless model-based reference alongside the noisy tables
            let grid = crate::power::model_mu_over_grid(
                &plant,
                &structure,
                cfg.n_freq,
                cfg.seed,
                campaign.tol.min(1e-6),
                400,
                campaign.max_restarts,
            )?;
            write_manifest(
                &args.out,
                "bench/noise",
                cfg.seed,
                &["noise.csv"],
                serde_json::json!({
                    "variances": cfg.variances,
                    "reps": cfg.reps,
                    "mu_model": grid.peak_mu,
                    "freq_model": grid.bins[grid.peak_bin].omega,
                }),
            )?;
            if !args.quiet {
                println!("noise study: {} rows -> noise.csv", rows.len());
            }
        }
        other => {
            return Err(MuError::Config(format!(
                "unknown bench kind '{other}' (expected sweep | convergence | noise)"
            )))
        }
    }
    Ok(0)
}

/// Run a parsed invocation, returning the process exit code.
pub fn run(cli: &Cli) -> i32 {
    init_thread_pool();
    let result = match &cli.command {
        Command::Estimate(_) => cmd_estimate(cli.command.args()),
        Command::Oracle(_) => cmd_oracle(cli.command.args()),
        Command::Bench(_) => cmd_bench(cli.command.args()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Parse arguments and run; suitable for tests.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            // clap handles --help/--version through this path (exit 0)
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plant_spec_parses_both_forms() {
        let model: PlantSpec = serde_json::from_str(
            r#"{"A": [[0.5]], "B": [[1.0]], "C": [[1.0]], "D": [[0.0]]}"#,
        )
        .unwrap();
        assert!(matches!(model, PlantSpec::Model(_)));
        let gen: PlantSpec = serde_json::from_str(r#"{"n": 3, "seed": 7}"#).unwrap();
        let plant = gen.build().unwrap();
        assert_eq!(plant.n(), 3);
        assert_eq!(plant.n_x(), 6);
    }

    #[test]
    fn unknown_keys_rejected() {
        let r: std::result::Result<EstimateFileConfig, _> = serde_json::from_str(
            r#"{"plant": {"n": 2, "seed": 1}, "structure": {"r": [0,0], "m": [1,2]}, "bogus": 1}"#,
        );
        assert!(r.is_err());
    }

    #[test]
    fn estimate_config_defaults() {
        let cfg: EstimateFileConfig = serde_json::from_str(
            r#"{"plant": {"n": 2, "seed": 1}, "structure": {"r": [0,0], "m": [1,2]}}"#,
        )
        .unwrap();
        assert_eq!(cfg.n_freq, 1024);
        assert_eq!(cfg.max_iter, 100);
        assert!(cfg.real_mode);
        assert_eq!(cfg.noise_variance, 0.0);
    }

    #[test]
    fn matrix_json_shapes() {
        let m: MatrixJson = serde_json::from_str(r#"{"re": [[1.0, 0.0], [0.0, 2.0]]}"#).unwrap();
        let a = m.build().unwrap();
        assert_eq!(a[[1, 1]], c64::new(2.0, 0.0));
        let bad: MatrixJson =
            serde_json::from_str(r#"{"re": [[1.0], [0.0, 2.0]]}"#).unwrap();
        assert!(bad.build().is_err());
    }
}
