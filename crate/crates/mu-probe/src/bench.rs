//! Reproducible benchmark campaigns: the eight-structure sweep on a 3x3
//! plant, the randomized convergence study over plant dimension, and the
//! noise-sensitivity table. Each campaign returns plot-ready rows; CSV
//! writers with documented headers live next to the row types.

use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use crate::blocks::BlockStructure;
use crate::datadriven::{estimate_mu, EstimateConfig, SimulatedOracle};
use crate::error::{MuError, Result};
use crate::lti::{random_stable, StateSpaceModel};
use crate::oracle::diag_scaling_upper_bound;
use crate::power::{derive_seed, model_mu_over_grid};

/// Shared campaign settings: estimator tolerances plus the experiment setup.
#[derive(Debug, Clone, Serialize)]
pub struct BenchCampaign {
    pub seed: u64,
    pub warm_periods: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub max_restarts: usize,
    pub noise_variance: f64,
}

impl Default for BenchCampaign {
    fn default() -> Self {
        BenchCampaign {
            seed: 0,
            warm_periods: 5,
            tol: 1e-4,
            max_iter: 100,
            max_restarts: 5,
            noise_variance: 0.0,
        }
    }
}

impl BenchCampaign {
    fn estimate_config(&self, n_freq: usize, seed: u64) -> EstimateConfig {
        EstimateConfig {
            n_freq,
            seed,
            tol: self.tol,
            max_iter: self.max_iter,
            max_restarts: self.max_restarts,
            real_mode: true,
        }
    }
}

/// The eight 3x3 block structures of the structure sweep, in order:
/// one repeated scalar; one full; scalar+full mixes of increasing scalar
/// count; three scalars; three fulls.
pub fn sweep_structures() -> Vec<BlockStructure> {
    [
        (&[1usize, 3][..], &[0usize, 0][..]),
        (&[0, 0], &[1, 3]),
        (&[1, 2], &[1, 1]),
        (&[1, 1], &[1, 2]),
        (&[2, 1, 1], &[1, 1]),
        (&[1, 1], &[2, 1, 1]),
        (&[3, 1, 1, 1], &[0, 0]),
        (&[0, 0], &[3, 1, 1, 1]),
    ]
    .iter()
    .map(|(r, m)| BlockStructure::from_rm(r, m).expect("fixed structures are valid"))
    .collect()
}

/// Default 3x3 benchmark plant: the first seeded random stable plant (from
/// `start_seed` upward) whose diagonal-scaling upper bound meets the
/// model-based lower bound to 0.1% on the structures where the diagonal
/// scaling family is known tight (cases 2, 4 and 8 of the sweep), so the
/// reference value is trustworthy.
pub fn default_sweep_plant(start_seed: u64) -> Result<StateSpaceModel> {
    let structures = sweep_structures();
    let check_cases = [1usize, 3, 7]; // sweep cases 2, 4, 8 (0-based)
    'seeds: for s in start_seed..start_seed + 200 {
        let plant = random_stable(3, 6, 0.85, s)?;
        for &c in &check_cases {
            let grid = model_mu_over_grid(&plant, &structures[c], 64, s, 1e-8, 400, 5)?;
            if !grid.converged {
                continue 'seeds;
            }
            let m = plant.freq_response(grid.bins[grid.peak_bin].omega)?;
            let upper = diag_scaling_upper_bound(&m, &structures[c], 60)?;
            if upper - grid.peak_mu > 1e-3 * grid.peak_mu {
                continue 'seeds;
            }
        }
        return Ok(plant);
    }
    Err(MuError::InvalidArgument(
        "no plant passing the bound-equality check in 200 seeds".into(),
    ))
}

/// One (structure, N) cell of the sweep. `mu_model` is the model-based
/// power iteration over the same grid; NaN entries mark runs that errored.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub case_index: usize,
    pub n_freq: usize,
    pub mu_tilde: f64,
    pub mu_bar: f64,
    pub mu_model: f64,
    pub converged: bool,
    /// Peak frequency of the data-driven run (not part of the CSV).
    pub peak_omega: f64,
}

/// Peak-gain trace, one row per iteration, at the largest N of the sweep.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub case_index: usize,
    pub iteration: usize,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub traces: Vec<TraceRow>,
}

/// Structure sweep (eight cases x N list) on one 3x3 plant. Individual
/// failures are recorded as unconverged NaN rows; the campaign always
/// completes.
pub fn run_sweep(
    campaign: &BenchCampaign,
    plant: &StateSpaceModel,
    n_list: &[usize],
) -> Result<SweepReport> {
    if plant.n() != 3 {
        return Err(MuError::DimensionMismatch(format!(
            "sweep expects a 3x3 plant, got {}x{}",
            plant.n(),
            plant.n()
        )));
    }
    if n_list.is_empty() {
        return Err(MuError::InvalidArgument("n_list must be non-empty".into()));
    }
    if campaign.noise_variance < 0.0 || !campaign.noise_variance.is_finite() {
        return Err(MuError::InvalidArgument(
            "noise_variance must be finite and >= 0".into(),
        ));
    }
    let structures = sweep_structures();
    let n_max = *n_list.iter().max().unwrap();

    let mut cells: Vec<(usize, usize)> = Vec::new();
    for c in 0..structures.len() {
        for &nf in n_list {
            cells.push((c, nf));
        }
    }

    let results: Vec<(SweepRow, Option<Vec<f64>>)> = cells
        .par_iter()
        .map(|&(c, nf)| {
            let run_seed = derive_seed(campaign.seed, (c as u64) << 32 | nf as u64);
            let oracle = SimulatedOracle::new(
                plant.clone(),
                campaign.warm_periods,
                campaign.noise_variance,
                derive_seed(run_seed, 0x7015E),
            )
            .expect("variance validated above");
            let cfg = campaign.estimate_config(nf, run_seed);
            let est = estimate_mu(&oracle, &structures[c], &cfg);
            let model = model_mu_over_grid(
                plant,
                &structures[c],
                nf,
                run_seed,
                campaign.tol.min(1e-6),
                400,
                campaign.max_restarts,
            );
            let mu_model = model.map(|g| g.peak_mu).unwrap_or(f64::NAN);
            match est {
                Ok(est) => (
                    SweepRow {
                        case_index: c + 1,
                        n_freq: nf,
                        mu_tilde: est.bins[est.peak_bin].mu_tilde,
                        mu_bar: est.bins[est.peak_bin].mu_bar,
                        mu_model,
                        converged: est.converged,
                        peak_omega: est.peak_omega,
                    },
                    (nf == n_max).then(|| est.history.clone()),
                ),
                Err(_) => (
                    SweepRow {
                        case_index: c + 1,
                        n_freq: nf,
                        mu_tilde: f64::NAN,
                        mu_bar: f64::NAN,
                        mu_model,
                        converged: false,
                        peak_omega: f64::NAN,
                    },
                    None,
                ),
            }
        })
        .collect();

    let mut rows: Vec<SweepRow> = results.iter().map(|(r, _)| r.clone()).collect();
    rows.sort_by_key(|r| (r.case_index, r.n_freq));
    let mut traces = Vec::new();
    for (row, hist) in &results {
        if let Some(h) = hist {
            for (i, &mu) in h.iter().enumerate() {
                traces.push(TraceRow {
                    case_index: row.case_index,
                    iteration: i + 1,
                    mu,
                });
            }
        }
    }
    traces.sort_by_key(|t| (t.case_index, t.iteration));
    Ok(SweepReport { rows, traces })
}

/// Convergence percentage for one (dimension, configuration) pair.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub config: usize,
    pub pct_converged: f64,
}

/// Block structure for the randomized study: configuration 1 is a single
/// full block, 2 is all scalar blocks, 3 mixes scalars and one full block
/// split by parity of `n`.
pub fn study_structure(config: usize, n: usize) -> Result<BlockStructure> {
    match config {
        1 => Ok(BlockStructure::single_full(n)),
        2 => BlockStructure::new(vec![1; n], vec![]),
        3 => {
            let s = n / 2; // floor: (n-1)/2 scalars for odd n
            let full = n - s;
            BlockStructure::new(vec![1; s], vec![full])
        }
        _ => Err(MuError::InvalidArgument(format!(
            "config must be 1, 2 or 3, got {config}"
        ))),
    }
}

/// Randomized convergence study: for each dimension and configuration,
/// `reps` random plants are estimated and classified as converged-and-
/// matching when the average of the two final gains is within `tol_match`
/// (relative) of the model-based engine. `reps = 0` yields an empty table.
pub fn run_convergence_study(
    campaign: &BenchCampaign,
    n_list: &[usize],
    reps: usize,
    n_freq: usize,
    tol_match: f64,
) -> Result<Vec<ConvergenceRow>> {
    if reps == 0 {
        return Ok(Vec::new());
    }
    let mut cells = Vec::new();
    for &n in n_list {
        for config in 1..=3usize {
            cells.push((n, config));
        }
    }
    let mut rows: Vec<ConvergenceRow> = cells
        .par_iter()
        .map(|&(n, config)| -> Result<ConvergenceRow> {
            let structure = study_structure(config, n)?;
            let mut matched = 0usize;
            for rep in 0..reps {
                let run_seed = derive_seed(
                    campaign.seed,
                    ((n as u64) << 40) | ((config as u64) << 32) | rep as u64,
                );
                let plant = random_stable(n, 2 * n, 0.8, run_seed)?;
                let oracle = SimulatedOracle::new(
                    plant.clone(),
                    campaign.warm_periods,
                    campaign.noise_variance,
                    derive_seed(run_seed, 0x7015E),
                )?;
                let cfg = campaign.estimate_config(n_freq, run_seed);
                let est = match estimate_mu(&oracle, &structure, &cfg) {
                    Ok(e) => e,
                    Err(_) => continue, // counted as a non-converging run
                };
                if !est.converged {
                    continue;
                }
                let model = model_mu_over_grid(
                    &plant,
                    &structure,
                    n_freq,
                    run_seed,
                    campaign.tol.min(1e-6),
                    400,
                    campaign.max_restarts,
                )?;
                let bin = &est.bins[est.peak_bin];
                let avg = 0.5 * (bin.mu_tilde + bin.mu_bar);
                if (avg - model.peak_mu).abs() <= tol_match * model.peak_mu.max(f64::MIN_POSITIVE) {
                    matched += 1;
                }
            }
            Ok(ConvergenceRow {
                n,
                config,
                pct_converged: 100.0 * matched as f64 / reps as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.n, r.config));
    Ok(rows)
}

/// One noise level of the sensitivity study: means of the per-run peak
/// gains over the repetitions, with each gain's peak frequency (radians in
/// `[0, 2 pi)`) taken from the first repetition.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseRow {
    pub sigma2: f64,
    pub mu_tilde_mean: f64,
    pub freq_tilde: f64,
    pub mu_bar_mean: f64,
    pub freq_bar: f64,
}

/// Noise-sensitivity study on one plant and structure. `variance_list`
/// must be sorted ascending and start at 0 so the first row is the
/// noiseless reference.
pub fn run_noise_study(
    campaign: &BenchCampaign,
    plant: &StateSpaceModel,
    structure: &BlockStructure,
    variance_list: &[f64],
    reps: usize,
    n_freq: usize,
) -> Result<Vec<NoiseRow>> {
    if variance_list.is_empty() || variance_list[0] != 0.0 {
        return Err(MuError::InvalidArgument(
            "variance_list must start at 0".into(),
        ));
    }
    if variance_list.windows(2).any(|w| w[0] > w[1]) {
        return Err(MuError::InvalidArgument(
            "variance_list must be sorted ascending".into(),
        ));
    }
    if reps == 0 {
        return Err(MuError::InvalidArgument("reps must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(variance_list.len());
    for (vi, &sigma2) in variance_list.iter().enumerate() {
        let per_rep: Vec<(f64, f64, f64, f64)> = (0..reps)
            .into_par_iter()
            .map(|rep| -> Result<(f64, f64, f64, f64)> {
                // the same excitation seed at every noise level, so the
                // sigma2 = 0 row reproduces the noiseless run exactly
                let run_seed = derive_seed(campaign.seed, rep as u64);
                let oracle = SimulatedOracle::new(
                    plant.clone(),
                    campaign.warm_periods,
                    sigma2,
                    derive_seed(run_seed, 0xA015E + vi as u64),
                )?;
                let cfg = campaign.estimate_config(n_freq, run_seed);
                let est = estimate_mu(&oracle, structure, &cfg)?;
                // peak of each gain separately, as the table reports both
                let (mut bt, mut vt) = (0usize, f64::NEG_INFINITY);
                let (mut bb, mut vb) = (0usize, f64::NEG_INFINITY);
                for b in &est.bins {
                    if b.mu_tilde > vt {
                        vt = b.mu_tilde;
                        bt = b.bin_index;
                    }
                    if b.mu_bar > vb {
                        vb = b.mu_bar;
                        bb = b.bin_index;
                    }
                }
                let om = |m: usize| 2.0 * std::f64::consts::PI * m as f64 / n_freq as f64;
                Ok((vt, om(bt), vb, om(bb)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mean = |f: &dyn Fn(&(f64, f64, f64, f64)) -> f64| {
            per_rep.iter().map(f).sum::<f64>() / reps as f64
        };
        rows.push(NoiseRow {
            sigma2,
            mu_tilde_mean: mean(&|r| r.0),
            freq_tilde: per_rep[0].1,
            mu_bar_mean: mean(&|r| r.2),
            freq_bar: per_rep[0].3,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "case,N,mu_tilde,mu_bar,mu_model,converged")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e},{}",
            r.case_index, r.n_freq, r.mu_tilde, r.mu_bar, r.mu_model, r.converged
        )?;
    }
    Ok(())
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "case,iteration,mu")?;
    for r in rows {
        writeln!(out, "{},{},{:.16e}", r.case_index, r.iteration, r.mu)?;
    }
    Ok(())
}

pub fn write_convergence_csv<W: Write>(
    rows: &[ConvergenceRow],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "n,config,pct_converged")?;
    for r in rows {
        writeln!(out, "{},{},{:.4}", r.n, r.config, r.pct_converged)?;
    }
    Ok(())
}

pub fn write_noise_csv<W: Write>(rows: &[NoiseRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "sigma2,mu_tilde_mean,freq_tilde,mu_bar_mean,freq_bar")?;
    for r in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.sigma2, r.mu_tilde_mean, r.freq_tilde, r.mu_bar_mean, r.freq_bar
        )?;
    }
    Ok(())
}
