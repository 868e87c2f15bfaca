//! Experiment protocol: seeded multi-trial runs, RMSE aggregation by
//! base-10 geometric mean, the full benchmark table sweep and the
//! nonsingularity probe over random center draws.

use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::discretization::{
    assemble_system, evaluate_solution, make_uniform_grid, perturb_centers, DiscretizationError,
};
use crate::kernel::{KernelError, MQKernel};
use crate::linalg::{lu_factor, smallest_singular_value, solve, LinalgError};
use crate::operators::{reference_solution, ProblemSpec, VelocityField};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("grid needs at least 3 points per side, got {0}")]
    GridTooSmall(usize),
    #[error("geometric mean needs a nonempty list of positive values")]
    InvalidGeometricMeanInput,
    #[error("all {0} trials produced singular systems")]
    AllTrialsSingular(usize),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

/// One benchmark cell: grid size, kernel, perturbation, velocity, trial
/// budget and seeding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n_per_side: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub velocity: [f64; 2],
    pub trials: usize,
    pub base_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_per_side: 21,
            epsilon: 2.5,
            delta: 0.01,
            velocity: [0.0, 0.0],
            trials: 100,
            base_seed: 42,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials < 1 {
            return Err(HarnessError::NoTrials);
        }
        if self.n_per_side < 3 {
            return Err(HarnessError::GridTooSmall(self.n_per_side));
        }
        Ok(())
    }

    pub fn n_total(&self) -> usize {
        self.n_per_side * self.n_per_side
    }
}

/// Outcome of a single randomized trial.
#[derive(Clone, Debug)]
pub struct TrialResult {
    pub trial_index: usize,
    pub seed: u64,
    /// None when the factorization was exactly singular.
    pub rmse: Option<f64>,
    pub condition_estimate: f64,
    pub min_abs_pivot: f64,
    pub singular_flag: bool,
    pub wall_time: f64,
}

/// Aggregate over the trials of one cell.
#[derive(Clone, Debug)]
pub struct AggregateResult {
    pub config: ExperimentConfig,
    pub rmse_geomean: f64,
    pub rmse_min: f64,
    pub rmse_max: f64,
    pub singular_count: usize,
    pub cond_median: f64,
    pub seconds_total: f64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Stable per-trial seed so trials are order independent and any single
/// trial can be re-run in isolation.
pub fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    splitmix64(splitmix64(base_seed).wrapping_add(trial_index))
}

/// Grid, perturbed centers, assembly, direct solve and RMSE over all
/// collocation nodes for one seeded draw.
pub fn run_single_trial(
    cfg: &ExperimentConfig,
    trial_index: usize,
    seed: u64,
) -> Result<TrialResult, HarnessError> {
    run_trial_detailed(cfg, trial_index, seed).map(|d| d.result)
}

/// [`run_single_trial`] plus the RBF coefficient vector of the solve.
pub struct DetailedTrial {
    pub result: TrialResult,
    /// None when the system was singular.
    pub coefficients: Option<Vec<f64>>,
}

pub fn run_trial_detailed(
    cfg: &ExperimentConfig,
    trial_index: usize,
    seed: u64,
) -> Result<DetailedTrial, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let kernel = MQKernel::new(cfg.epsilon)?;
    let spec = ProblemSpec::manufactured(kernel, VelocityField::Constant(cfg.velocity));
    let grid = make_uniform_grid::<f64>(cfg.n_per_side)?;
    let centers = perturb_centers(&grid, cfg.delta, seed)?;
    let sys = assemble_system(&spec, &grid, &centers)?;
    let factor = lu_factor(&sys.matrix)?;
    if factor.is_singular() {
        return Ok(DetailedTrial {
            result: TrialResult {
                trial_index,
                seed,
                rmse: None,
                condition_estimate: f64::INFINITY,
                min_abs_pivot: 0.0,
                singular_flag: true,
                wall_time: start.elapsed().as_secs_f64(),
            },
            coefficients: None,
        });
    }
    let report = solve(&factor, &sys.matrix, &sys.rhs)?;
    let n = grid.n_total();
    let mut sq_sum = 0.0;
    for idx in 0..n {
        let p = grid.point(idx);
        let approx = evaluate_solution(&centers, &report.solution, &p, &kernel)?;
        let exact = reference_solution(&p);
        sq_sum += (exact - approx).powi(2);
    }
    let rmse = (sq_sum / n as f64).sqrt();
    Ok(DetailedTrial {
        result: TrialResult {
            trial_index,
            seed,
            rmse: Some(rmse),
            condition_estimate: report.condition_estimate,
            min_abs_pivot: report.min_abs_pivot,
            singular_flag: false,
            wall_time: start.elapsed().as_secs_f64(),
        },
        coefficients: Some(report.solution),
    })
}

/// Base-10 geometric mean `10^(mean of log10)`.
pub fn geometric_mean_rmse(rmses: &[f64]) -> Result<f64, HarnessError> {
    if rmses.is_empty() || rmses.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(HarnessError::InvalidGeometricMeanInput);
    }
    let mean_log = rmses.iter().map(|r| r.log10()).sum::<f64>() / rmses.len() as f64;
    Ok(10.0f64.powf(mean_log))
}

/// Runs the configured number of seeded trials and aggregates them.
/// Trials execute in parallel; aggregation reduces in trial order.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<AggregateResult, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let trials: Vec<Result<TrialResult, HarnessError>> = (0..cfg.trials)
        .into_par_iter()
        .map(|l| run_single_trial(cfg, l, trial_seed(cfg.base_seed, l as u64)))
        .collect();
    let mut results = Vec::with_capacity(cfg.trials);
    for t in trials {
        results.push(t?);
    }
    aggregate(cfg, &results, start.elapsed().as_secs_f64())
}

fn aggregate(
    cfg: &ExperimentConfig,
    results: &[TrialResult],
    seconds_total: f64,
) -> Result<AggregateResult, HarnessError> {
    let singular_count = results.iter().filter(|t| t.singular_flag).count();
    let rmses: Vec<f64> = results.iter().filter_map(|t| t.rmse).collect();
    if rmses.is_empty() {
        return Err(HarnessError::AllTrialsSingular(results.len()));
    }
    let rmse_geomean = geometric_mean_rmse(&rmses)?;
    let rmse_min = rmses.iter().cloned().fold(f64::INFINITY, f64::min);
    let rmse_max = rmses.iter().cloned().fold(0.0f64, f64::max);
    let mut conds: Vec<f64> = results
        .iter()
        .filter(|t| !t.singular_flag)
        .map(|t| t.condition_estimate)
        .collect();
    conds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cond_median = if conds.len() % 2 == 1 {
        conds[conds.len() / 2]
    } else {
        0.5 * (conds[conds.len() / 2 - 1] + conds[conds.len() / 2])
    };
    Ok(AggregateResult {
        config: *cfg,
        rmse_geomean,
        rmse_min,
        rmse_max,
        singular_count,
        cond_median,
        seconds_total,
    })
}

pub const CSV_HEADER: &str =
    "N,n,epsilon,vx,vy,delta,m,rmse_geomean,rmse_min,rmse_max,singular_count,cond_median,seconds_total";

/// One CSV row for an aggregate; floats use shortest round-trip decimals.
pub fn write_csv_row<W: Write>(w: &mut W, agg: &AggregateResult) -> io::Result<()> {
    let c = &agg.config;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        c.n_total(),
        c.n_per_side,
        c.epsilon,
        c.velocity[0],
        c.velocity[1],
        c.delta,
        c.trials,
        agg.rmse_geomean,
        agg.rmse_min,
        agg.rmse_max,
        agg.singular_count,
        agg.cond_median,
        agg.seconds_total,
    )
}

/// Row for a cell whose every trial was singular.
fn write_failed_row<W: Write>(w: &mut W, cfg: &ExperimentConfig) -> io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{},NaN,NaN,NaN,{},NaN,NaN",
        cfg.n_total(),
        cfg.n_per_side,
        cfg.epsilon,
        cfg.velocity[0],
        cfg.velocity[1],
        cfg.delta,
        cfg.trials,
        cfg.trials,
    )
}

/// Velocities of the benchmark table, in row-block order.
pub const TABLE1_VELOCITIES: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 1.0], [1.0, 100.0], [100.0, 100.0]];
/// Perturbation radii of the benchmark table, in column order.
pub const TABLE1_DELTAS: [f64; 4] = [0.1, 0.01, 0.001, 0.0];
/// Grid sides giving N = 121, 441, 961, 1681.
pub const TABLE1_SIDES: [usize; 4] = [11, 21, 31, 41];

/// Full benchmark sweep (optionally restricted to one velocity), writing
/// one CSV row per cell. Failed cells are recorded and the sweep
/// continues.
pub fn run_table1<W: Write>(
    epsilon: f64,
    trials: usize,
    base_seed: u64,
    velocity_filter: Option<[f64; 2]>,
    w: &mut W,
) -> Result<Vec<AggregateResult>, HarnessError> {
    writeln!(w, "{CSV_HEADER}")?;
    let mut rows = Vec::new();
    for velocity in TABLE1_VELOCITIES {
        if let Some(only) = velocity_filter {
            if velocity != only {
                continue;
            }
        }
        for n_per_side in TABLE1_SIDES {
            for delta in TABLE1_DELTAS {
                let cfg = ExperimentConfig {
                    n_per_side,
                    epsilon,
                    delta,
                    velocity,
                    trials,
                    base_seed,
                };
                match run_benchmark(&cfg) {
                    Ok(agg) => {
                        write_csv_row(w, &agg)?;
                        rows.push(agg);
                    }
                    Err(HarnessError::AllTrialsSingular(_)) => write_failed_row(w, &cfg)?,
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(rows)
}

/// Nonsingularity statistics over repeated random center draws.
#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub config: ExperimentConfig,
    pub draws: usize,
    pub singular_count: usize,
    pub sigma_min_min: f64,
    pub sigma_min_median: f64,
    pub sigma_min_max: f64,
    pub min_abs_pivot_min: f64,
}

/// For each draw, assembles the collocation matrix with fresh centers and
/// records the exact-singularity flag, the smallest pivot and σ_min.
pub fn unisolvence_probe(cfg: &ExperimentConfig, draws: usize) -> Result<ProbeReport, HarnessError> {
    cfg.validate()?;
    let kernel = MQKernel::new(cfg.epsilon)?;
    let spec = ProblemSpec::manufactured(kernel, VelocityField::Constant(cfg.velocity));
    let grid = make_uniform_grid::<f64>(cfg.n_per_side)?;
    let per_draw: Vec<Result<(bool, f64, f64), HarnessError>> = (0..draws)
        .into_par_iter()
        .map(|l| {
            let seed = trial_seed(cfg.base_seed, l as u64);
            let centers = perturb_centers(&grid, cfg.delta, seed)?;
            let sys = assemble_system(&spec, &grid, &centers)?;
            let factor = lu_factor(&sys.matrix)?;
            let sigma = smallest_singular_value(&sys.matrix)?;
            Ok((factor.is_singular(), factor.min_abs_pivot(), sigma))
        })
        .collect();
    let mut singular_count = 0;
    let mut sigmas = Vec::with_capacity(draws);
    let mut min_pivot = f64::INFINITY;
    for r in per_draw {
        let (singular, pivot, sigma) = r?;
        if singular {
            singular_count += 1;
        }
        min_pivot = min_pivot.min(pivot);
        sigmas.push(sigma);
    }
    let mut sorted = sigmas.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ProbeReport {
        config: *cfg,
        draws,
        singular_count,
        sigma_min_min: sorted.first().copied().unwrap_or(f64::NAN),
        sigma_min_median: sorted.get(sorted.len() / 2).copied().unwrap_or(f64::NAN),
        sigma_min_max: sorted.last().copied().unwrap_or(f64::NAN),
        min_abs_pivot_min: min_pivot,
    })
}
