//! Command-line front end for the Kansa random-fictitious-centers solver.
//!
//! Exit statuses: 0 success, 2 usage/configuration error, 3 singular
//! system, 4 I/O error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kansa_rfc::discretization::{make_uniform_grid, perturb_centers};
use kansa_rfc::harness::{
    run_benchmark, run_table1, run_trial_detailed, trial_seed, unisolvence_probe,
    ExperimentConfig, HarnessError, CSV_HEADER,
};

const EXIT_USAGE: u8 = 2;
const EXIT_SINGULAR: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "kansa-rfc",
    version,
    about = "Meshfree Kansa collocation with MultiQuadric RBFs and random fictitious centers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one seeded instance and print its diagnostics
    Solve(CommonOpts),
    /// Run one multi-trial benchmark cell
    Bench(CommonOpts),
    /// Run the full benchmark sweep (4 velocities x 4 deltas x 4 grids)
    Table1(CommonOpts),
    /// Nonsingularity statistics over repeated random center draws
    Probe(CommonOpts),
    /// Dump collocation points and one center draw as plot-ready CSV
    GridDump(CommonOpts),
}

#[derive(Args, Clone, Default)]
struct CommonOpts {
    /// Grid points per side (N = n^2)
    #[arg(long)]
    n: Option<usize>,
    /// MultiQuadric shape parameter
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    /// Center perturbation radius
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    /// Convection velocity as vx,vy
    #[arg(long, value_parser = parse_velocity, allow_hyphen_values = true)]
    velocity: Option<VelocityArg>,
    /// Number of random trials (draws for probe)
    #[arg(long)]
    trials: Option<usize>,
    /// Base RNG seed; per-trial seeds are derived from it
    #[arg(long)]
    base_seed: Option<u64>,
    /// Worker threads (falls back to KANSA_RFC_THREADS, then all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Output path (CSV); grid-dump uses it as a filename prefix
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write solve coefficients to this CSV path
    #[arg(long)]
    dump_coeffs: Option<PathBuf>,
    /// Flat key=value config file; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Increase verbosity
    #[arg(short = 'v', long, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Suppress non-essential output
    #[arg(short = 'q', long)]
    quiet: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct VelocityArg([f64; 2]);

fn parse_velocity(s: &str) -> Result<VelocityArg, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected vx,vy but got '{s}'"));
    }
    let vx = parts[0].trim().parse().map_err(|e| format!("vx: {e}"))?;
    let vy = parts[1].trim().parse().map_err(|e| format!("vy: {e}"))?;
    Ok(VelocityArg([vx, vy]))
}

/// Fully merged configuration: defaults, then config file, then flags.
struct Resolved {
    cfg: ExperimentConfig,
    velocity_given: bool,
    threads: Option<usize>,
    out: Option<PathBuf>,
    dump_coeffs: Option<PathBuf>,
    verbose: u8,
    quiet: bool,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_IO,
            message: message.to_string(),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match &e {
            HarnessError::Io(_) => CliError::io(e),
            HarnessError::AllTrialsSingular(_) => CliError {
                code: EXIT_SINGULAR,
                message: e.to_string(),
            },
            _ => CliError {
                code: EXIT_USAGE,
                message: e.to_string(),
            },
        }
    }
}

fn parse_config_file(path: &Path) -> Result<CommonOpts, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
    let mut opts = CommonOpts::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::usage(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |e: String| {
            CliError::usage(format!("{}:{}: {key}: {e}", path.display(), lineno + 1))
        };
        match key {
            "n" => opts.n = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
            "epsilon" => opts.epsilon = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
            "delta" => opts.delta = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
            "velocity" => opts.velocity = Some(parse_velocity(value).map_err(bad)?),
            "trials" => opts.trials = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
            "base_seed" => opts.base_seed = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
            "threads" => opts.threads = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
            "out" => opts.out = Some(PathBuf::from(value)),
            "dump_coeffs" => opts.dump_coeffs = Some(PathBuf::from(value)),
            other => {
                return Err(CliError::usage(format!(
                    "{}:{}: unknown config key '{other}'",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok(opts)
}

fn resolve(opts: &CommonOpts) -> Result<Resolved, CliError> {
    let file = match &opts.config {
        Some(path) => parse_config_file(path)?,
        None => CommonOpts::default(),
    };
    let pick = |flag: &Option<usize>, filed: &Option<usize>| flag.or(*filed);

    let defaults = ExperimentConfig::default();
    let n_per_side = pick(&opts.n, &file.n).unwrap_or(defaults.n_per_side);
    let epsilon = opts.epsilon.or(file.epsilon).unwrap_or(defaults.epsilon);
    let delta = opts.delta.or(file.delta).unwrap_or(defaults.delta);
    let velocity = opts.velocity.or(file.velocity);
    let trials = pick(&opts.trials, &file.trials).unwrap_or(defaults.trials);
    let base_seed = opts.base_seed.or(file.base_seed).unwrap_or(defaults.base_seed);
    let threads = pick(&opts.threads, &file.threads).or_else(|| {
        std::env::var("KANSA_RFC_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });

    if n_per_side < 3 {
        return Err(CliError::usage(format!(
            "--n must be at least 3, got {n_per_side}"
        )));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(CliError::usage(format!(
            "--epsilon must be positive, got {epsilon}"
        )));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(CliError::usage(format!(
            "--delta must be nonnegative, got {delta}"
        )));
    }
    if trials < 1 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    if let Some(VelocityArg(v)) = velocity {
        if !(v[0].is_finite() && v[1].is_finite()) {
            return Err(CliError::usage("--velocity components must be finite"));
        }
    }

    Ok(Resolved {
        cfg: ExperimentConfig {
            n_per_side,
            epsilon,
            delta,
            velocity: velocity.map(|VelocityArg(v)| v).unwrap_or(defaults.velocity),
            trials,
            base_seed,
        },
        velocity_given: velocity.is_some(),
        threads,
        out: opts.out.clone().or(file.out),
        dump_coeffs: opts.dump_coeffs.clone().or(file.dump_coeffs),
        verbose: opts.verbose,
        quiet: opts.quiet,
    })
}

fn setup_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(t) = threads {
        if t < 1 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn cmd_solve(r: &Resolved) -> Result<(), CliError> {
    let seed = trial_seed(r.cfg.base_seed, 0);
    let detail = run_trial_detailed(&r.cfg, 0, seed)?;
    let t = &detail.result;
    if t.singular_flag {
        eprintln!("singular system (min |pivot| = {})", t.min_abs_pivot);
        return Err(CliError {
            code: EXIT_SINGULAR,
            message: String::new(),
        });
    }
    println!("rmse: {:e}", t.rmse.unwrap());
    println!("condition_estimate: {:e}", t.condition_estimate);
    println!("min_abs_pivot: {:e}", t.min_abs_pivot);
    if r.verbose > 0 {
        println!("seed: {seed}");
        println!("seconds: {:.3}", t.wall_time);
    }
    if let Some(path) = &r.dump_coeffs {
        let coeffs = detail.coefficients.expect("non-singular solve has coefficients");
        let mut buf = String::from("index,coefficient\n");
        for (i, a) in coeffs.iter().enumerate() {
            buf.push_str(&format!("{i},{a}\n"));
        }
        fs::write(path, buf).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        if !r.quiet {
            println!("coefficients written to {}", path.display());
        }
    }
    Ok(())
}

fn cmd_bench(r: &Resolved) -> Result<(), CliError> {
    let agg = run_benchmark(&r.cfg)?;
    if !r.quiet {
        println!(
            "N={} delta={} v=({},{}) m={}",
            r.cfg.n_total(),
            r.cfg.delta,
            r.cfg.velocity[0],
            r.cfg.velocity[1],
            r.cfg.trials
        );
        println!("rmse_geomean: {:e}", agg.rmse_geomean);
        println!("rmse_min: {:e}  rmse_max: {:e}", agg.rmse_min, agg.rmse_max);
        println!("singular_count: {}", agg.singular_count);
        println!("cond_median: {:e}", agg.cond_median);
    }
    let mut row = Vec::new();
    writeln!(row, "{CSV_HEADER}").map_err(CliError::io)?;
    kansa_rfc::harness::write_csv_row(&mut row, &agg).map_err(CliError::io)?;
    match &r.out {
        Some(path) => {
            fs::write(path, row).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?
        }
        None => print!("{}", String::from_utf8_lossy(&row)),
    }
    Ok(())
}

fn cmd_table1(r: &Resolved) -> Result<(), CliError> {
    let filter = if r.velocity_given {
        Some(r.cfg.velocity)
    } else {
        None
    };
    let mut buf = Vec::new();
    run_table1(r.cfg.epsilon, r.cfg.trials, r.cfg.base_seed, filter, &mut buf)?;
    match &r.out {
        Some(path) => {
            fs::write(path, &buf).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            if !r.quiet {
                eprintln!("table written to {}", path.display());
            }
        }
        None => print!("{}", String::from_utf8_lossy(&buf)),
    }
    Ok(())
}

fn cmd_probe(r: &Resolved) -> Result<(), CliError> {
    let report = unisolvence_probe(&r.cfg, r.cfg.trials)?;
    println!(
        "N={} delta={} epsilon={} draws={}",
        r.cfg.n_total(),
        r.cfg.delta,
        r.cfg.epsilon,
        report.draws
    );
    println!("singular_count: {}", report.singular_count);
    println!(
        "sigma_min: min {:e}  median {:e}  max {:e}",
        report.sigma_min_min, report.sigma_min_median, report.sigma_min_max
    );
    println!("min_abs_pivot_min: {:e}", report.min_abs_pivot_min);
    Ok(())
}

fn cmd_grid_dump(r: &Resolved) -> Result<(), CliError> {
    let grid = make_uniform_grid::<f64>(r.cfg.n_per_side)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let seed = trial_seed(r.cfg.base_seed, 0);
    let centers = perturb_centers(&grid, r.cfg.delta, seed)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let prefix = r
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("grid"));
    let points_path = with_suffix(&prefix, "_points.csv");
    let centers_path = with_suffix(&prefix, "_centers.csv");

    let mut buf = Vec::new();
    grid.write_csv(&mut buf).map_err(CliError::io)?;
    fs::write(&points_path, &buf)
        .map_err(|e| CliError::io(format!("{}: {e}", points_path.display())))?;

    let mut buf = Vec::new();
    centers.write_csv(&mut buf, &grid).map_err(CliError::io)?;
    fs::write(&centers_path, &buf)
        .map_err(|e| CliError::io(format!("{}: {e}", centers_path.display())))?;

    if !r.quiet {
        println!(
            "wrote {} and {}",
            points_path.display(),
            centers_path.display()
        );
    }
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    let opts = match &cli.command {
        Command::Solve(o)
        | Command::Bench(o)
        | Command::Table1(o)
        | Command::Probe(o)
        | Command::GridDump(o) => o,
    };
    let resolved = resolve(opts)?;
    setup_threads(resolved.threads)?;
    match &cli.command {
        Command::Solve(_) => cmd_solve(&resolved),
        Command::Bench(_) => cmd_bench(&resolved),
        Command::Table1(_) => cmd_table1(&resolved),
        Command::Probe(_) => cmd_probe(&resolved),
        Command::GridDump(_) => cmd_grid_dump(&resolved),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("error: {}", e.message);
            }
            ExitCode::from(e.code)
        }
    }
}
