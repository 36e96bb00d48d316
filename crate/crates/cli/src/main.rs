//! `mixlin` — synthetic mixed-linear-equation experiments.
//!
//! Subcommands: `gen` (emit a parameter set + dataset as JSON), `solve`
//! (one instance end to end, prints the matched-error report), `trace`
//! (repeated convergence runs), `grid` (recovery-probability sweep).
//! Exit codes: 0 success, 1 bad arguments, 2 numerical failure, 3 IO.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use mixlin_cli::config::{
    parse_usize_list, resolve, Cell, ConfigFile, FlagValues, InitMode, RunSettings,
};

/// Comma-separated integer list flag value.
#[derive(Clone, Debug)]
struct UsizeList(Vec<usize>);

impl std::str::FromStr for UsizeList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_usize_list(s).map(UsizeList)
    }
}
use mixlin_cli::experiments::{run_grid, run_trial};
use mixlin_cli::report::{write_grid_sidecar, write_json, write_traces, GridCsvWriter};
use mixlin_cli::schema::{
    termination_str, DatasetJson, ErrorReportJson, InstanceJson, ParamsJson, SolveOutput,
};
use mixlin_cli::{AppError, AppResult};

use mixlin_core::altmin::{altmin_run, assign_labels, AltMinConfig};
use mixlin_core::init::{tensor_init, InitConfig};
use mixlin_core::metrics::{estimation_error, label_accuracy};
use mixlin_core::model::{make_delta_spaced_params, sample_dataset, Dataset, MixtureParams};
use mixlin_core::rng::{child_seed, rng_for, unit_sphere_vector};

#[derive(Parser)]
#[command(name = "mixlin", version, about = "Mixed linear equation solver experiments")]
struct Cli {
    /// JSON config file mirroring the flags; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonFlags {
    /// Ambient dimension(s), comma separated for grids.
    #[arg(long)]
    p: Option<UsizeList>,
    /// Component count(s), comma separated for grids.
    #[arg(long)]
    k: Option<UsizeList>,
    /// Sample count(s), comma separated for grids.
    #[arg(long)]
    n: Option<UsizeList>,
    /// Pairwise component spacing.
    #[arg(long)]
    delta: Option<f64>,
    /// Trials per cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Initialization mode: tensor, random or oracle.
    #[arg(long)]
    init: Option<InitMode>,
    /// Use a fresh disjoint sample slice per iteration.
    #[arg(long)]
    resample: bool,
    /// Split samples between the second- and third-moment estimates.
    #[arg(long)]
    split: bool,
    /// Fraction of samples on the second-moment slice when splitting.
    #[arg(long)]
    split_fraction: Option<f64>,
    /// Power-method restarts (default 200·k²).
    #[arg(long = "L")]
    restarts: Option<usize>,
    /// Power-method iterations (default ⌈20·ln k⌉).
    #[arg(long = "N")]
    power_iters: Option<usize>,
    /// Maximum alternating-minimization iterations.
    #[arg(long = "T")]
    max_iters: Option<usize>,
    /// Exact-recovery tolerance on the matched error.
    #[arg(long)]
    tol: Option<f64>,
    /// Full-data assignment + refit pass after termination.
    #[arg(long)]
    final_refit: bool,
    /// Record wall-clock seconds in reports (forfeits byte-identical
    /// reruns).
    #[arg(long)]
    timing: bool,
    /// Per-trial wall-clock budget in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Output path (file for gen/solve/grid, prefix for trace).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonFlags {
    fn to_flag_values(&self) -> FlagValues {
        FlagValues {
            p: self.p.as_ref().map(|v| v.0.clone()),
            k: self.k.as_ref().map(|v| v.0.clone()),
            n: self.n.as_ref().map(|v| v.0.clone()),
            delta: self.delta,
            trials: self.trials,
            seed: self.seed,
            init: self.init,
            resample: self.resample,
            split: self.split,
            split_fraction: self.split_fraction,
            restarts: self.restarts,
            power_iters: self.power_iters,
            max_iters: self.max_iters,
            tol: self.tol,
            final_refit: self.final_refit,
            timing: self.timing,
            timeout: self.timeout,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a parameter set and dataset, emitted as JSON.
    Gen(CommonFlags),
    /// Solve one instance end to end and print the error report.
    Solve {
        #[command(flatten)]
        flags: CommonFlags,
        /// Load the instance from a `gen` output file instead of sampling.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run repeated convergence traces and persist them.
    Trace(CommonFlags),
    /// Sweep a grid of problem sizes and report recovery probabilities.
    Grid(CommonFlags),
}

fn single_cell(settings: &RunSettings) -> AppResult<Cell> {
    match settings.cells.as_slice() {
        [cell] => Ok(*cell),
        cells => Err(AppError::BadArgs(format!(
            "this command needs exactly one (n, p, k) combination, got {}",
            cells.len()
        ))),
    }
}

fn cmd_gen(settings: &RunSettings) -> AppResult<InstanceJson> {
    let cell = single_cell(settings)?;
    let params_seed = child_seed(settings.seed, &[0]);
    let data_seed = child_seed(settings.seed, &[1]);
    let params = make_delta_spaced_params(cell.p, cell.k, settings.delta, params_seed)?;
    let data = sample_dataset(&params, cell.n, data_seed)?;
    Ok(InstanceJson {
        params: ParamsJson::from_params(&params, params_seed),
        dataset: DatasetJson::from_dataset(&data),
    })
}

fn load_instance(path: &PathBuf) -> AppResult<(MixtureParams, Dataset)> {
    let text = std::fs::read_to_string(path).map_err(AppError::io(path))?;
    let instance: InstanceJson = serde_json::from_str(&text)
        .map_err(|e| AppError::BadArgs(format!("instance {}: {e}", path.display())))?;
    Ok((instance.params.to_params()?, instance.dataset.to_dataset()?))
}

fn cmd_solve(settings: &RunSettings, data_path: Option<&PathBuf>) -> AppResult<SolveOutput> {
    let (params, data) = match data_path {
        Some(path) => load_instance(path)?,
        None => {
            let cell = single_cell(settings)?;
            let params = make_delta_spaced_params(
                cell.p,
                cell.k,
                settings.delta,
                child_seed(settings.seed, &[0]),
            )?;
            let data = sample_dataset(&params, cell.n, child_seed(settings.seed, &[1]))?;
            (params, data)
        }
    };
    let k = params.k();

    let init_vectors = match settings.init_mode {
        InitMode::Tensor => {
            let mut cfg = InitConfig::with_defaults(k, child_seed(settings.seed, &[2]));
            cfg.use_split = settings.use_split;
            cfg.split_fraction = settings.split_fraction;
            if let Some(l) = settings.restarts {
                cfg.power.restarts = l;
            }
            if let Some(n_iters) = settings.power_iters {
                cfg.power.iters = n_iters;
            }
            tensor_init(&data, k, &cfg)?.betas
        }
        InitMode::Random => {
            let mut rng = rng_for(child_seed(settings.seed, &[3]), &[]);
            (0..k)
                .map(|_| unit_sphere_vector(params.p(), &mut rng))
                .collect()
        }
        InitMode::Oracle => params.betas().to_vec(),
    };
    let init_error = estimation_error(&init_vectors, params.betas())?.error;

    let cfg = AltMinConfig {
        max_iters: settings.max_iters,
        resample: settings.resample,
        tol: settings.tol,
        seed: child_seed(settings.seed, &[4]),
        final_refit: settings.final_refit,
    };
    let (final_betas, trace) = altmin_run(&data, &init_vectors, &cfg, Some(&params))?;
    let report = estimation_error(&final_betas, params.betas())?;

    let predicted = assign_labels(data.ys(), data.xs(), &final_betas);
    let mut inverse = vec![0usize; k];
    for (est_idx, &truth_idx) in report.permutation.iter().enumerate() {
        inverse[truth_idx] = est_idx;
    }
    let accuracy = label_accuracy(&predicted, data.eval_labels(), &inverse)?;

    Ok(SolveOutput {
        init_error,
        report: ErrorReportJson::from(&report),
        weights: params.weights().to_vec(),
        label_accuracy: accuracy,
        iterations: trace.steps.len(),
        termination: termination_str(trace.termination).to_string(),
    })
}

fn cmd_trace(settings: &RunSettings, out: &PathBuf) -> AppResult<()> {
    let cell = single_cell(settings)?;
    let trials: Vec<_> = {
        use rayon::prelude::*;
        (0..settings.trials)
            .into_par_iter()
            .map(|trial| run_trial(&cell, 0, trial, settings))
            .collect()
    };
    if let Some(t) = trials.iter().find_map(|t| t.failure.clone()) {
        eprintln!("warning: at least one trial failed: {t}");
    }
    let (json_path, csv_path) = write_traces(out, settings, &trials)?;
    eprintln!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(())
}

fn cmd_grid(settings: &RunSettings, out: &PathBuf) -> AppResult<()> {
    let mut writer = GridCsvWriter::create(out)?;
    let mut seeds_per_cell: Vec<Vec<u64>> = Vec::new();
    run_grid(settings, |summary, outcomes| {
        seeds_per_cell.push(outcomes.iter().map(|t| t.seed).collect());
        writer.append(summary)
    })?;
    let sidecar = write_grid_sidecar(out, settings, &seeds_per_cell)?;
    eprintln!("wrote {} and {}", out.display(), sidecar.display());
    Ok(())
}

fn run() -> AppResult<()> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };

    let file = cli.config.as_deref().map(ConfigFile::load).transpose()?;
    let (flags, data_path) = match &cli.command {
        Command::Gen(f) | Command::Trace(f) | Command::Grid(f) => (f.clone(), None),
        Command::Solve { flags, data } => (flags.clone(), data.clone()),
    };
    let mut flag_values = flags.to_flag_values();
    // solve --data does not need a cell; give resolve() a placeholder
    if matches!(cli.command, Command::Solve { .. }) && data_path.is_some() {
        flag_values.p.get_or_insert_with(|| vec![1]);
        flag_values.k.get_or_insert_with(|| vec![1]);
        flag_values.n.get_or_insert_with(|| vec![1]);
    }
    let settings = resolve(file.as_ref(), &flag_values)?;
    let out = flags.out.clone().or_else(|| file.as_ref().and_then(|f| f.out.clone()));

    match &cli.command {
        Command::Gen(_) => {
            let instance = cmd_gen(&settings)?;
            match &out {
                Some(path) => write_json(path, &instance)?,
                None => {
                    let text = serde_json::to_string(&instance)
                        .expect("instance serializes");
                    println!("{text}");
                }
            }
        }
        Command::Solve { .. } => {
            let output = cmd_solve(&settings, data_path.as_ref())?;
            let text = serde_json::to_string(&output).expect("report serializes");
            println!("{text}");
            if let Some(path) = &out {
                write_json(path, &output)?;
            }
        }
        Command::Trace(_) => {
            let out = out.ok_or_else(|| AppError::BadArgs("trace requires --out".into()))?;
            cmd_trace(&settings, &out)?;
        }
        Command::Grid(_) => {
            let out = out.ok_or_else(|| AppError::BadArgs("grid requires --out".into()))?;
            cmd_grid(&settings, &out)?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
