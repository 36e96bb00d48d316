//! Report emission: grid CSV with a JSON sidecar, and trace JSON/CSV.
//!
//! Output bytes are a pure function of the results passed in, so reruns
//! with the same configuration and seed produce identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunSettings;
use crate::experiments::{CellResult, TrialResult};
use crate::schema::{config_hash, termination_str, trace_steps, TrialTraceJson};
use crate::{AppError, AppResult};

pub const GRID_CSV_HEADER: &str = "n,p,k,trials,recovery_prob,median_error,median_iters,seconds";

/// Formats one grid CSV row.
pub fn grid_csv_row(r: &CellResult) -> String {
    format!(
        "{},{},{},{},{},{:e},{},{:.3}",
        r.cell.n,
        r.cell.p,
        r.cell.k,
        r.trials,
        r.recovery_probability,
        r.median_final_error,
        r.median_iterations,
        r.wall_time
    )
}

/// Incremental grid CSV writer; rows are flushed as cells finish so an
/// interrupted sweep leaves the completed cells on disk.
pub struct GridCsvWriter {
    path: PathBuf,
    file: BufWriter<File>,
}

impl GridCsvWriter {
    pub fn create(path: &Path) -> AppResult<Self> {
        let file = File::create(path).map_err(AppError::io(path))?;
        let mut writer = GridCsvWriter {
            path: path.to_path_buf(),
            file: BufWriter::new(file),
        };
        writer.write_line(GRID_CSV_HEADER)?;
        Ok(writer)
    }

    pub fn append(&mut self, result: &CellResult) -> AppResult<()> {
        let row = grid_csv_row(result);
        self.write_line(&row)
    }

    fn write_line(&mut self, line: &str) -> AppResult<()> {
        writeln!(self.file, "{line}").map_err(AppError::io(&self.path))?;
        self.file.flush().map_err(AppError::io(&self.path))
    }
}

/// Sidecar metadata stored next to a grid CSV.
#[derive(Debug, Serialize)]
pub struct GridSidecar<'a> {
    pub config: &'a RunSettings,
    pub config_hash: String,
    pub cells: Vec<CellMeta>,
}

#[derive(Debug, Serialize)]
pub struct CellMeta {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub trial_seeds: Vec<u64>,
}

/// Writes the whole grid report: CSV (already flushed incrementally by the
/// caller) plus the `<path>.meta.json` sidecar carrying config and seeds.
pub fn write_grid_sidecar(
    path: &Path,
    settings: &RunSettings,
    seeds_per_cell: &[Vec<u64>],
) -> AppResult<PathBuf> {
    let sidecar_path = sidecar_path(path);
    let sidecar = GridSidecar {
        config: settings,
        config_hash: config_hash(settings),
        cells: settings
            .cells
            .iter()
            .zip(seeds_per_cell)
            .map(|(c, seeds)| CellMeta {
                n: c.n,
                p: c.p,
                k: c.k,
                trial_seeds: seeds.clone(),
            })
            .collect(),
    };
    write_json(&sidecar_path, &sidecar)?;
    Ok(sidecar_path)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Serializes a value as JSON followed by a newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> AppResult<()> {
    let mut file = BufWriter::new(File::create(path).map_err(AppError::io(path))?);
    serde_json::to_writer(&mut file, value)
        .map_err(|e| AppError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })?;
    writeln!(file).map_err(AppError::io(path))?;
    file.flush().map_err(AppError::io(path))
}

/// Full trace file: configuration plus every per-iteration record.
#[derive(Debug, Serialize)]
pub struct TraceFile<'a> {
    pub config: &'a RunSettings,
    pub config_hash: String,
    pub trials: Vec<TrialTraceJson>,
}

pub fn trial_to_trace_json(t: &TrialResult) -> TrialTraceJson {
    TrialTraceJson {
        trial: t.trial,
        seed: t.seed,
        init_error: t.trace.initial_error,
        final_error: t.final_error,
        recovered: t.recovered,
        iterations: t.iterations,
        termination: termination_str(t.termination).to_string(),
        steps: trace_steps(&t.trace),
    }
}

/// Writes `<prefix>.json` and `<prefix>.csv` for a collection of traces.
/// The CSV is long-format: one row per (trial, iteration).
pub fn write_traces(
    prefix: &Path,
    settings: &RunSettings,
    trials: &[TrialResult],
) -> AppResult<(PathBuf, PathBuf)> {
    let json_path = prefix.with_extension("json");
    let csv_path = prefix.with_extension("csv");

    let file = TraceFile {
        config: settings,
        config_hash: config_hash(settings),
        trials: trials.iter().map(trial_to_trace_json).collect(),
    };
    write_json(&json_path, &file)?;

    let mut csv = BufWriter::new(File::create(&csv_path).map_err(AppError::io(&csv_path))?);
    writeln!(csv, "trial,iteration,error,label_changes,residual,cluster_sizes")
        .map_err(AppError::io(&csv_path))?;
    for t in trials {
        for step in &t.trace.steps {
            let error = step
                .error
                .map(|e| format!("{e:e}"))
                .unwrap_or_default();
            let sizes = step
                .cluster_sizes
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(";");
            writeln!(
                csv,
                "{},{},{},{},{:e},{}",
                t.trial, step.iteration, error, step.label_changes, step.residual, sizes
            )
            .map_err(AppError::io(&csv_path))?;
        }
    }
    csv.flush().map_err(AppError::io(&csv_path))?;
    Ok((json_path, csv_path))
}

/// Emits the final grid report for already computed results: CSV plus
/// sidecar. Used when results are assembled in memory.
pub fn emit_report(
    results: &[CellResult],
    settings: &RunSettings,
    seeds_per_cell: &[Vec<u64>],
    path: &Path,
) -> AppResult<()> {
    if results.is_empty() {
        return Err(AppError::BadArgs("no results to report".into()));
    }
    let mut writer = GridCsvWriter::create(path)?;
    for r in results {
        writer.append(r)?;
    }
    write_grid_sidecar(path, settings, seeds_per_cell)?;
    Ok(())
}
