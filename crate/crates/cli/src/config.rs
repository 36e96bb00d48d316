//! Run settings: defaults, JSON config files, and flag merging.
//!
//! The config file mirrors the CLI flags; explicitly passed flags override
//! file values, which override defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{AppError, AppResult};

/// How the solver is initialized in a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Moment-based spectral initialization.
    Tensor,
    /// Uniformly random unit vectors.
    Random,
    /// Start at the ground truth (fixed-point check).
    Oracle,
}

impl std::str::FromStr for InitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tensor" => Ok(InitMode::Tensor),
            "random" => Ok(InitMode::Random),
            "oracle" => Ok(InitMode::Oracle),
            other => Err(format!("unknown init mode {other:?} (tensor|random|oracle)")),
        }
    }
}

impl std::fmt::Display for InitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitMode::Tensor => "tensor",
            InitMode::Random => "random",
            InitMode::Oracle => "oracle",
        })
    }
}

/// One grid cell: a problem size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub p: usize,
    pub k: usize,
}

/// Fully resolved run settings shared by the subcommands.
#[derive(Debug, Clone, Serialize)]
pub struct RunSettings {
    pub cells: Vec<Cell>,
    pub trials: usize,
    pub delta: f64,
    pub init_mode: InitMode,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
    pub resample: bool,
    pub use_split: bool,
    pub split_fraction: f64,
    /// Power-method restart override (default: experiment formula in `k`).
    pub restarts: Option<usize>,
    /// Power-method iteration override.
    pub power_iters: Option<usize>,
    pub final_refit: bool,
    /// Record wall-clock times in reports. Off by default so rerunning a
    /// command with the same seed produces byte-identical files.
    pub timing: bool,
    /// Per-trial wall-clock budget in seconds; slower trials count as
    /// failed.
    pub timeout: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            cells: Vec::new(),
            trials: 100,
            delta: 1.2,
            init_mode: InitMode::Tensor,
            seed: 0,
            max_iters: 200,
            tol: 1e-10,
            resample: false,
            use_split: false,
            split_fraction: 0.5,
            restarts: None,
            power_iters: None,
            final_refit: false,
            timing: false,
            timeout: 60.0,
        }
    }
}

impl RunSettings {
    pub fn validate(&self) -> AppResult<()> {
        if self.trials == 0 {
            return Err(AppError::BadArgs("trials must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(AppError::BadArgs("T must be at least 1".into()));
        }
        if !(self.delta > 0.0) {
            return Err(AppError::BadArgs("delta must be positive".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(AppError::BadArgs(
                "split fraction must lie strictly between 0 and 1".into(),
            ));
        }
        for cell in &self.cells {
            if cell.k > cell.p {
                return Err(AppError::BadArgs(format!(
                    "cell (n={}, p={}, k={}) has k > p",
                    cell.n, cell.p, cell.k
                )));
            }
            if cell.n == 0 || cell.k == 0 {
                return Err(AppError::BadArgs("cells need n ≥ 1 and k ≥ 1".into()));
            }
        }
        Ok(())
    }
}

/// One scalar or a list, for grid axes in config files.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    One(usize),
    Many(Vec<usize>),
}

impl Axis {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Axis::One(v) => vec![*v],
            Axis::Many(vs) => vs.clone(),
        }
    }
}

/// JSON config file mirroring the CLI flags. All fields optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub p: Option<Axis>,
    pub k: Option<Axis>,
    pub n: Option<Axis>,
    /// Explicit cells; take precedence over the p/k/n cross product.
    pub cells: Option<Vec<Cell>>,
    pub delta: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub init: Option<InitMode>,
    pub resample: Option<bool>,
    pub split: Option<bool>,
    pub split_fraction: Option<f64>,
    #[serde(rename = "L")]
    pub restarts: Option<usize>,
    #[serde(rename = "N")]
    pub power_iters: Option<usize>,
    #[serde(rename = "T")]
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub final_refit: Option<bool>,
    pub timing: Option<bool>,
    pub timeout: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> AppResult<Self> {
        let text = fs::read_to_string(path).map_err(AppError::io(path))?;
        serde_json::from_str(&text)
            .map_err(|e| AppError::BadArgs(format!("config {}: {e}", path.display())))
    }
}

/// Flag values as parsed from the command line; `None` means "not passed".
#[derive(Debug, Clone, Default)]
pub struct FlagValues {
    pub p: Option<Vec<usize>>,
    pub k: Option<Vec<usize>>,
    pub n: Option<Vec<usize>>,
    pub delta: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub init: Option<InitMode>,
    pub resample: bool,
    pub split: bool,
    pub split_fraction: Option<f64>,
    pub restarts: Option<usize>,
    pub power_iters: Option<usize>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub final_refit: bool,
    pub timing: bool,
    pub timeout: Option<f64>,
}

/// Resolves settings from defaults, then the config file, then flags.
pub fn resolve(file: Option<&ConfigFile>, flags: &FlagValues) -> AppResult<RunSettings> {
    let mut s = RunSettings::default();

    let mut p_axis: Option<Vec<usize>> = None;
    let mut k_axis: Option<Vec<usize>> = None;
    let mut n_axis: Option<Vec<usize>> = None;
    let mut explicit_cells: Option<Vec<Cell>> = None;

    if let Some(f) = file {
        p_axis = f.p.as_ref().map(Axis::values);
        k_axis = f.k.as_ref().map(Axis::values);
        n_axis = f.n.as_ref().map(Axis::values);
        explicit_cells = f.cells.clone();
        if let Some(v) = f.delta {
            s.delta = v;
        }
        if let Some(v) = f.trials {
            s.trials = v;
        }
        if let Some(v) = f.seed {
            s.seed = v;
        }
        if let Some(v) = f.init {
            s.init_mode = v;
        }
        if let Some(v) = f.resample {
            s.resample = v;
        }
        if let Some(v) = f.split {
            s.use_split = v;
        }
        if let Some(v) = f.split_fraction {
            s.split_fraction = v;
        }
        if f.restarts.is_some() {
            s.restarts = f.restarts;
        }
        if f.power_iters.is_some() {
            s.power_iters = f.power_iters;
        }
        if let Some(v) = f.max_iters {
            s.max_iters = v;
        }
        if let Some(v) = f.tol {
            s.tol = v;
        }
        if let Some(v) = f.final_refit {
            s.final_refit = v;
        }
        if let Some(v) = f.timing {
            s.timing = v;
        }
        if let Some(v) = f.timeout {
            s.timeout = v;
        }
    }

    if flags.p.is_some() {
        p_axis = flags.p.clone();
    }
    if flags.k.is_some() {
        k_axis = flags.k.clone();
    }
    if flags.n.is_some() {
        n_axis = flags.n.clone();
    }
    if let Some(v) = flags.delta {
        s.delta = v;
    }
    if let Some(v) = flags.trials {
        s.trials = v;
    }
    if let Some(v) = flags.seed {
        s.seed = v;
    }
    if let Some(v) = flags.init {
        s.init_mode = v;
    }
    if flags.resample {
        s.resample = true;
    }
    if flags.split {
        s.use_split = true;
    }
    if let Some(v) = flags.split_fraction {
        s.split_fraction = v;
    }
    if flags.restarts.is_some() {
        s.restarts = flags.restarts;
    }
    if flags.power_iters.is_some() {
        s.power_iters = flags.power_iters;
    }
    if let Some(v) = flags.max_iters {
        s.max_iters = v;
    }
    if let Some(v) = flags.tol {
        s.tol = v;
    }
    if flags.final_refit {
        s.final_refit = true;
    }
    if flags.timing {
        s.timing = true;
    }
    if let Some(v) = flags.timeout {
        s.timeout = v;
    }

    s.cells = match explicit_cells {
        Some(cells) => cells,
        None => {
            let ps = p_axis.ok_or_else(|| AppError::BadArgs("missing --p".into()))?;
            let ks = k_axis.ok_or_else(|| AppError::BadArgs("missing --k".into()))?;
            let ns = n_axis.ok_or_else(|| AppError::BadArgs("missing --n".into()))?;
            let mut cells = Vec::new();
            for &p in &ps {
                for &k in &ks {
                    for &n in &ns {
                        cells.push(Cell { n, p, k });
                    }
                }
            }
            cells
        }
    };
    s.validate()?;
    Ok(s)
}

/// Parses a comma-separated list of positive integers.
pub fn parse_usize_list(raw: &str) -> Result<Vec<usize>, String> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|e| format!("invalid integer {part:?}: {e}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: ConfigFile = serde_json::from_str(
            r#"{"p": 5, "k": 2, "n": [100, 200], "trials": 7, "seed": 3, "init": "random"}"#,
        )
        .unwrap();
        let flags = FlagValues {
            trials: Some(9),
            init: Some(InitMode::Oracle),
            ..FlagValues::default()
        };
        let s = resolve(Some(&file), &flags).unwrap();
        assert_eq!(s.trials, 9);
        assert_eq!(s.init_mode, InitMode::Oracle);
        assert_eq!(s.seed, 3);
        assert_eq!(s.cells.len(), 2);
        assert_eq!(s.cells[0], Cell { n: 100, p: 5, k: 2 });
    }

    #[test]
    fn cross_product_cells() {
        let flags = FlagValues {
            p: Some(vec![5, 10]),
            k: Some(vec![2]),
            n: Some(vec![50, 60]),
            ..FlagValues::default()
        };
        let s = resolve(None, &flags).unwrap();
        assert_eq!(s.cells.len(), 4);
    }

    #[test]
    fn rejects_infeasible_cell() {
        let flags = FlagValues {
            p: Some(vec![2]),
            k: Some(vec![3]),
            n: Some(vec![50]),
            ..FlagValues::default()
        };
        assert!(resolve(None, &flags).is_err());
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_usize_list("5,10, 15").unwrap(), vec![5, 10, 15]);
        assert!(parse_usize_list("5,x").is_err());
    }
}
