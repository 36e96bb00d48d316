//! On-disk JSON schemas for parameters, datasets, traces and reports.
//!
//! Parameter sets: `{k, p, betas, weights, seed}` with `betas` as `k` rows
//! of `p` floats (row `j` is component `j`). Datasets: `{n, p, xs, ys,
//! labels, seed}` with `xs` as `n` rows of `p` floats. Serialization is
//! byte-stable given identical values.

use mixlin_core::nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use mixlin_core::altmin::{IterationStats, RunTrace, Termination};
use mixlin_core::metrics::ErrorReport;
use mixlin_core::model::{Dataset, MixtureParams};

use crate::{AppError, AppResult};

/// Serialized mixture parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsJson {
    pub k: usize,
    pub p: usize,
    /// Row-major: row `j` is component vector `j`.
    pub betas: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Seed the construction was generated from (informational).
    pub seed: u64,
}

impl ParamsJson {
    pub fn from_params(params: &MixtureParams, seed: u64) -> Self {
        ParamsJson {
            k: params.k(),
            p: params.p(),
            betas: params
                .betas()
                .iter()
                .map(|b| b.iter().cloned().collect())
                .collect(),
            weights: params.weights().to_vec(),
            seed,
        }
    }

    pub fn to_params(&self) -> AppResult<MixtureParams> {
        if self.betas.len() != self.k {
            return Err(AppError::BadArgs(format!(
                "betas row count {} does not match k={}",
                self.betas.len(),
                self.k
            )));
        }
        let betas: Vec<DVector<f64>> = self
            .betas
            .iter()
            .map(|row| DVector::from_vec(row.clone()))
            .collect();
        for b in &betas {
            if b.len() != self.p {
                return Err(AppError::BadArgs(format!(
                    "beta row length {} does not match p={}",
                    b.len(),
                    self.p
                )));
            }
        }
        Ok(MixtureParams::new(betas, self.weights.clone())?)
    }
}

/// Serialized dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetJson {
    pub n: usize,
    pub p: usize,
    /// Row-major: row `i` is covariate vector `i`.
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
    /// Hidden labels, retained for evaluation only.
    pub labels: Vec<usize>,
    pub seed: u64,
}

impl DatasetJson {
    pub fn from_dataset(data: &Dataset) -> Self {
        DatasetJson {
            n: data.n(),
            p: data.p(),
            xs: (0..data.n())
                .map(|i| (0..data.p()).map(|c| data.xs()[(i, c)]).collect())
                .collect(),
            ys: data.ys().to_vec(),
            labels: data.eval_labels().to_vec(),
            seed: data.seed(),
        }
    }

    pub fn to_dataset(&self) -> AppResult<Dataset> {
        if self.xs.len() != self.n || self.ys.len() != self.n {
            return Err(AppError::BadArgs("dataset row counts disagree".into()));
        }
        let mut xs = DMatrix::zeros(self.n, self.p);
        for (i, row) in self.xs.iter().enumerate() {
            if row.len() != self.p {
                return Err(AppError::BadArgs(format!(
                    "covariate row {i} has length {} instead of {}",
                    row.len(),
                    self.p
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                xs[(i, c)] = v;
            }
        }
        Ok(Dataset::from_parts(
            xs,
            self.ys.clone(),
            self.labels.clone(),
            self.seed,
        )?)
    }
}

/// Output of `gen`: a parameter set plus a dataset drawn from it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceJson {
    pub params: ParamsJson,
    pub dataset: DatasetJson,
}

/// Serialized matched-error report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReportJson {
    pub error: f64,
    pub permutation: Vec<usize>,
    pub per_component: Vec<f64>,
    pub mean_error: f64,
}

impl From<&ErrorReport> for ErrorReportJson {
    fn from(r: &ErrorReport) -> Self {
        ErrorReportJson {
            error: r.error,
            permutation: r.permutation.clone(),
            per_component: r.per_component.clone(),
            mean_error: r.mean_error,
        }
    }
}

pub fn termination_str(t: Termination) -> &'static str {
    match t {
        Termination::LabelsStable => "labels_stable",
        Termination::MaxIters => "max_iters",
        Termination::ExactRecovery => "exact_recovery",
        Termination::DegenerateClusters => "degenerate_clusters",
    }
}

/// One trace step as persisted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepJson {
    pub iteration: usize,
    pub error: Option<f64>,
    pub label_changes: usize,
    pub cluster_sizes: Vec<usize>,
    pub residual: f64,
}

impl From<&IterationStats> for StepJson {
    fn from(s: &IterationStats) -> Self {
        StepJson {
            iteration: s.iteration,
            error: s.error,
            label_changes: s.label_changes,
            cluster_sizes: s.cluster_sizes.clone(),
            residual: s.residual,
        }
    }
}

/// One solver run as persisted by `trace`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialTraceJson {
    pub trial: usize,
    pub seed: u64,
    pub init_error: Option<f64>,
    pub final_error: f64,
    pub recovered: bool,
    pub iterations: usize,
    pub termination: String,
    pub steps: Vec<StepJson>,
}

pub fn trace_steps(trace: &RunTrace) -> Vec<StepJson> {
    trace.steps.iter().map(StepJson::from).collect()
}

/// Output of `solve`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOutput {
    pub init_error: f64,
    pub report: ErrorReportJson,
    pub weights: Vec<f64>,
    pub label_accuracy: f64,
    pub iterations: usize,
    pub termination: String,
}

/// FNV-1a hash of the canonical JSON encoding; identifies a resolved
/// configuration in run metadata.
pub fn config_hash(value: &impl Serialize) -> String {
    let text = serde_json::to_string(value).expect("config serializes");
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}
