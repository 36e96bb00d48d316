//! Alternating minimization: hard label assignment by smallest residual,
//! then per-cluster least squares, iterated until the labels stabilize.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use rand::Rng;

use crate::error::Error;
use crate::metrics::estimation_error;
use crate::model::{Dataset, MixtureParams};
use crate::rng::rng_for;
use crate::Result;

/// Rank tolerance factor for the cluster least-squares solves, relative to
/// the largest design-column norm.
const RANK_TOL_FACTOR: f64 = 1e-10;

/// Alternating-minimization settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltMinConfig {
    /// Maximum number of iterations.
    pub max_iters: usize,
    /// Use a fresh disjoint sample slice per iteration.
    pub resample: bool,
    /// Declare exact recovery once the matched error (against the ground
    /// truth, when provided) drops to this level.
    pub tol: f64,
    /// Seed for the resampling partition.
    pub seed: u64,
    /// Run one additional assignment + least-squares pass over the full
    /// sample set after termination.
    pub final_refit: bool,
}

impl AltMinConfig {
    /// Experiment defaults: 200 iterations, no resampling, recovery
    /// tolerance 1e-10.
    pub fn with_defaults(seed: u64) -> Self {
        AltMinConfig {
            max_iters: 200,
            resample: false,
            tol: 1e-10,
            seed,
            final_refit: false,
        }
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The label assignment repeated the previous iteration's exactly.
    LabelsStable,
    /// The iteration budget ran out.
    MaxIters,
    /// The matched error against the ground truth reached the tolerance.
    ExactRecovery,
    /// Every cluster was empty or rank deficient.
    DegenerateClusters,
}

/// Per-iteration statistics of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    /// 1-based iteration number.
    pub iteration: usize,
    /// Matched estimation error after the parameter update, when the ground
    /// truth is available.
    pub error: Option<f64>,
    /// Samples whose label changed relative to the previous assignment on
    /// the same slice (the full slice size when no comparison exists).
    pub label_changes: usize,
    /// Samples assigned to each cluster; sums to the slice size.
    pub cluster_sizes: Vec<usize>,
    /// Sum of squared best residuals at the assignment step, i.e. the
    /// min-residual objective of the pre-update parameters.
    pub residual: f64,
}

/// Full trace of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    /// Matched error of the starting estimate, when truth is available.
    pub initial_error: Option<f64>,
    pub steps: Vec<IterationStats>,
    pub termination: Termination,
}

/// Assigns each sample to the component with the smallest absolute
/// residual; ties break to the lowest index.
pub fn assign_labels(ys: &[f64], xs: &DMatrix<f64>, betas: &[DVector<f64>]) -> Vec<usize> {
    assign_with_residual(ys, xs, betas).0
}

fn assign_with_residual(
    ys: &[f64],
    xs: &DMatrix<f64>,
    betas: &[DVector<f64>],
) -> (Vec<usize>, f64) {
    let n = ys.len();
    let p = xs.ncols();
    let k = betas.len();
    debug_assert!(k >= 1);
    let mut labels = Vec::with_capacity(n);
    let mut objective = 0.0;
    for i in 0..n {
        let mut best = 0usize;
        let mut best_res = f64::INFINITY;
        for (j, beta) in betas.iter().enumerate() {
            let mut pred = 0.0;
            for c in 0..p {
                pred += xs[(i, c)] * beta[c];
            }
            let res = (ys[i] - pred).abs();
            if res < best_res {
                best_res = res;
                best = j;
            }
        }
        let _ = k;
        labels.push(best);
        objective += best_res * best_res;
    }
    (labels, objective)
}

/// Solves the per-cluster least-squares updates.
///
/// Clusters with a full-rank design get the minimum-norm residual solution
/// through a column-pivoted QR; empty or rank-deficient clusters keep the
/// previous estimate and set their degeneracy flag.
pub fn update_parameters(
    ys: &[f64],
    xs: &DMatrix<f64>,
    labels: &[usize],
    previous: &[DVector<f64>],
) -> (Vec<DVector<f64>>, Vec<bool>) {
    let p = xs.ncols();
    let k = previous.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &z) in labels.iter().enumerate() {
        members[z].push(i);
    }

    let mut betas = Vec::with_capacity(k);
    let mut degenerate = vec![false; k];
    for j in 0..k {
        let rows = &members[j];
        let m = rows.len();
        if m < p {
            betas.push(previous[j].clone());
            degenerate[j] = true;
            continue;
        }
        let mut a = DMatrix::zeros(m, p);
        let mut b = DVector::zeros(m);
        for (r, &i) in rows.iter().enumerate() {
            for c in 0..p {
                a[(r, c)] = xs[(i, c)];
            }
            b[r] = ys[i];
        }
        match least_squares(&a, &b) {
            Some(solution) => betas.push(solution),
            None => {
                betas.push(previous[j].clone());
                degenerate[j] = true;
            }
        }
    }
    (betas, degenerate)
}

/// Least squares by column-pivoted QR; `None` when the design is rank
/// deficient at the relative tolerance.
fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let p = a.ncols();
    let max_col_norm = (0..p)
        .map(|c| a.column(c).norm())
        .fold(0.0f64, f64::max);
    let tol = RANK_TOL_FACTOR * max_col_norm;

    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    // pivoting orders the diagonal by decreasing magnitude
    for i in 0..p {
        if r[(i, i)].abs() <= tol {
            return None;
        }
    }
    let mut z = qr.q().transpose() * b;
    if !r.solve_upper_triangular_mut(&mut z) {
        return None;
    }
    qr.p().inv_permute_rows(&mut z);
    Some(z)
}

/// Partitions `0..n` into `slices` disjoint index sets of equal size
/// `⌊n/slices⌋` by a seeded shuffle; together they cover the first
/// `⌊n/slices⌋·slices` positions of the shuffle.
pub fn resample_partition(n: usize, slices: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let slice_len = n / slices;
    if slice_len == 0 {
        return Err(Error::InvalidConfig(
            "resampling needs at least one sample per iteration",
        ));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = rng_for(seed, &[]);
    for i in (1..n).rev() {
        let j = (rng.random::<u64>() % (i as u64 + 1)) as usize;
        indices.swap(i, j);
    }
    Ok((0..slices)
        .map(|t| indices[t * slice_len..(t + 1) * slice_len].to_vec())
        .collect())
}

/// Runs alternating minimization from an initial estimate.
///
/// Without resampling every iteration uses the full sample set and the run
/// stops when the labels repeat; with resampling iteration `t` consumes the
/// `t`-th of `max_iters` disjoint equal-size slices. When the ground truth
/// is passed (for tracing), the run also stops once the matched error
/// reaches `cfg.tol`.
pub fn altmin_run(
    data: &Dataset,
    init: &[DVector<f64>],
    cfg: &AltMinConfig,
    truth: Option<&MixtureParams>,
) -> Result<(Vec<DVector<f64>>, RunTrace)> {
    let n = data.n();
    let p = data.p();
    let k = init.len();
    if cfg.max_iters == 0 {
        return Err(Error::InvalidConfig("iteration budget must be at least 1"));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("at least one component required"));
    }
    for v in init {
        if v.len() != p {
            return Err(Error::Dimension {
                what: "initial estimate length",
                expected: p,
                actual: v.len(),
            });
        }
    }
    if let Some(t) = truth {
        if t.k() != k || t.p() != p {
            return Err(Error::Dimension {
                what: "ground-truth shape",
                expected: k,
                actual: t.k(),
            });
        }
    }

    let slices: Option<Vec<Vec<usize>>> = if cfg.resample {
        Some(resample_partition(n, cfg.max_iters, cfg.seed)?)
    } else {
        None
    };

    let measure = |betas: &[DVector<f64>]| -> Option<f64> {
        truth.map(|t| {
            estimation_error(betas, t.betas())
                .expect("validated shapes")
                .error
        })
    };

    let mut betas: Vec<DVector<f64>> = init.to_vec();
    let initial_error = measure(&betas);
    let mut steps = Vec::new();
    let mut termination = Termination::MaxIters;
    let mut prev_labels: Option<Vec<usize>> = None;
    let mut last_error = initial_error;

    for t in 1..=cfg.max_iters {
        let slice_storage: Option<(Vec<f64>, DMatrix<f64>)> = slices.as_ref().map(|parts| {
            let idx = &parts[t - 1];
            let mut ys = Vec::with_capacity(idx.len());
            let mut xs = DMatrix::zeros(idx.len(), p);
            for (row, &i) in idx.iter().enumerate() {
                ys.push(data.ys()[i]);
                for c in 0..p {
                    xs[(row, c)] = data.xs()[(i, c)];
                }
            }
            (ys, xs)
        });
        let (ys, xs): (&[f64], &DMatrix<f64>) = match &slice_storage {
            Some((ys, xs)) => (ys, xs),
            None => (data.ys(), data.xs()),
        };

        let (labels, residual) = assign_with_residual(ys, xs, &betas);
        let mut cluster_sizes = vec![0usize; k];
        for &z in &labels {
            cluster_sizes[z] += 1;
        }
        let label_changes = match (&prev_labels, cfg.resample) {
            (Some(prev), false) => labels
                .iter()
                .zip(prev.iter())
                .filter(|(a, b)| a != b)
                .count(),
            _ => labels.len(),
        };

        if !cfg.resample && prev_labels.as_ref() == Some(&labels) {
            steps.push(IterationStats {
                iteration: t,
                error: last_error,
                label_changes: 0,
                cluster_sizes,
                residual,
            });
            termination = Termination::LabelsStable;
            break;
        }

        let (updated, degenerate) = update_parameters(ys, xs, &labels, &betas);
        if degenerate.iter().all(|&d| d) {
            steps.push(IterationStats {
                iteration: t,
                error: last_error,
                label_changes,
                cluster_sizes,
                residual,
            });
            termination = Termination::DegenerateClusters;
            break;
        }
        betas = updated;
        let error = measure(&betas);
        last_error = error;
        steps.push(IterationStats {
            iteration: t,
            error,
            label_changes,
            cluster_sizes,
            residual,
        });
        if let Some(e) = error {
            if e <= cfg.tol {
                termination = Termination::ExactRecovery;
                break;
            }
        }
        prev_labels = Some(labels);
    }

    if cfg.final_refit {
        let labels = assign_labels(data.ys(), data.xs(), &betas);
        let (updated, degenerate) = update_parameters(data.ys(), data.xs(), &labels, &betas);
        if !degenerate.iter().all(|&d| d) {
            betas = updated;
        }
    }

    Ok((
        betas,
        RunTrace {
            initial_error,
            steps,
            termination,
        },
    ))
}
