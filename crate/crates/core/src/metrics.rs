//! Permutation-matched estimation error and label-accuracy statistics.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::Result;

/// Components are matched exhaustively up to this size; larger problems use
/// the threshold/matching path.
const EXHAUSTIVE_LIMIT: usize = 8;

/// Matched component-wise error of an estimate against a reference set.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Worst matched component distance (the estimation error).
    pub error: f64,
    /// Minimizing assignment: estimate `j` is matched to reference
    /// `permutation[j]`.
    pub permutation: Vec<usize>,
    /// Distance of each estimate to its matched reference.
    pub per_component: Vec<f64>,
    /// Mean of the matched distances. Diagnostic only; the estimation error
    /// is the max, not the mean.
    pub mean_error: f64,
}

/// Which matching routine to run; `Auto` picks by size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchingStrategy {
    Auto,
    /// Scan all permutations (lexicographically first minimizer wins).
    Exhaustive,
    /// Binary search on the distance threshold plus bipartite matching.
    Bottleneck,
}

/// Estimation error: the minimum over assignments of the maximum
/// component-wise distance.
pub fn estimation_error(
    estimates: &[DVector<f64>],
    reference: &[DVector<f64>],
) -> Result<ErrorReport> {
    estimation_error_with(estimates, reference, MatchingStrategy::Auto)
}

/// Estimation error with an explicit matching strategy (the two paths are
/// cross-checked in the test suite).
pub fn estimation_error_with(
    estimates: &[DVector<f64>],
    reference: &[DVector<f64>],
    strategy: MatchingStrategy,
) -> Result<ErrorReport> {
    let k = estimates.len();
    if k == 0 || reference.len() != k {
        return Err(Error::Dimension {
            what: "component count",
            expected: reference.len(),
            actual: k,
        });
    }
    let p = estimates[0].len();
    for v in estimates.iter().chain(reference.iter()) {
        if v.len() != p {
            return Err(Error::Dimension {
                what: "component vector length",
                expected: p,
                actual: v.len(),
            });
        }
    }

    let distances = DMatrix::from_fn(k, k, |i, j| (&estimates[i] - &reference[j]).norm());
    let (error, permutation) = match strategy {
        MatchingStrategy::Exhaustive => exhaustive_matching(&distances),
        MatchingStrategy::Bottleneck => bottleneck_matching(&distances),
        MatchingStrategy::Auto => {
            if k <= EXHAUSTIVE_LIMIT {
                exhaustive_matching(&distances)
            } else {
                bottleneck_matching(&distances)
            }
        }
    };
    let per_component: Vec<f64> = (0..k).map(|j| distances[(j, permutation[j])]).collect();
    let mean_error = per_component.iter().sum::<f64>() / k as f64;
    Ok(ErrorReport {
        error,
        permutation,
        per_component,
        mean_error,
    })
}

/// Fraction of samples whose predicted label equals the permuted true
/// label: `predicted[i] == permutation[truth[i]]`.
pub fn label_accuracy(predicted: &[usize], truth: &[usize], permutation: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::Dimension {
            what: "label vector length",
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptySlice);
    }
    let k = permutation.len();
    let mut seen = vec![false; k];
    for &t in permutation {
        if t >= k || seen[t] {
            return Err(Error::InvalidConfig("permutation must be a bijection"));
        }
        seen[t] = true;
    }
    let mut correct = 0usize;
    for (&pred, &tru) in predicted.iter().zip(truth.iter()) {
        if tru >= k {
            return Err(Error::InvalidConfig("label out of range"));
        }
        if pred == permutation[tru] {
            correct += 1;
        }
    }
    Ok(correct as f64 / predicted.len() as f64)
}

/// Absolute weight errors under a fixed matching: `|w_est[j] -
/// w_ref[perm[j]]|`. Diagnostic companion to the vector error.
pub fn matched_weight_errors(
    weights_est: &[f64],
    weights_ref: &[f64],
    permutation: &[usize],
) -> Vec<f64> {
    permutation
        .iter()
        .enumerate()
        .map(|(j, &target)| (weights_est[j] - weights_ref[target]).abs())
        .collect()
}

/// Minimize the max matched distance by scanning permutations in
/// lexicographic order; the first minimizer is kept, so ties resolve
/// deterministically.
fn exhaustive_matching(distances: &DMatrix<f64>) -> (f64, Vec<usize>) {
    let k = distances.nrows();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = f64::INFINITY;
    let mut best_perm = perm.clone();
    loop {
        let worst = (0..k)
            .map(|j| distances[(j, perm[j])])
            .fold(0.0f64, f64::max);
        if worst < best {
            best = worst;
            best_perm.copy_from_slice(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    (best, best_perm)
}

/// Lexicographic next permutation; false once the order wraps.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Minimize the max matched distance by binary searching the threshold over
/// the distinct distances and testing feasibility with bipartite matching.
fn bottleneck_matching(distances: &DMatrix<f64>) -> (f64, Vec<usize>) {
    let k = distances.nrows();
    let mut thresholds: Vec<f64> = distances.iter().cloned().collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    thresholds.dedup();

    let mut lo = 0;
    let mut hi = thresholds.len() - 1;
    // the largest threshold always admits a perfect matching
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching(distances, thresholds[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let threshold = thresholds[lo];
    let matched = perfect_matching(distances, threshold)
        .expect("threshold found by search must be feasible");
    let error = (0..k)
        .map(|j| distances[(j, matched[j])])
        .fold(0.0f64, f64::max);
    (error, matched)
}

/// Kuhn's augmenting-path matching restricted to edges at or below the
/// threshold. Returns the row-to-column assignment if perfect.
fn perfect_matching(distances: &DMatrix<f64>, threshold: f64) -> Option<Vec<usize>> {
    let k = distances.nrows();
    let mut col_owner: Vec<Option<usize>> = vec![None; k];

    fn augment(
        row: usize,
        distances: &DMatrix<f64>,
        threshold: f64,
        visited: &mut [bool],
        col_owner: &mut [Option<usize>],
    ) -> bool {
        let k = distances.ncols();
        for col in 0..k {
            if visited[col] || distances[(row, col)] > threshold {
                continue;
            }
            visited[col] = true;
            if col_owner[col].is_none()
                || augment(
                    col_owner[col].unwrap(),
                    distances,
                    threshold,
                    visited,
                    col_owner,
                )
            {
                col_owner[col] = Some(row);
                return true;
            }
        }
        false
    }

    for row in 0..k {
        let mut visited = vec![false; k];
        if !augment(row, distances, threshold, &mut visited, &mut col_owner) {
            return None;
        }
    }
    let mut assignment = vec![0usize; k];
    for (col, owner) in col_owner.iter().enumerate() {
        assignment[owner.expect("perfect matching")] = col;
    }
    Some(assignment)
}
