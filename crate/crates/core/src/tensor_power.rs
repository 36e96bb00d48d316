//! Robust tensor power method with random restarts and deflation.
//!
//! Extracts eigenvalue/eigenvector pairs of a symmetric third-order tensor
//! one at a time: many restarted power iterations, selection of the restart
//! with the largest cubic form, a polish phase, then deflation of the
//! recovered rank-one term.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;
use nalgebra::DVector;

use crate::error::Error;
use crate::rng::{rng_for, unit_sphere_vector};
use crate::tensor::Tensor3;
use crate::Result;

/// Iterates below this norm count as degenerate (the cubic map vanished).
const DEGENERATE_NORM: f64 = 1e-150;
/// Polish stops once successive iterates differ by less than this.
const POLISH_STALL: f64 = 1e-13;
/// Redraws allowed per restart before it is declared degenerate.
const MAX_REDRAWS: usize = 10;

/// Restart and iteration budget of the power method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerConfig {
    /// Number of random restarts per extracted pair.
    pub restarts: usize,
    /// Power iterations per restart (and per polish phase).
    pub iters: usize,
    /// Seed; restart `l` for pair `j` draws from the stream `(seed, j, l)`.
    pub seed: u64,
}

impl PowerConfig {
    /// Experiment defaults: `200·k²` restarts and `⌈20·ln(max(k,2))⌉`
    /// iterations.
    pub fn with_defaults(k: usize, seed: u64) -> Self {
        let kf = k.max(2) as f64;
        PowerConfig {
            restarts: 200 * k * k,
            iters: (20.0 * kf.ln()).ceil() as usize,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restart count must be at least 1"));
        }
        if self.iters == 0 {
            return Err(Error::InvalidConfig("iteration count must be at least 1"));
        }
        Ok(())
    }
}

/// One recovered eigenpair: the cubic-form value and a unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: DVector<f64>,
}

/// Contraction `T(I, u, v)` with dimension checking.
pub fn tensor_apply(t: &Tensor3, u: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    if u.len() != t.dim() || v.len() != t.dim() {
        return Err(Error::Dimension {
            what: "tensor contraction vector length",
            expected: t.dim(),
            actual: if u.len() != t.dim() { u.len() } else { v.len() },
        });
    }
    Ok(t.apply_left(u, v))
}

/// Runs one restart: up to `iters` power steps from a fresh sphere draw,
/// redrawing on degeneracy. Returns the final iterate or `None` if the
/// redraw budget is exhausted.
fn run_restart<R: rand::Rng + ?Sized>(
    t: &Tensor3,
    iters: usize,
    rng: &mut R,
) -> Option<DVector<f64>> {
    let dim = t.dim();
    let mut redraws = 0;
    'trajectory: loop {
        let mut v = unit_sphere_vector(dim, rng);
        for _ in 0..iters {
            let next = t.apply_left(&v, &v);
            let norm = next.norm();
            if norm < DEGENERATE_NORM {
                redraws += 1;
                if redraws > MAX_REDRAWS {
                    return None;
                }
                continue 'trajectory;
            }
            v = next / norm;
        }
        return Some(v);
    }
}

/// Polish phase: power steps with an early exit once the iterate stalls.
fn polish(t: &Tensor3, mut v: DVector<f64>, iters: usize) -> DVector<f64> {
    for _ in 0..iters {
        let next = t.apply_left(&v, &v);
        let norm = next.norm();
        if norm < DEGENERATE_NORM {
            break;
        }
        let next = next / norm;
        let moved = (&next - &v).norm();
        v = next;
        if moved < POLISH_STALL {
            break;
        }
    }
    v
}

/// Extracts `count` eigenpairs from a symmetric tensor.
///
/// Per pair: `restarts` independent power trajectories, selection of the
/// trajectory maximizing the cubic form (ties to the lowest restart index),
/// a polish phase, a sign flip to make the value positive, then deflation.
/// Returned in extraction order. Deterministic given `(t, cfg)`.
pub fn power_decompose(t: &Tensor3, count: usize, cfg: &PowerConfig) -> Result<Vec<EigenPair>> {
    cfg.validate()?;
    if count > t.dim() {
        return Err(Error::Dimension {
            what: "pairs to extract",
            expected: t.dim(),
            actual: count,
        });
    }
    if t.symmetry_error() > 1e-8 {
        return Err(Error::InvalidConfig("input tensor is not symmetric"));
    }

    let mut work = t.clone();
    let mut pairs = Vec::with_capacity(count);
    for j in 0..count {
        let mut best: Option<(f64, DVector<f64>)> = None;
        for l in 0..cfg.restarts {
            let mut rng = rng_for(cfg.seed, &[j as u64, l as u64]);
            let Some(v) = run_restart(&work, cfg.iters, &mut rng) else {
                continue;
            };
            let value = work.apply3(&v, &v, &v);
            // strict comparison keeps the lowest restart index on ties
            if best.as_ref().map_or(true, |(b, _)| value > *b) {
                best = Some((value, v));
            }
        }
        let Some((_, chosen)) = best else {
            return Err(Error::DecompositionFailure { component: j });
        };
        let refined = polish(&work, chosen, cfg.iters);
        let mut value = work.apply3(&refined, &refined, &refined);
        let mut vector = refined;
        if value < 0.0 {
            // the cubic form is odd, so negating the vector flips the sign
            value = -value;
            vector = -vector;
        }
        work.add_scaled_cube(-value, &vector);
        pairs.push(EigenPair { value, vector });
    }
    Ok(pairs)
}
