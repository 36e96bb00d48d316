//! End-to-end spectral initialization.
//!
//! Pipeline: optional sample split, second moments on the first slice,
//! whitening, whitened third moment on the second slice, tensor power
//! decomposition, then reconstruction of weights and component vectors in
//! the ambient space.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::Error;
use crate::model::{Dataset, MixtureParams};
use crate::moments::{compute_second_moments, compute_whitened_third_moment, expected_moments};
use crate::rng::rng_for;
use crate::tensor_power::{power_decompose, PowerConfig};
use crate::whitening::whiten;
use crate::Result;

/// A recovered cubic-form value below this is clamped before the weight
/// reconstruction inverts its square.
const WEIGHT_CLAMP: f64 = 1e-6;

/// Configuration of the initialization pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitConfig {
    /// Fraction of samples assigned to the second-moment slice when
    /// splitting. Strictly between 0 and 1.
    pub split_fraction: f64,
    /// Whether to split the samples into two disjoint slices. Off by
    /// default: the experiments reuse the whole set for both moments.
    pub use_split: bool,
    /// Seed for the random split.
    pub seed: u64,
    /// Power-method budget.
    pub power: PowerConfig,
}

impl InitConfig {
    /// Defaults: no splitting, half/half fraction when enabled, power
    /// budget from the experiment defaults for `k` components.
    pub fn with_defaults(k: usize, seed: u64) -> Self {
        InitConfig {
            split_fraction: 0.5,
            use_split: false,
            seed: crate::rng::child_seed(seed, &[0]),
            power: PowerConfig::with_defaults(k, crate::rng::child_seed(seed, &[1])),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::InvalidConfig(
                "split fraction must lie strictly between 0 and 1",
            ));
        }
        Ok(())
    }
}

/// Diagnostics recorded alongside the estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct InitDiagnostics {
    /// Largest discarded singular value of the empirical second moment; a
    /// proxy for its distance to the rank-`k` population matrix.
    pub noise_floor: f64,
    /// Full singular-value spectrum of the empirical second moment.
    pub spectrum: Vec<f64>,
    /// Probe estimate of the operator norm of the tensor left after
    /// deflating all recovered pairs.
    pub power_residual: f64,
    /// Recovered values clamped during weight reconstruction.
    pub clamped_weights: usize,
    /// Negative eigenvalues clamped inside the whitener.
    pub clamped_eigenvalues: usize,
}

/// Spectral estimate: initial component vectors and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    pub betas: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
    pub diagnostics: InitDiagnostics,
}

/// Runs the spectral initialization on a dataset.
///
/// With splitting enabled the samples are partitioned at random into two
/// disjoint slices — one for the second moment, one for the third —
/// otherwise both statistics use the full set.
pub fn tensor_init(data: &Dataset, k: usize, cfg: &InitConfig) -> Result<SpectralEstimate> {
    cfg.validate()?;
    let n = data.n();
    if n < 2 {
        return Err(Error::InvalidConfig("need at least two samples"));
    }
    if k == 0 || k > data.p() {
        return Err(Error::Dimension {
            what: "component count",
            expected: data.p(),
            actual: k,
        });
    }

    if cfg.use_split {
        let mut indices: Vec<usize> = (0..n).collect();
        let mut rng = rng_for(cfg.seed, &[]);
        // Fisher-Yates
        for i in (1..n).rev() {
            let j = (rng.random::<u64>() % (i as u64 + 1)) as usize;
            indices.swap(i, j);
        }
        let n1 = ((n as f64 * cfg.split_fraction).round() as usize).clamp(1, n - 1);
        let (first, second) = indices.split_at(n1);
        let (ys1, xs1) = gather(data, first);
        let (ys2, xs2) = gather(data, second);
        init_from_slices(&ys1, &xs1, &ys2, &xs2, k, cfg)
    } else {
        init_from_slices(data.ys(), data.xs(), data.ys(), data.xs(), k, cfg)
    }
}

/// Runs the reconstruction on exact population moments instead of data;
/// recovers any non-degenerate parameter set to numerical precision.
pub fn tensor_init_from_population(
    params: &MixtureParams,
    cfg: &InitConfig,
) -> Result<SpectralEstimate> {
    cfg.validate()?;
    let k = params.k();
    let (m2, m3) = expected_moments(params);
    let whitener = whiten(&m2, k)?;
    let tensor = m3.contract(&whitener.matrix);
    reconstruct(&tensor, &whitener, k, cfg)
}

fn gather(data: &Dataset, indices: &[usize]) -> (Vec<f64>, DMatrix<f64>) {
    let p = data.p();
    let mut ys = Vec::with_capacity(indices.len());
    let mut xs = DMatrix::zeros(indices.len(), p);
    for (row, &i) in indices.iter().enumerate() {
        ys.push(data.ys()[i]);
        for c in 0..p {
            xs[(row, c)] = data.xs()[(i, c)];
        }
    }
    (ys, xs)
}

fn init_from_slices(
    ys1: &[f64],
    xs1: &DMatrix<f64>,
    ys2: &[f64],
    xs2: &DMatrix<f64>,
    k: usize,
    cfg: &InitConfig,
) -> Result<SpectralEstimate> {
    let moments = compute_second_moments(ys1, xs1)?;
    let whitener = whiten(&moments.matrix, k)?;
    let third = compute_whitened_third_moment(ys2, xs2, &whitener.matrix)?;
    reconstruct(&third.tensor, &whitener, k, cfg)
}

fn reconstruct(
    tensor: &crate::tensor::Tensor3,
    whitener: &crate::whitening::Whitener,
    k: usize,
    cfg: &InitConfig,
) -> Result<SpectralEstimate> {
    let pairs = power_decompose(tensor, k, &cfg.power)?;

    let mut betas = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    let mut clamped_weights = 0;
    let mut residual = tensor.clone();
    for pair in &pairs {
        // weight = 1/value²; tiny values would explode, so clamp them
        let effective = if pair.value < WEIGHT_CLAMP {
            clamped_weights += 1;
            WEIGHT_CLAMP
        } else {
            pair.value
        };
        weights.push(1.0 / (effective * effective));
        // map the whitened eigenvector back to the ambient space, scaled
        // by the recovered value
        betas.push(&whitener.pinv_t * &pair.vector * pair.value);
        residual.add_scaled_cube(-pair.value, &pair.vector);
    }

    let mut probe_rng = rng_for(cfg.power.seed, &[u64::MAX]);
    let power_residual = residual.opnorm_probe(100, 3, &mut probe_rng);
    let noise_floor = if whitener.spectrum.len() > k {
        whitener.spectrum[k]
    } else {
        0.0
    };

    Ok(SpectralEstimate {
        betas,
        weights,
        diagnostics: InitDiagnostics {
            noise_floor,
            spectrum: whitener.spectrum.clone(),
            power_residual,
            clamped_weights,
            clamped_eigenvalues: whitener.clamped,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::estimation_error;
    use crate::model::{make_delta_spaced_params, sample_dataset, MixtureParams};
    use alloc::vec;
    use approx::assert_relative_eq;

    fn unit(p: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(p);
        v[i] = 1.0;
        v
    }

    #[test]
    fn population_rank_one_recovery_is_exact() {
        let params = MixtureParams::new(vec![unit(4, 0)], vec![1.0]).unwrap();
        let cfg = InitConfig::with_defaults(1, 5);
        let est = tensor_init_from_population(&params, &cfg).unwrap();
        assert!((est.weights[0] - 1.0).abs() < 1e-8);
        assert!((&est.betas[0] - unit(4, 0)).norm() < 1e-8);
    }

    #[test]
    fn population_orthonormal_unequal_weights() {
        let betas = vec![unit(5, 0), unit(5, 1), unit(5, 2)];
        let weights = vec![0.5, 1.0 / 3.0, 1.0 / 6.0];
        let params = MixtureParams::new(betas.clone(), weights.clone()).unwrap();
        let cfg = InitConfig::with_defaults(3, 7);
        let est = tensor_init_from_population(&params, &cfg).unwrap();
        let report = estimation_error(&est.betas, &betas).unwrap();
        assert!(report.error < 1e-6, "vector error {}", report.error);
        for (j, &target) in report.permutation.iter().enumerate() {
            assert_relative_eq!(est.weights[j], weights[target], epsilon = 1e-6);
        }
    }

    #[test]
    fn population_recovery_for_spaced_params() {
        let params = make_delta_spaced_params(8, 3, 1.2, 21).unwrap();
        let cfg = InitConfig::with_defaults(3, 23);
        let est = tensor_init_from_population(&params, &cfg).unwrap();
        let report = estimation_error(&est.betas, params.betas()).unwrap();
        assert!(report.error < 1e-6, "vector error {}", report.error);
        for (j, &target) in report.permutation.iter().enumerate() {
            assert!((est.weights[j] - params.weights()[target]).abs() < 1e-6);
        }
    }

    #[test]
    fn split_slices_are_disjoint_and_cover() {
        // run the split logic directly
        let n = 101;
        let mut indices: Vec<usize> = (0..n).collect();
        let mut rng = rng_for(3, &[]);
        for i in (1..n).rev() {
            let j = (rng.random::<u64>() % (i as u64 + 1)) as usize;
            indices.swap(i, j);
        }
        let n1 = ((n as f64 * 0.5).round() as usize).clamp(1, n - 1);
        let (a, b) = indices.split_at(n1);
        let mut seen = vec![false; n];
        for &i in a.iter().chain(b.iter()) {
            assert!(!seen[i], "index {i} appears twice");
            seen[i] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn split_pipeline_runs_and_recovers() {
        // halving the samples roughly doubles the error scale, so the bound
        // here is loose; the population tests pin exactness
        let params = make_delta_spaced_params(6, 2, 1.2, 31).unwrap();
        let data = sample_dataset(&params, 20_000, 33).unwrap();
        let mut cfg = InitConfig::with_defaults(2, 35);
        cfg.use_split = true;
        let est = tensor_init(&data, 2, &cfg).unwrap();
        let report = estimation_error(&est.betas, params.betas()).unwrap();
        assert!(report.error < 0.6, "split-init error {}", report.error);
    }

    #[test]
    fn error_decreases_with_sample_size() {
        let params = make_delta_spaced_params(10, 3, 1.2, 41).unwrap();
        let mut medians = Vec::new();
        for &n in &[1_000usize, 10_000, 100_000] {
            let mut errors: Vec<f64> = (0..20)
                .map(|trial| {
                    let data = sample_dataset(&params, n, 100 + trial).unwrap();
                    let cfg = InitConfig::with_defaults(3, 200 + trial);
                    let est = tensor_init(&data, 3, &cfg).unwrap();
                    estimation_error(&est.betas, params.betas()).unwrap().error
                })
                .collect();
            errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push(errors[10]);
        }
        assert!(
            medians[0] >= medians[1] && medians[1] >= medians[2],
            "medians not decreasing: {medians:?}"
        );
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let params = make_delta_spaced_params(4, 2, 1.0, 1).unwrap();
        let data = sample_dataset(&params, 1, 2).unwrap();
        let cfg = InitConfig::with_defaults(2, 3);
        assert!(matches!(
            tensor_init(&data, 2, &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }
}
