//! Ground-truth mixture parameters and synthetic data generation.
//!
//! A problem instance is a set of `k` component vectors in `R^p` with mixing
//! weights. Samples pair a standard Gaussian covariate with the exact linear
//! response of one hidden component.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::Error;
use crate::linalg::{random_orthonormal, sorted_symmetric_eigen};
use crate::rng::rng_for;
use crate::Result;

const WEIGHT_SUM_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-12;

/// Ground-truth mixture: `k` component vectors in `R^p` and their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    betas: Vec<DVector<f64>>,
    weights: Vec<f64>,
}

impl MixtureParams {
    /// Validates and wraps raw components.
    ///
    /// Requires `1 ≤ k ≤ p`, every component norm at most one, and strictly
    /// positive weights summing to one.
    pub fn new(betas: Vec<DVector<f64>>, weights: Vec<f64>) -> Result<Self> {
        let k = betas.len();
        if k == 0 {
            return Err(Error::InvalidConfig("at least one component required"));
        }
        let p = betas[0].len();
        for b in &betas {
            if b.len() != p {
                return Err(Error::Dimension {
                    what: "component vector length",
                    expected: p,
                    actual: b.len(),
                });
            }
        }
        if k > p {
            return Err(Error::Dimension {
                what: "component count must not exceed dimension",
                expected: p,
                actual: k,
            });
        }
        for (j, b) in betas.iter().enumerate() {
            let norm = b.norm();
            if norm > 1.0 + NORM_TOL {
                return Err(Error::NormBound { component: j, norm });
            }
        }
        if weights.len() != k {
            return Err(Error::Dimension {
                what: "weight count",
                expected: k,
                actual: weights.len(),
            });
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w <= 0.0) || (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights);
        }
        Ok(MixtureParams { betas, weights })
    }

    pub fn k(&self) -> usize {
        self.betas.len()
    }

    pub fn p(&self) -> usize {
        self.betas[0].len()
    }

    pub fn betas(&self) -> &[DVector<f64>] {
        &self.betas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Components stacked as the columns of a `p × k` matrix.
    pub fn beta_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.p(), self.k());
        for (j, beta) in self.betas.iter().enumerate() {
            b.set_column(j, beta);
        }
        b
    }
}

/// A synthetic sample set. The hidden labels are retained for evaluation
/// only; solver code receives responses and covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    xs: DMatrix<f64>,
    ys: Vec<f64>,
    labels: Vec<usize>,
    seed: u64,
}

impl Dataset {
    /// Rebuilds a dataset from raw parts (e.g. loaded from disk).
    pub fn from_parts(
        xs: DMatrix<f64>,
        ys: Vec<f64>,
        labels: Vec<usize>,
        seed: u64,
    ) -> Result<Self> {
        if xs.nrows() != ys.len() {
            return Err(Error::Dimension {
                what: "response count",
                expected: xs.nrows(),
                actual: ys.len(),
            });
        }
        if xs.nrows() != labels.len() {
            return Err(Error::Dimension {
                what: "label count",
                expected: xs.nrows(),
                actual: labels.len(),
            });
        }
        Ok(Dataset {
            xs,
            ys,
            labels,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.ys.len()
    }

    pub fn p(&self) -> usize {
        self.xs.ncols()
    }

    /// Covariate rows, one sample per row.
    pub fn xs(&self) -> &DMatrix<f64> {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Covariate vector of sample `i`.
    pub fn covariate(&self, i: usize) -> DVector<f64> {
        self.xs.row(i).transpose()
    }

    /// Hidden component labels. Evaluation only: solver code must not read
    /// these; they exist to score label assignments after the fact.
    pub fn eval_labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Difficulty quantities of a parameter set: minimum pairwise separation,
/// minimum weight, the `k`-th singular value of the expected second moment,
/// and the near-orthonormality parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyReport {
    /// Minimum pairwise distance between components (infinite for `k = 1`).
    pub delta: f64,
    /// Smallest mixing weight.
    pub omega_min: f64,
    /// `k`-th singular value of the expected second-moment matrix.
    pub sigma_k: f64,
    /// One minus the smallest component norm.
    pub eta: f64,
    /// Largest off-diagonal inner-product magnitude.
    pub gamma: f64,
}

/// Builds `k` unit-norm components with every pairwise distance equal to
/// `delta`, supported on a Haar-random `k`-dimensional subspace, with equal
/// weights.
///
/// The component Gram matrix has unit diagonal and off-diagonal entries
/// `1 − delta²/2`; the components are `U Λ^{1/2} Vᵀ` for its
/// eigendecomposition `V Λ Vᵀ` and a random orthonormal `U`.
pub fn make_delta_spaced_params(
    p: usize,
    k: usize,
    delta: f64,
    seed: u64,
) -> Result<MixtureParams> {
    if k == 0 {
        return Err(Error::InvalidConfig("at least one component required"));
    }
    if k > p {
        return Err(Error::Dimension {
            what: "component count must not exceed dimension",
            expected: p,
            actual: k,
        });
    }
    let off_diag = 1.0 - delta * delta / 2.0;
    if k > 1 {
        if !(delta > 0.0) {
            return Err(Error::InfeasibleSpacing { k, delta });
        }
        // Gram matrix must stay PSD: its smallest eigenvalue is
        // 1 + (k-1)·off_diag for off_diag < 0.
        if off_diag < -1.0 / (k as f64 - 1.0) + 1e-9 {
            return Err(Error::InfeasibleSpacing { k, delta });
        }
    }

    let mut rng = rng_for(seed, &[]);
    let u = random_orthonormal(p, k, &mut rng);

    let gram = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { off_diag });
    let (vals, vecs) = sorted_symmetric_eigen(&gram);
    let sqrt_lambda = DMatrix::from_diagonal(&DVector::from_iterator(
        k,
        vals.iter().map(|&v| v.max(0.0).sqrt()),
    ));
    let b = u * sqrt_lambda * vecs.transpose();

    let betas: Vec<DVector<f64>> = (0..k).map(|j| b.column(j).clone_owned()).collect();
    let weights = vec![1.0 / k as f64; k];
    MixtureParams::new(betas, weights)
}

/// Draws `n` samples: a multinomial hidden label, a standard Gaussian
/// covariate, and the exact response of the labeled component.
/// Deterministic given the seed.
pub fn sample_dataset(params: &MixtureParams, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidConfig("sample count must be at least 1"));
    }
    let p = params.p();
    let k = params.k();
    let mut cumulative = Vec::with_capacity(k);
    let mut acc = 0.0;
    for &w in params.weights() {
        acc += w;
        cumulative.push(acc);
    }

    let mut rng = rng_for(seed, &[]);
    let mut xs = DMatrix::zeros(n, p);
    let mut ys = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let u: f64 = rng.random();
        let z = cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(k - 1);
        for c in 0..p {
            xs[(i, c)] = rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        let x = xs.row(i).transpose();
        ys.push(x.dot(&params.betas()[z]));
        labels.push(z);
    }
    Ok(Dataset {
        xs,
        ys,
        labels,
        seed,
    })
}

/// Computes the difficulty quantities of a parameter set.
pub fn difficulty(params: &MixtureParams) -> DifficultyReport {
    let k = params.k();
    let betas = params.betas();

    let mut delta = f64::INFINITY;
    let mut gamma = 0.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            delta = delta.min((&betas[i] - &betas[j]).norm());
            gamma = gamma.max(betas[i].dot(&betas[j]).abs());
        }
    }
    let omega_min = params
        .weights()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let eta = 1.0
        - betas
            .iter()
            .map(|b| b.norm())
            .fold(f64::INFINITY, f64::min);

    let m2 = crate::moments::expected_second_moment(params);
    let (vals, _) = sorted_symmetric_eigen(&m2);
    let sigma_k = vals[k - 1].max(0.0);

    DifficultyReport {
        delta,
        omega_min,
        sigma_k,
        eta,
        gamma,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_component_construction() {
        let params = make_delta_spaced_params(2, 1, 0.7, 0).unwrap();
        assert_eq!(params.k(), 1);
        assert_relative_eq!(params.betas()[0].norm(), 1.0, max_relative = 1e-12);
        assert_eq!(params.weights(), &[1.0]);
    }

    #[test]
    fn pairwise_inner_products_match_spacing() {
        let params = make_delta_spaced_params(10, 3, 1.2, 7).unwrap();
        let expected = 1.0 - 1.44 / 2.0;
        for i in 0..3 {
            assert_relative_eq!(params.betas()[i].norm(), 1.0, epsilon = 1e-10);
            for j in (i + 1)..3 {
                let ip = params.betas()[i].dot(&params.betas()[j]);
                assert_relative_eq!(ip, expected, epsilon = 1e-10);
                let dist = (&params.betas()[i] - &params.betas()[j]).norm();
                assert_relative_eq!(dist, 1.2, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn max_spacing_yields_orthonormal_set() {
        let params = make_delta_spaced_params(5, 5, core::f64::consts::SQRT_2, 3).unwrap();
        for i in 0..5 {
            for j in (i + 1)..5 {
                let ip = params.betas()[i].dot(&params.betas()[j]);
                assert!(ip.abs() < 1e-10, "inner product {ip}");
            }
        }
    }

    #[test]
    fn infeasible_spacing_is_rejected() {
        // for k = 5, off-diagonal must stay ≥ -1/4
        let too_far = (2.0f64 * (5.0 / 4.0)).sqrt() + 0.01;
        let err = make_delta_spaced_params(8, 5, too_far, 0).unwrap_err();
        assert!(matches!(err, Error::InfeasibleSpacing { .. }));
        let err = make_delta_spaced_params(3, 4, 1.0, 0).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn responses_are_exact_linear_functions() {
        let params = make_delta_spaced_params(6, 3, 1.2, 11).unwrap();
        let data = sample_dataset(&params, 200, 13).unwrap();
        for i in 0..data.n() {
            let z = data.eval_labels()[i];
            let expected = data.covariate(i).dot(&params.betas()[z]);
            assert_eq!(data.ys()[i], expected, "sample {i} response must be exact");
        }
    }

    #[test]
    fn single_model_response_is_first_coordinate() {
        let beta = DVector::from_vec(vec![1.0, 0.0]);
        let params = MixtureParams::new(vec![beta], vec![1.0]).unwrap();
        let data = sample_dataset(&params, 3, 5).unwrap();
        for i in 0..3 {
            assert_eq!(data.ys()[i], data.xs()[(i, 0)]);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let params = make_delta_spaced_params(4, 2, 1.0, 1).unwrap();
        let a = sample_dataset(&params, 50, 99).unwrap();
        let b = sample_dataset(&params, 50, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn label_frequencies_concentrate() {
        let params = make_delta_spaced_params(5, 3, 1.2, 2).unwrap();
        let data = sample_dataset(&params, 30_000, 8).unwrap();
        let mut counts = [0usize; 3];
        for &z in data.eval_labels() {
            counts[z] += 1;
        }
        for c in counts {
            let freq = c as f64 / 30_000.0;
            assert!((freq - 1.0 / 3.0).abs() < 0.02, "frequency {freq}");
        }
    }

    #[test]
    fn difficulty_of_orthonormal_components() {
        let k = 4;
        let betas: Vec<DVector<f64>> = (0..k)
            .map(|j| {
                let mut v = DVector::zeros(6);
                v[j] = 1.0;
                v
            })
            .collect();
        let params = MixtureParams::new(betas, vec![0.25; 4]).unwrap();
        let rep = difficulty(&params);
        assert_relative_eq!(rep.sigma_k, 0.25, epsilon = 1e-12);
        assert_relative_eq!(rep.delta, core::f64::consts::SQRT_2, epsilon = 1e-12);
        assert_eq!(rep.gamma, 0.0);
        assert!(rep.eta.abs() < 1e-12);
        assert_relative_eq!(rep.omega_min, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn difficulty_of_spaced_components_matches_closed_form() {
        let params = make_delta_spaced_params(10, 3, 1.2, 4).unwrap();
        let rep = difficulty(&params);
        // Gram matrix eigenvalues: 1 + 2·0.28 (once) and 1 - 0.28 (twice);
        // the expected second moment scales them by the weight 1/3.
        let expected = (1.0 - 0.28) / 3.0;
        assert_relative_eq!(rep.sigma_k, expected, epsilon = 1e-10);
        assert_relative_eq!(rep.delta, 1.2, epsilon = 1e-10);
        assert_relative_eq!(rep.gamma, 0.28, epsilon = 1e-10);
    }

    #[test]
    fn invalid_weights_are_rejected() {
        let betas = vec![DVector::from_vec(vec![1.0, 0.0])];
        assert!(matches!(
            MixtureParams::new(betas.clone(), vec![0.9]),
            Err(Error::InvalidWeights)
        ));
        let two = vec![
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ];
        assert!(matches!(
            MixtureParams::new(two, vec![1.2, -0.2]),
            Err(Error::InvalidWeights)
        ));
    }
}
