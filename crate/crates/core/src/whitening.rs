//! Rank-`k` whitening of the second-moment matrix.
//!
//! The whitener maps the top-`k` eigenspace of a (near) PSD matrix to
//! coordinates in which the truncated matrix becomes the identity. Its
//! transpose-pseudoinverse maps spectral components back to the ambient
//! space.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::Error;
use crate::linalg::{fix_sign, operator_norm, sorted_symmetric_eigen, symmetric_operator_norm};
use crate::Result;

/// Whitening transform derived from a rank-`k` truncated eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitener {
    /// `p × k` whitening matrix: top-`k` eigenvectors scaled by the inverse
    /// square roots of the retained eigenvalues.
    pub matrix: DMatrix<f64>,
    /// `p × k` transpose-pseudoinverse of the whitener, computed by solving
    /// the `k × k` Gram system.
    pub pinv_t: DMatrix<f64>,
    /// Retained eigenvalues, positive and descending (clamped if needed).
    pub sigma: Vec<f64>,
    /// Gap between the `k`-th and `(k+1)`-th singular values of the input.
    pub rank_gap: f64,
    /// All singular values of the symmetrized input, descending.
    pub spectrum: Vec<f64>,
    /// Number of retained eigenvalues that were negative and clamped to the
    /// floor (sampling noise in a nearly-PSD input).
    pub clamped: usize,
}

impl Whitener {
    pub fn k(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn p(&self) -> usize {
        self.matrix.nrows()
    }

    /// The rank-`k` truncation this whitener was built from.
    pub fn truncated_input(&self) -> DMatrix<f64> {
        // W has columns u_j / sqrt(sigma_j); scaling a column by sigma_j
        // yields u_j·sqrt(sigma_j), whose outer product restores the
        // sigma_j-weighted eigenterm
        let p = self.p();
        let mut m = DMatrix::zeros(p, p);
        for (j, &s) in self.sigma.iter().enumerate() {
            let u = self.matrix.column(j) * s;
            m += &u * u.transpose();
        }
        m
    }
}

/// Floor below which a retained eigenvalue is treated as rank-deficient;
/// inverting smaller values would amplify sampling noise unboundedly.
fn eigen_floor(sigma_max: f64) -> f64 {
    (1e-8 * sigma_max).max(1e-10)
}

/// Builds the whitener from the top-`k` eigenpairs of the symmetrized
/// input.
///
/// Eigenpairs are ranked by magnitude (singular values of the symmetric
/// input). Fails with the full spectrum attached if the `k`-th singular
/// value does not clear the floor; negative retained eigenvalues are
/// clamped to the floor and counted instead of failing.
pub fn whiten(m2: &DMatrix<f64>, k: usize) -> Result<Whitener> {
    let p = m2.nrows();
    if m2.ncols() != p {
        return Err(Error::Dimension {
            what: "second-moment matrix must be square",
            expected: p,
            actual: m2.ncols(),
        });
    }
    if k == 0 || k > p {
        return Err(Error::Dimension {
            what: "whitening rank",
            expected: p,
            actual: k,
        });
    }

    let (vals, vecs) = sorted_symmetric_eigen(m2);
    // rank by magnitude: singular values of the symmetric input
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        vals[b]
            .abs()
            .partial_cmp(&vals[a].abs())
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let spectrum: Vec<f64> = order.iter().map(|&i| vals[i].abs()).collect();
    let sigma_max = spectrum[0];
    let floor = eigen_floor(sigma_max);
    if spectrum[k - 1] <= floor {
        return Err(Error::RankDeficient {
            required: k,
            spectrum,
        });
    }
    let rank_gap = spectrum[k - 1] - if k < p { spectrum[k] } else { 0.0 };

    let mut clamped = 0;
    // SVD semantics: the retained scale is the singular value, i.e. the
    // eigenvalue magnitude. A negative eigenvalue (sampling noise pushed a
    // weak direction below zero) contributes its magnitude and bumps the
    // warning counter; substituting the floor instead would amplify that
    // direction by orders of magnitude.
    let retained: Vec<(f64, usize)> = order[..k]
        .iter()
        .map(|&i| {
            let v = vals[i];
            if v < 0.0 {
                clamped += 1;
            }
            (v.abs().max(floor), i)
        })
        .collect();

    let sigma: Vec<f64> = retained.iter().map(|&(v, _)| v).collect();
    let mut w = DMatrix::zeros(p, k);
    for (col, &(v, i)) in retained.iter().enumerate() {
        let mut u = vecs.column(i).clone_owned();
        fix_sign(&mut u);
        w.set_column(col, &(u / v.sqrt()));
    }

    // (Wᵀ)† = W·(WᵀW)⁻¹, via the k×k Gram system
    let gram = w.transpose() * &w;
    let inv = gram
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::RankDeficient {
            required: k,
            spectrum: sigma.clone(),
        })?;
    let pinv_t = &w * inv;

    Ok(Whitener {
        matrix: w,
        pinv_t,
        sigma,
        rank_gap,
        spectrum,
        clamped,
    })
}

/// Outcome of comparing the whiteners of a matrix and a perturbation of it.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityProbe {
    /// Perturbation size relative to the `k`-th singular value.
    pub alpha: f64,
    /// Whether `alpha < 1/3`; no bound is claimed otherwise.
    pub precondition_met: bool,
    /// `‖Ŵ‖ ≤ 2‖W‖`
    pub opnorm_bound: bool,
    /// `‖Ŵ†‖ ≤ 2‖W†‖`
    pub pinv_opnorm_bound: bool,
    /// `‖W − ŴQ‖ ≤ 2α‖W‖` after orthogonal alignment `Q`
    pub diff_bound: bool,
    /// `‖W† − (ŴQ)†‖ ≤ 2α‖W†‖` after the same alignment
    pub pinv_diff_bound: bool,
}

impl StabilityProbe {
    /// All four bounds, meaningful only when the precondition holds.
    pub fn bounds_hold(&self) -> bool {
        self.opnorm_bound && self.pinv_opnorm_bound && self.diff_bound && self.pinv_diff_bound
    }
}

/// Whitens both inputs and checks the stability bounds relating the two
/// whiteners.
///
/// A whitener is unique only up to a right orthogonal factor, so the
/// perturbed whitener is aligned to the reference by the orthogonal
/// Procrustes transform before the difference bounds are evaluated; the
/// norm bounds are alignment-invariant.
pub fn whitening_stability_probe(
    a: &DMatrix<f64>,
    a_hat: &DMatrix<f64>,
    k: usize,
) -> Result<StabilityProbe> {
    if a.nrows() != a_hat.nrows() || a.ncols() != a_hat.ncols() {
        return Err(Error::Dimension {
            what: "probe matrices must share shape",
            expected: a.nrows(),
            actual: a_hat.nrows(),
        });
    }
    let reference = whiten(a, k)?;
    let perturbed = whiten(a_hat, k)?;

    let diff_norm = symmetric_operator_norm(&(a - a_hat));
    let sigma_k = reference.spectrum[k - 1];
    let alpha = diff_norm / sigma_k;
    let precondition_met = alpha < 1.0 / 3.0;
    if !precondition_met {
        return Ok(StabilityProbe {
            alpha,
            precondition_met,
            opnorm_bound: false,
            pinv_opnorm_bound: false,
            diff_bound: false,
            pinv_diff_bound: false,
        });
    }

    let w = &reference.matrix;
    let w_hat = &perturbed.matrix;
    // orthogonal Procrustes: align Ŵ to W
    let m = w_hat.transpose() * w;
    let svd = m.clone().svd(true, true);
    let q = svd.u.as_ref().unwrap() * svd.v_t.as_ref().unwrap();
    let w_hat_aligned = w_hat * &q;

    // pseudoinverses: W† = ((Wᵀ)†)ᵀ; alignment transposes through
    let w_pinv = reference.pinv_t.transpose();
    let w_hat_pinv_aligned = q.transpose() * perturbed.pinv_t.transpose();

    let norm_w = operator_norm(w);
    let norm_w_hat = operator_norm(w_hat);
    let norm_w_pinv = operator_norm(&w_pinv);
    let norm_w_hat_pinv = operator_norm(&perturbed.pinv_t.transpose());

    Ok(StabilityProbe {
        alpha,
        precondition_met,
        opnorm_bound: norm_w_hat <= 2.0 * norm_w,
        pinv_opnorm_bound: norm_w_hat_pinv <= 2.0 * norm_w_pinv,
        diff_bound: operator_norm(&(w - &w_hat_aligned)) <= 2.0 * alpha.max(1e-15) * norm_w,
        pinv_diff_bound: operator_norm(&(&w_pinv - &w_hat_pinv_aligned))
            <= 2.0 * alpha.max(1e-15) * norm_w_pinv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::rng::rng_for;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    #[test]
    fn identity_input_gives_orthogonal_whitener() {
        let m = DMatrix::<f64>::identity(3, 3);
        let w = whiten(&m, 3).unwrap();
        let gram = w.matrix.transpose() * &w.matrix;
        assert!((gram - DMatrix::<f64>::identity(3, 3)).norm() < 1e-10);
        assert_eq!(w.sigma, alloc::vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_input_matches_closed_form() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![4.0, 1.0, 0.0]));
        let w = whiten(&m, 2).unwrap();
        assert_relative_eq!(w.matrix[(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(w.matrix[(1, 1)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(w.matrix[(2, 0)], 0.0, epsilon = 1e-12);
        assert_relative_eq!(w.pinv_t[(0, 0)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(w.pinv_t[(1, 1)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(w.rank_gap, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn whitened_truncation_is_identity() {
        let mut rng = rng_for(17, &[]);
        let g = DMatrix::from_fn(6, 4, |_, _| rng.random::<f64>() - 0.5);
        let psd = &g * g.transpose();
        let w = whiten(&psd, 3).unwrap();
        let truncated = w.truncated_input();
        let gram = w.matrix.transpose() * truncated * &w.matrix;
        let err = (&gram - DMatrix::<f64>::identity(3, 3)).norm();
        assert!(err < 1e-8, "whitening identity error {err}");
        // pseudoinverse consistency
        let check = w.pinv_t.transpose() * &w.matrix;
        assert!((check - DMatrix::<f64>::identity(3, 3)).norm() < 1e-8);
    }

    #[test]
    fn rank_deficiency_carries_spectrum() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![2.0, 1e-14, 0.0]));
        match whiten(&m, 2) {
            Err(Error::RankDeficient { required, spectrum }) => {
                assert_eq!(required, 2);
                assert_eq!(spectrum.len(), 3);
                assert_relative_eq!(spectrum[0], 2.0);
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn probe_on_identical_inputs() {
        let mut rng = rng_for(19, &[]);
        let g = DMatrix::from_fn(5, 3, |_, _| rng.random::<f64>() - 0.5);
        let psd = &g * g.transpose();
        let probe = whitening_stability_probe(&psd, &psd, 3).unwrap();
        assert_eq!(probe.alpha, 0.0);
        assert!(probe.precondition_met);
        assert!(probe.bounds_hold());
    }

    #[test]
    fn probe_on_small_symmetric_perturbation() {
        let a = DMatrix::<f64>::identity(3, 3);
        let mut rng = rng_for(23, &[]);
        let g = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() - 0.5);
        let sym = (&g + g.transpose()) * 0.5;
        let scale = 0.05 / symmetric_operator_norm(&sym);
        let a_hat = &a + sym * scale;
        let probe = whitening_stability_probe(&a, &a_hat, 3).unwrap();
        assert!(probe.alpha <= 0.1, "alpha {}", probe.alpha);
        assert!(probe.precondition_met);
        assert!(probe.bounds_hold());
    }

    #[test]
    fn probe_gates_on_large_perturbation() {
        let a = DMatrix::<f64>::identity(3, 3);
        let a_hat = &a * 0.5; // ‖A - Â‖ = 0.5 ≥ σ₃/3
        let probe = whitening_stability_probe(&a, &a_hat, 3).unwrap();
        assert!(!probe.precondition_met);
        assert!(!probe.bounds_hold());
    }
}
