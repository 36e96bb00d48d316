//! Internal linear-algebra helpers shared across modules.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

/// Symmetric eigendecomposition with a deterministic presentation:
/// the input is symmetrized first, pairs are sorted by descending
/// eigenvalue (ties broken by original position) and each eigenvector is
/// sign-fixed so its largest-magnitude entry is positive.
pub(crate) fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let p = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(p, p);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).clone_owned();
        fix_sign(&mut v);
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

/// Flips `v` so that its largest-magnitude entry (first such entry on
/// ties) is positive.
pub(crate) fn fix_sign(v: &mut DVector<f64>) {
    let mut idx = 0;
    let mut best = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        *v = -&*v;
    }
}

/// Orthonormal basis of a Haar-random `k`-dimensional subspace: QR of a
/// Gaussian matrix with the diagonal of `R` forced positive.
pub(crate) fn random_orthonormal<R: rand::Rng + ?Sized>(
    p: usize,
    k: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    let g = DMatrix::from_fn(p, k, |_, _| {
        rng.sample::<f64, _>(rand_distr::StandardNormal)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            let negated = -q.column(j);
            q.set_column(j, &negated);
        }
    }
    q
}

/// Operator norm of a rectangular matrix via the spectrum of `AᵀA`.
pub(crate) fn operator_norm(a: &DMatrix<f64>) -> f64 {
    let gram = a.transpose() * a;
    let eig = gram.symmetric_eigen();
    eig.eigenvalues
        .iter()
        .fold(0.0f64, |m, &x| m.max(x.max(0.0)))
        .sqrt()
}

/// Operator norm of a symmetric matrix (largest eigenvalue magnitude).
pub(crate) fn symmetric_operator_norm(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::rng::rng_for;

    #[test]
    fn eigen_is_sorted_and_reconstructs() {
        let mut rng = rng_for(9, &[]);
        let g = DMatrix::from_fn(5, 5, |_, _| rng.random::<f64>() - 0.5);
        let sym = (&g + g.transpose()) * 0.5;
        let (vals, vecs) = sorted_symmetric_eigen(&sym);
        for w in vals.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(vals.clone()));
        let rebuilt = &vecs * lambda * vecs.transpose();
        assert!((&rebuilt - &sym).norm() < 1e-10);
    }

    #[test]
    fn random_orthonormal_has_orthonormal_columns() {
        let mut rng = rng_for(10, &[]);
        let q = random_orthonormal(7, 3, &mut rng);
        let gram = q.transpose() * &q;
        assert!((gram - DMatrix::<f64>::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn operator_norm_matches_symmetric_case() {
        let mut rng = rng_for(11, &[]);
        let g = DMatrix::from_fn(4, 4, |_, _| rng.random::<f64>() - 0.5);
        let sym = (&g + g.transpose()) * 0.5;
        let a = operator_norm(&sym);
        let b = symmetric_operator_norm(&sym);
        assert!((a - b).abs() < 1e-10);
    }
}
