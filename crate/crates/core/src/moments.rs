//! Response-weighted moment statistics.
//!
//! The solver consumes three empirical statistics of a sample slice: the
//! mean squared response, a centered second-moment matrix whose expectation
//! is the weighted sum of component outer products, and a whitened
//! third-moment tensor whose expectation is orthogonally decomposable.
//! Sums are accumulated with compensated (Kahan) summation: slices run to
//! 10^6 terms of mixed sign after centering.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::model::MixtureParams;
use crate::tensor::Tensor3;
use crate::Result;

/// Compensated scalar accumulator.
#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    #[inline]
    fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    fn value(&self) -> f64 {
        self.sum
    }
}

/// Flat buffer of compensated accumulators.
struct KahanBuf {
    sums: Vec<f64>,
    comps: Vec<f64>,
}

impl KahanBuf {
    fn new(len: usize) -> Self {
        KahanBuf {
            sums: vec![0.0; len],
            comps: vec![0.0; len],
        }
    }

    #[inline]
    fn add(&mut self, i: usize, x: f64) {
        let y = x - self.comps[i];
        let t = self.sums[i] + y;
        self.comps[i] = (t - self.sums[i]) - y;
        self.sums[i] = t;
    }
}

/// Mean squared response and centered second-moment matrix of a slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMomentSet {
    /// Mean of the squared responses.
    pub mean_square: f64,
    /// `p × p` centered second moment: half the response-weighted covariate
    /// outer-product mean, minus half the mean squared response on the
    /// diagonal. Symmetric by construction.
    pub matrix: DMatrix<f64>,
    /// Number of samples accumulated.
    pub samples: usize,
}

impl SecondMomentSet {
    /// Combines two disjoint slices into the statistics of their
    /// concatenation (sample-size-weighted recombination of the sums).
    pub fn merge(&self, other: &SecondMomentSet) -> Result<SecondMomentSet> {
        if self.matrix.nrows() != other.matrix.nrows() {
            return Err(Error::Dimension {
                what: "second-moment dimension",
                expected: self.matrix.nrows(),
                actual: other.matrix.nrows(),
            });
        }
        let n_a = self.samples as f64;
        let n_b = other.samples as f64;
        let total = n_a + n_b;
        let mean_square = (n_a * self.mean_square + n_b * other.mean_square) / total;
        let p = self.matrix.nrows();
        let eye = DMatrix::<f64>::identity(p, p);
        // undo each slice's centering, pool the raw sums, re-center
        let raw_a = (&self.matrix + &eye * (self.mean_square / 2.0)) * n_a;
        let raw_b = (&other.matrix + &eye * (other.mean_square / 2.0)) * n_b;
        let matrix = (raw_a + raw_b) / total - eye * (mean_square / 2.0);
        Ok(SecondMomentSet {
            mean_square,
            matrix,
            samples: self.samples + other.samples,
        })
    }
}

/// Whitened third-moment tensor of a slice.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenedThirdMoment {
    /// `k × k × k` whitened tensor, symmetric by construction.
    pub tensor: Tensor3,
    /// Cubed-response-weighted covariate mean (scaled by 1/6), in the
    /// original `p`-dimensional coordinates.
    pub cubic_mean: DVector<f64>,
    /// Number of samples accumulated.
    pub samples: usize,
}

/// Computes the second-moment statistics of a slice.
pub fn compute_second_moments(ys: &[f64], xs: &DMatrix<f64>) -> Result<SecondMomentSet> {
    let n = ys.len();
    if n == 0 {
        return Err(Error::EmptySlice);
    }
    if xs.nrows() != n {
        return Err(Error::Dimension {
            what: "covariate rows",
            expected: n,
            actual: xs.nrows(),
        });
    }
    let p = xs.ncols();

    let mut sq = Kahan::default();
    // accumulate the upper triangle only and mirror afterwards, so the
    // result is symmetric bit-for-bit
    let mut upper = KahanBuf::new(p * (p + 1) / 2);
    for i in 0..n {
        let y2 = ys[i] * ys[i];
        sq.add(y2);
        let mut idx = 0;
        for a in 0..p {
            let ya = y2 * xs[(i, a)];
            for b in a..p {
                upper.add(idx, ya * xs[(i, b)]);
                idx += 1;
            }
        }
    }
    let mean_square = sq.value() / n as f64;
    let scale = 1.0 / (2.0 * n as f64);
    let mut matrix = DMatrix::zeros(p, p);
    let mut idx = 0;
    for a in 0..p {
        for b in a..p {
            let mut v = upper.sums[idx] * scale;
            if a == b {
                v -= mean_square / 2.0;
            }
            matrix[(a, b)] = v;
            matrix[(b, a)] = v;
            idx += 1;
        }
    }
    Ok(SecondMomentSet {
        mean_square,
        matrix,
        samples: n,
    })
}

/// The symmetrization map sending a vector to the symmetric tensor with
/// entry `(a,b,c)` equal to `u_a·[b=c] + u_b·[a=c] + u_c·[a=b]`.
pub fn t_map(u: &DVector<f64>) -> Tensor3 {
    let p = u.len();
    let mut t = Tensor3::zeros(p);
    for a in 0..p {
        for b in 0..p {
            for c in 0..p {
                let mut v = 0.0;
                if b == c {
                    v += u[a];
                }
                if a == c {
                    v += u[b];
                }
                if a == b {
                    v += u[c];
                }
                if v != 0.0 {
                    t.set(a, b, c, v);
                }
            }
        }
    }
    t
}

/// Computes the whitened third-moment tensor of a slice without ever
/// materializing the ambient `p³` tensor.
///
/// Covariates are projected through `w` per sample; the symmetrization
/// correction is contracted in closed form from `wᵀ·(cubic mean)` and
/// `wᵀw` (verified against the dense definition in the test oracles).
pub fn compute_whitened_third_moment(
    ys: &[f64],
    xs: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> Result<WhitenedThirdMoment> {
    let n = ys.len();
    if n == 0 {
        return Err(Error::EmptySlice);
    }
    if xs.nrows() != n {
        return Err(Error::Dimension {
            what: "covariate rows",
            expected: n,
            actual: xs.nrows(),
        });
    }
    let p = xs.ncols();
    if w.nrows() != p {
        return Err(Error::Dimension {
            what: "whitening rows",
            expected: p,
            actual: w.nrows(),
        });
    }
    let k = w.ncols();
    if k > p {
        return Err(Error::Dimension {
            what: "whitening columns",
            expected: p,
            actual: k,
        });
    }

    // canonical index (a ≤ b ≤ c) into a packed triangular buffer
    let tri_len = k * (k + 1) * (k + 2) / 6;
    let mut cube = KahanBuf::new(tri_len);
    let mut cubic = KahanBuf::new(p);
    let mut wx = DVector::<f64>::zeros(k);
    for i in 0..n {
        let y = ys[i];
        let y3 = y * y * y;
        for a in 0..k {
            let mut acc = 0.0;
            for r in 0..p {
                acc += w[(r, a)] * xs[(i, r)];
            }
            wx[a] = acc;
        }
        let mut idx = 0;
        for a in 0..k {
            let ya = y3 * wx[a];
            for b in a..k {
                let yab = ya * wx[b];
                for c in b..k {
                    cube.add(idx, yab * wx[c]);
                    idx += 1;
                }
            }
        }
        for r in 0..p {
            cubic.add(r, y3 * xs[(i, r)]);
        }
    }

    let scale = 1.0 / (6.0 * n as f64);
    let cubic_mean = DVector::from_iterator(p, cubic.sums.iter().map(|&s| s * scale));

    // contracted symmetrization correction: with q = wᵀ·cubic_mean and
    // g = wᵀw, the dense correction contracts to
    // q_a·g_{bc} + q_b·g_{ac} + q_c·g_{ab}
    let q = w.transpose() * &cubic_mean;
    let g = w.transpose() * w;

    let mut tensor = Tensor3::zeros(k);
    let mut idx = 0;
    for a in 0..k {
        for b in a..k {
            for c in b..k {
                let raw = cube.sums[idx] * scale;
                let corr = q[a] * g[(b, c)] + q[b] * g[(a, c)] + q[c] * g[(a, b)];
                let v = raw - corr;
                // write all index orderings so symmetry is exact
                tensor.set(a, b, c, v);
                tensor.set(a, c, b, v);
                tensor.set(b, a, c, v);
                tensor.set(b, c, a, v);
                tensor.set(c, a, b, v);
                tensor.set(c, b, a, v);
                idx += 1;
            }
        }
    }
    debug_assert!(tensor.symmetry_error() < 1e-10);
    Ok(WhitenedThirdMoment {
        tensor,
        cubic_mean,
        samples: n,
    })
}

/// Expected second moment: the weight-scaled sum of component outer
/// products. Exact population quantity.
pub fn expected_second_moment(params: &MixtureParams) -> DMatrix<f64> {
    let p = params.p();
    let mut m = DMatrix::zeros(p, p);
    for (beta, &w) in params.betas().iter().zip(params.weights()) {
        for a in 0..p {
            for b in a..p {
                let v = w * beta[a] * beta[b];
                m[(a, b)] += v;
                if a != b {
                    m[(b, a)] += v;
                }
            }
        }
    }
    m
}

/// Expected moments: the weight-scaled sums of component outer squares and
/// cubes. Used as population oracles and for infinite-sample pipeline runs.
pub fn expected_moments(params: &MixtureParams) -> (DMatrix<f64>, Tensor3) {
    let p = params.p();
    let m2 = expected_second_moment(params);
    let mut m3 = Tensor3::zeros(p);
    for a in 0..p {
        for b in a..p {
            for c in b..p {
                let mut v = 0.0;
                for (beta, &w) in params.betas().iter().zip(params.weights()) {
                    v += w * beta[a] * beta[b] * beta[c];
                }
                m3.set(a, b, c, v);
                m3.set(a, c, b, v);
                m3.set(b, a, c, v);
                m3.set(b, c, a, v);
                m3.set(c, a, b, v);
                m3.set(c, b, a, v);
            }
        }
    }
    (m2, m3)
}
