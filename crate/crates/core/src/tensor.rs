//! Dense symmetric third-order tensors.
//!
//! Dimensions stay small (the ambient dimension in test oracles, the
//! component count in the solver pipeline), so a flat dense array is the
//! right representation.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::rng::unit_sphere_vector;

/// Dense `dim × dim × dim` tensor of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    /// Zero tensor of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        Tensor3 {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    /// Builds a tensor entrywise.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(dim);
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    t.data[(a * dim + b) * dim + c] = f(a, b, c);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.dim + b) * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, value: f64) {
        self.data[(a * self.dim + b) * self.dim + c] = value;
    }

    /// Raw entries in row-major (a, b, c) order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Adds `coef · v⊗v⊗v` in place.
    pub fn add_scaled_cube(&mut self, coef: f64, v: &DVector<f64>) {
        debug_assert_eq!(v.len(), self.dim);
        let d = self.dim;
        for a in 0..d {
            let ca = coef * v[a];
            for b in 0..d {
                let cab = ca * v[b];
                for c in 0..d {
                    self.data[(a * d + b) * d + c] += cab * v[c];
                }
            }
        }
    }

    /// Trilinear form `T(u, v, w)`.
    pub fn apply3(&self, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for a in 0..d {
            let ua = u[a];
            if ua == 0.0 {
                continue;
            }
            for b in 0..d {
                let uv = ua * v[b];
                let base = (a * d + b) * d;
                let mut inner = 0.0;
                for c in 0..d {
                    inner += self.data[base + c] * w[c];
                }
                acc += uv * inner;
            }
        }
        acc
    }

    /// Partial contraction `T(I, u, v)`: the vector with `a`-th entry
    /// `Σ_{b,c} T_{a,b,c} u_b v_c`.
    pub fn apply_left(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        let mut out = DVector::zeros(d);
        for a in 0..d {
            let mut acc = 0.0;
            for b in 0..d {
                let ub = u[b];
                if ub == 0.0 {
                    continue;
                }
                let base = (a * d + b) * d;
                let mut inner = 0.0;
                for c in 0..d {
                    inner += self.data[base + c] * v[c];
                }
                acc += ub * inner;
            }
            out[a] = acc;
        }
        out
    }

    /// Multilinear change of basis `T(W, W, W)` for a `dim × r` matrix `W`,
    /// computed one mode at a time.
    pub fn contract(&self, w: &DMatrix<f64>) -> Tensor3 {
        assert_eq!(w.nrows(), self.dim, "contraction matrix row count");
        let d = self.dim;
        let r = w.ncols();

        // mode 0: s1[a, j, l] = Σ_i W[i, a] T[i, j, l]
        let mut s1 = vec![0.0; r * d * d];
        for a in 0..r {
            for i in 0..d {
                let wia = w[(i, a)];
                if wia == 0.0 {
                    continue;
                }
                for j in 0..d {
                    let src = (i * d + j) * d;
                    let dst = (a * d + j) * d;
                    for l in 0..d {
                        s1[dst + l] += wia * self.data[src + l];
                    }
                }
            }
        }
        // mode 1: s2[a, b, l] = Σ_j W[j, b] s1[a, j, l]
        let mut s2 = vec![0.0; r * r * d];
        for a in 0..r {
            for b in 0..r {
                for j in 0..d {
                    let wjb = w[(j, b)];
                    if wjb == 0.0 {
                        continue;
                    }
                    let src = (a * d + j) * d;
                    let dst = (a * r + b) * d;
                    for l in 0..d {
                        s2[dst + l] += wjb * s1[src + l];
                    }
                }
            }
        }
        // mode 2: out[a, b, c] = Σ_l W[l, c] s2[a, b, l]
        let mut out = Tensor3::zeros(r);
        for a in 0..r {
            for b in 0..r {
                let src = (a * r + b) * d;
                for c in 0..r {
                    let mut acc = 0.0;
                    for l in 0..d {
                        acc += w[(l, c)] * s2[src + l];
                    }
                    out.data[(a * r + b) * r + c] = acc;
                }
            }
        }
        out
    }

    /// Largest absolute deviation between entries related by an index
    /// permutation, relative to the largest entry magnitude.
    pub fn symmetry_error(&self) -> f64 {
        let d = self.dim;
        let scale = self
            .data
            .iter()
            .fold(0.0f64, |m, &x| m.max(x.abs()))
            .max(1e-300);
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let v = self.get(a, b, c);
                    for &(x, y, z) in &[(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                        worst = worst.max((v - self.get(x, y, z)).abs());
                    }
                }
            }
        }
        worst / scale
    }

    /// Averages the six index permutations of each entry.
    pub fn symmetrized(&self) -> Tensor3 {
        Tensor3::from_fn(self.dim, |a, b, c| {
            (self.get(a, b, c)
                + self.get(a, c, b)
                + self.get(b, a, c)
                + self.get(b, c, a)
                + self.get(c, a, b)
                + self.get(c, b, a))
                / 6.0
        })
    }

    /// Lower estimate of the operator norm `sup |T(v,v,v)|` over unit `v`,
    /// from random probes each polished by a few power steps.
    pub fn opnorm_probe<R: Rng + ?Sized>(
        &self,
        probes: usize,
        polish_steps: usize,
        rng: &mut R,
    ) -> f64 {
        let mut best = 0.0f64;
        for _ in 0..probes {
            let mut v = unit_sphere_vector(self.dim, rng);
            best = best.max(self.apply3(&v, &v, &v).abs());
            for _ in 0..polish_steps {
                // ascend |T(v,v,v)|: power step on T or -T depending on sign
                let sign = if self.apply3(&v, &v, &v) >= 0.0 { 1.0 } else { -1.0 };
                let next = self.apply_left(&v, &v) * sign;
                let norm = next.norm();
                if norm < 1e-300 {
                    break;
                }
                v = next / norm;
                best = best.max(self.apply3(&v, &v, &v).abs());
            }
        }
        best
    }

    /// Entrywise sum with a scaled tensor: `self + coef · other`.
    pub fn add_scaled(&mut self, coef: f64, other: &Tensor3) {
        assert_eq!(self.dim, other.dim, "tensor dimensions");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += coef * b;
        }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|&x| x * x).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::rng::rng_for;
    use approx::assert_relative_eq;

    fn random_symmetric(dim: usize, seed: u64) -> Tensor3 {
        let mut rng = rng_for(seed, &[]);
        let raw = Tensor3::from_fn(dim, |_, _, _| rng.random::<f64>() - 0.5);
        raw.symmetrized()
    }

    #[test]
    fn apply_left_matches_triple_loop() {
        let t = random_symmetric(4, 11);
        let mut rng = rng_for(12, &[]);
        let u = unit_sphere_vector(4, &mut rng);
        let v = unit_sphere_vector(4, &mut rng);
        let got = t.apply_left(&u, &v);
        for a in 0..4 {
            let mut want = 0.0;
            for b in 0..4 {
                for c in 0..4 {
                    want += t.get(a, b, c) * u[b] * v[c];
                }
            }
            assert_relative_eq!(got[a], want, max_relative = 1e-12);
        }
    }

    #[test]
    fn contract_matches_definition() {
        let t = random_symmetric(3, 21);
        let mut rng = rng_for(22, &[]);
        let w = DMatrix::from_fn(3, 2, |_, _| rng.random::<f64>() - 0.5);
        let got = t.contract(&w);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let mut want = 0.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            for l in 0..3 {
                                want += t.get(i, j, l) * w[(i, a)] * w[(j, b)] * w[(l, c)];
                            }
                        }
                    }
                    assert_relative_eq!(got.get(a, b, c), want, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn cube_tensor_has_unit_symmetry() {
        let mut rng = rng_for(5, &[]);
        let v = unit_sphere_vector(5, &mut rng);
        let mut t = Tensor3::zeros(5);
        t.add_scaled_cube(2.5, &v);
        assert!(t.symmetry_error() < 1e-12);
        assert_relative_eq!(t.apply3(&v, &v, &v), 2.5, max_relative = 1e-12);
    }
}
