//! Dense brute-force reference implementations for small graphs.
//!
//! Everything here is O(n²) memory and O(n³) time and is only meant for
//! checking the sparse path and the smoothing/denoising identities on graphs
//! of at most a few hundred nodes.

mod denoise;

pub use denoise::{
    denoise_objective, denoise_solve, dirichlet_energy, distance, prox_gradient_iterate,
    prox_gradient_trajectory,
};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::magnetic::ComplexSparseMatrix;
use crate::scalar::Scalar;

pub const MAX_ORACLE_N: usize = 512;

/// Dense Hermitian matrix as a symmetric real plane and an antisymmetric
/// imaginary plane, both row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseHermitian<T> {
    n: usize,
    re: Vec<T>,
    im: Vec<T>,
}

impl<T: Scalar> DenseHermitian<T> {
    /// Accepts planes that are Hermitian to within `1e-12` (absolute, scaled
    /// by the largest entry).
    pub fn new(n: usize, re: Vec<T>, im: Vec<T>) -> Result<Self> {
        if re.len() != n * n || im.len() != n * n {
            return Err(Error::Argument(format!("planes must hold {n}x{n} entries")));
        }
        let scale = re
            .iter()
            .chain(&im)
            .fold(T::zero(), |m, v| m.max(v.abs()))
            .max(T::one());
        let tol = T::from_f64_lossy(1e-12) * scale;
        for u in 0..n {
            for v in 0..=u {
                let (a, b) = (u * n + v, v * n + u);
                if (re[a] - re[b]).abs() > tol || (im[a] + im[b]).abs() > tol {
                    return Err(Error::Validation(format!(
                        "matrix is not Hermitian at ({u}, {v})"
                    )));
                }
            }
        }
        Ok(Self { n, re, im })
    }

    pub fn from_sparse(m: &ComplexSparseMatrix<T>) -> Self {
        let (re, im) = m.to_dense();
        Self { n: m.n(), re, im }
    }

    /// `I - self`
    pub fn identity_minus(&self) -> Self {
        let n = self.n;
        let mut re: Vec<T> = self.re.iter().map(|&v| -v).collect();
        for u in 0..n {
            re[u * n + u] += T::one();
        }
        Self {
            n,
            re,
            im: self.im.iter().map(|&v| -v).collect(),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Complex<T> {
        Complex::new(self.re[u * self.n + v], self.im[u * self.n + v])
    }

    pub fn matvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.n)
            .map(|u| {
                (0..self.n).fold(Complex::new(T::zero(), T::zero()), |acc, v| {
                    acc + self.get(u, v) * x[v]
                })
            })
            .collect()
    }

    /// Real part of `x† M x` (the imaginary part vanishes for Hermitian M).
    pub fn quadratic_form(&self, x: &[Complex<T>]) -> T {
        inner(x, &self.matvec(x)).re
    }

    pub fn rayleigh_quotient(&self, x: &[Complex<T>]) -> T {
        self.quadratic_form(x) / norm_sqr(x)
    }

    pub fn frobenius_norm(&self) -> T {
        self.re
            .iter()
            .chain(&self.im)
            .map(|&v| v * v)
            .sum::<T>()
            .sqrt()
    }

    /// `[[re, -im], [im, re]]`, the real symmetric matrix of size 2n whose
    /// spectrum is that of `self` with every eigenvalue doubled.
    fn real_embedding(&self) -> Vec<T> {
        let n = self.n;
        let m = 2 * n;
        let mut e = vec![T::zero(); m * m];
        for u in 0..n {
            for v in 0..n {
                let (r, i) = (self.re[u * n + v], self.im[u * n + v]);
                e[u * m + v] = r;
                e[u * m + n + v] = -i;
                e[(n + u) * m + v] = i;
                e[(n + u) * m + n + v] = r;
            }
        }
        e
    }
}

/// Ascending eigenvalues with complex unit eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenSystem<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<Complex<T>>>,
}

impl<T: Scalar> EigenSystem<T> {
    /// Coefficients `U† x`.
    pub fn project(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        self.vectors.iter().map(|u| inner(u, x)).collect()
    }

    /// `Σ_k c_k u_k`
    pub fn synthesize(&self, coeffs: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.vectors.first().map_or(0, Vec::len);
        let mut out = vec![Complex::new(T::zero(), T::zero()); n];
        for (c, u) in coeffs.iter().zip(&self.vectors) {
            for (o, &ui) in out.iter_mut().zip(u) {
                *o += *c * ui;
            }
        }
        out
    }

    /// Largest `‖M u_k - λ_k u_k‖`.
    pub fn max_residual(&self, m: &DenseHermitian<T>) -> T {
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&l, u)| {
                let mu = m.matvec(u);
                mu.iter()
                    .zip(u)
                    .map(|(&a, &b)| (a - b.scale(l)).norm_sqr())
                    .sum::<T>()
                    .sqrt()
            })
            .fold(T::zero(), T::max)
    }

    /// Largest deviation of `U† U` from the identity.
    pub fn orthonormality_error(&self) -> T {
        let mut worst = T::zero();
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let want = if i == j { T::one() } else { T::zero() };
                worst = worst.max((inner(a, b) - Complex::new(want, T::zero())).norm());
            }
        }
        worst
    }

    /// `‖M - U Λ U†‖_F`
    pub fn reconstruction_error(&self, m: &DenseHermitian<T>) -> T {
        let n = m.n();
        let mut err = T::zero();
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (l, u) in self.values.iter().zip(&self.vectors) {
                    acc += u[r] * u[c].conj() * *l;
                }
                err += (m.get(r, c) - acc).norm_sqr();
            }
        }
        err.sqrt()
    }
}

/// `a† b`
pub fn inner<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| {
            acc + x.conj() * y
        })
}

pub fn norm_sqr<T: Scalar>(x: &[Complex<T>]) -> T {
    x.iter().map(|v| v.norm_sqr()).sum()
}

/// Full eigendecomposition of a Hermitian matrix through its real symmetric
/// embedding.
///
/// The embedding's eigenvalues come in equal pairs. Each cluster of (numerically)
/// equal eigenvalues of size `2m` maps its real eigenvectors `(a; b)` to complex
/// vectors `a + ib`, which span the complex eigenspace of dimension `m`; a
/// pivoted complex Gram-Schmidt picks an orthonormal basis out of them. Each
/// vector is then rotated so its first non-negligible entry is real positive.
pub fn eigendecompose<T: Scalar>(m: &DenseHermitian<T>) -> Result<EigenSystem<T>> {
    let n = m.n();
    if n > MAX_ORACLE_N {
        return Err(Error::Argument(format!(
            "oracle limited to n <= {MAX_ORACLE_N}, got {n}"
        )));
    }
    let big = symmetric_eigen(2 * n, &m.real_embedding())?;
    let scale = big.values.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let tol = T::epsilon().sqrt() * T::from_f64_lossy(0.1) * scale;

    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    let mut start = 0;
    while start < 2 * n {
        let mut end = start + 1;
        while end < 2 * n && big.values[end] - big.values[end - 1] <= tol {
            end += 1;
        }
        let candidates: Vec<Vec<Complex<T>>> = (start..end)
            .map(|j| {
                (0..n)
                    .map(|k| {
                        Complex::new(big.vectors[k * 2 * n + j], big.vectors[(n + k) * 2 * n + j])
                    })
                    .collect()
            })
            .collect();
        // Each eigenvalue of the Hermitian matrix appears twice in the
        // embedding; the cluster mean stands in for all of its members.
        let mean =
            big.values[start..end].iter().copied().sum::<T>() / T::from_usize_lossy(end - start);
        for u in pivoted_basis(candidates, (end - start).div_ceil(2)) {
            values.push(mean);
            vectors.push(normalize_phase(u));
        }
        start = end;
    }
    if vectors.len() != n {
        return Err(Error::Validation(format!(
            "recovered {} eigenvectors from the embedding, expected {n}",
            vectors.len()
        )));
    }

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(EigenSystem {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: order.iter().map(|&i| vectors[i].clone()).collect(),
    })
}

fn pivoted_basis<T: Scalar>(
    mut residuals: Vec<Vec<Complex<T>>>,
    count: usize,
) -> Vec<Vec<Complex<T>>> {
    let mut basis: Vec<Vec<Complex<T>>> = Vec::with_capacity(count);
    // A cluster of 2m embedding vectors always holds a residual of norm >= 1/sqrt(m)
    // until m directions are chosen; dependent leftovers sit at rounding level.
    let floor = T::from_f64_lossy(1e-4);
    while basis.len() < count && !residuals.is_empty() {
        let (best, norm) = residuals
            .iter()
            .enumerate()
            .map(|(i, r)| (i, norm_sqr(r).sqrt()))
            .fold((0, T::neg_infinity()), |a, b| if b.1 > a.1 { b } else { a });
        if norm < floor {
            break;
        }
        let mut q = residuals.swap_remove(best);
        for b in &basis {
            let p = inner(b, &q);
            q.iter_mut().zip(b).for_each(|(x, &y)| *x -= p * y);
        }
        let qn = norm_sqr(&q).sqrt();
        q.iter_mut().for_each(|x| *x = x.unscale(qn));
        for r in residuals.iter_mut() {
            let p = inner(&q, r);
            r.iter_mut().zip(&q).for_each(|(x, &y)| *x -= p * y);
        }
        basis.push(q);
    }
    basis
}

fn normalize_phase<T: Scalar>(mut u: Vec<Complex<T>>) -> Vec<Complex<T>> {
    let peak = u.iter().fold(T::zero(), |a, v| a.max(v.norm()));
    let cut = T::epsilon().sqrt() * peak;
    if let Some(lead) = u.iter().copied().find(|v| v.norm() > cut) {
        let rot = lead.conj().unscale(lead.norm());
        u.iter_mut().for_each(|x| *x = *x * rot);
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedGraph;
    use crate::magnetic::magnetic_laplacian;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn diagonal_real() {
        let re = vec![3.0f64, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0];
        let m = DenseHermitian::new(3, re, vec![0.0; 9]).unwrap();
        let e = eigendecompose(&m).unwrap();
        assert_eq!(e.values.len(), 3);
        for (got, want) in e.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!((e.vectors[0][1] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((e.vectors[1][2] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((e.vectors[2][0] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn single_edge_laplacian_spectrum() {
        let g = DirectedGraph::from_edges(2, [(0, 1)]).unwrap();
        let l = DenseHermitian::from_sparse(&magnetic_laplacian::<f64>(&g, 0.25).unwrap());
        let e = eigendecompose(&l).unwrap();
        assert!(e.values[0].abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        assert!(e.max_residual(&l) < 1e-14);
        // First entry real positive after phase normalization.
        for u in &e.vectors {
            assert!(u[0].im.abs() < 1e-15 && u[0].re > 0.0);
        }
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let n = 16;
        let mut s = 99u64;
        let mut rnd = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut re = vec![0.0; n * n];
        let mut im = vec![0.0; n * n];
        for u in 0..n {
            re[u * n + u] = rnd();
            for v in 0..u {
                let (a, b) = (rnd(), rnd());
                re[u * n + v] = a;
                re[v * n + u] = a;
                im[u * n + v] = b;
                im[v * n + u] = -b;
            }
        }
        let m = DenseHermitian::new(n, re, im).unwrap();
        let e = eigendecompose(&m).unwrap();
        let fro = m.frobenius_norm();
        assert!(e.reconstruction_error(&m) <= 1e-8 * fro);
        assert!(e.orthonormality_error() < 1e-8);
        assert!(e.max_residual(&m) < 1e-8 * fro);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn degenerate_identity() {
        let n = 4;
        let mut re = vec![0.0f64; n * n];
        (0..n).for_each(|u| re[u * n + u] = 1.0);
        let m = DenseHermitian::new(n, re, vec![0.0; n * n]).unwrap();
        let e = eigendecompose(&m).unwrap();
        assert_eq!(e.vectors.len(), 4);
        assert!(e.orthonormality_error() < 1e-12);
        assert!(e.values.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn rejects_non_hermitian() {
        let re = vec![1.0, 2.0, 0.0, 1.0];
        assert!(matches!(
            DenseHermitian::new(2, re, vec![0.0; 4]),
            Err(Error::Validation(_))
        ));
        let im = vec![0.0, 1.0, 1.0, 0.0];
        assert!(matches!(
            DenseHermitian::new(2, vec![0.0; 4], im),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn deterministic() {
        let g = crate::graph::generate_random_digraph(12, 30, 4).unwrap();
        let l = DenseHermitian::from_sparse(&magnetic_laplacian::<f64>(&g, 0.1).unwrap());
        let a = eigendecompose(&l).unwrap();
        let b = eigendecompose(&l).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }
}
