use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::DirectedGraph;
use crate::dense::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::scalar::Scalar;

const OVERSAMPLE: usize = 8;

/// Positional features for graphs that ship without node attributes: the `k`
/// leading eigenvectors (descending eigenvalue) of
/// `S = D^-1/2 (A_s + I) D^-1/2`, where `A_s` is the symmetrised adjacency.
///
/// Block power iteration on `(S + I) / 2`, whose spectrum lies in `[0, 1]`, so
/// "largest magnitude" and "largest value" coincide. A few guard vectors beyond
/// `k` are carried, and a final Rayleigh-Ritz step rotates the block onto
/// eigenvector estimates. Columns come back with unit norm.
pub fn spectral_features<T: Scalar>(
    graph: &DirectedGraph,
    k: usize,
    iters: usize,
    seed: u64,
) -> Result<FeatureMatrix<T>> {
    let n = graph.n();
    if n == 0 {
        return Err(Error::Argument(
            "spectral features need a nonempty graph".into(),
        ));
    }
    if k > n {
        return Err(Error::Argument(format!("k = {k} exceeds node count {n}")));
    }
    if k == 0 {
        return Ok(FeatureMatrix::zeros(n, 0));
    }

    let op = RegularizedAdjacency::new(graph);
    let b = (k + OVERSAMPLE).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Block stored column-major: b columns of length n.
    let mut block: Vec<Vec<T>> = (0..b).map(|_| random_vec(n, &mut rng)).collect();
    orthonormalize(&mut block, &mut rng);
    let half = T::from_f64_lossy(0.5);
    let mut scratch = vec![T::zero(); n];
    for _ in 0..iters {
        for col in block.iter_mut() {
            op.apply(col, &mut scratch);
            for (c, &s) in col.iter_mut().zip(&scratch) {
                *c = half * (*c + s);
            }
        }
        orthonormalize(&mut block, &mut rng);
    }

    // Rayleigh-Ritz on S restricted to span(block).
    let images: Vec<Vec<T>> = block
        .iter()
        .map(|col| {
            let mut out = vec![T::zero(); n];
            op.apply(col, &mut out);
            out
        })
        .collect();
    let mut h = vec![T::zero(); b * b];
    for i in 0..b {
        for j in 0..=i {
            let v = dot(&block[i], &images[j]);
            h[i * b + j] = v;
            h[j * b + i] = v;
        }
    }
    let ritz = symmetric_eigen(b, &h)?;

    let mut out = FeatureMatrix::zeros(n, k);
    for c in 0..k {
        // Ascending order from the solver, we want descending.
        let j = b - 1 - c;
        let mut col = vec![T::zero(); n];
        for (i, basis) in block.iter().enumerate() {
            let w = ritz.vectors[i * b + j];
            for (x, &y) in col.iter_mut().zip(basis) {
                *x += w * y;
            }
        }
        let norm = dot(&col, &col).sqrt();
        let first = col
            .iter()
            .copied()
            .find(|v| v.abs() > T::epsilon().sqrt())
            .unwrap_or(T::one());
        let sign = if first < T::zero() {
            -T::one()
        } else {
            T::one()
        };
        for (r, &x) in col.iter().enumerate() {
            out.set(r, c, sign * x / norm);
        }
    }
    Ok(out)
}

/// Sparse `D^-1/2 (A_s + I) D^-1/2` with `A_s(u,v) = max(A(u,v), A(v,u))`.
pub(crate) struct RegularizedAdjacency<T> {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<T>,
}

impl<T: Scalar> RegularizedAdjacency<T> {
    pub(crate) fn new(graph: &DirectedGraph) -> Self {
        let n = graph.n();
        let mut ptr = vec![0usize];
        let mut idx = Vec::new();
        for u in 0..n {
            let row = merge_with_self(graph.out_neighbors(u), graph.in_neighbors(u), u);
            idx.extend_from_slice(&row);
            ptr.push(idx.len());
        }
        let inv: Vec<T> = (0..n)
            .map(|u| T::one() / T::from_usize_lossy(ptr[u + 1] - ptr[u]).sqrt())
            .collect();
        let mut val = Vec::with_capacity(idx.len());
        for u in 0..n {
            for &v in &idx[ptr[u]..ptr[u + 1]] {
                val.push(inv[u] * inv[v]);
            }
        }
        Self { ptr, idx, val }
    }

    pub(crate) fn apply(&self, x: &[T], out: &mut [T]) {
        for (u, o) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.ptr[u], self.ptr[u + 1]);
            *o = self.idx[lo..hi]
                .iter()
                .zip(&self.val[lo..hi])
                .map(|(&v, &w)| w * x[v])
                .sum();
        }
    }

    #[cfg(test)]
    pub(crate) fn to_dense(&self) -> Vec<T> {
        let n = self.ptr.len() - 1;
        let mut d = vec![T::zero(); n * n];
        for u in 0..n {
            for p in self.ptr[u]..self.ptr[u + 1] {
                d[u * n + self.idx[p]] = self.val[p];
            }
        }
        d
    }
}

/// Sorted union of two sorted lists plus `me`.
fn merge_with_self(a: &[usize], b: &[usize], me: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len() + 1);
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out.push(me);
    out.sort_unstable();
    out.dedup();
    out
}

fn random_vec<T: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::from_f64_lossy(z)
        })
        .collect()
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Columns that
/// collapse numerically are replaced by fresh random directions.
fn orthonormalize<T: Scalar>(cols: &mut [Vec<T>], rng: &mut ChaCha8Rng) {
    let tiny = T::epsilon().sqrt();
    for j in 0..cols.len() {
        let mut attempts = 0;
        loop {
            let (done, rest) = cols.split_at_mut(j);
            let col = &mut rest[0];
            let before = dot(col, col).sqrt();
            for _ in 0..2 {
                for q in done.iter() {
                    let p = dot(q, col);
                    for (c, &qv) in col.iter_mut().zip(q) {
                        *c -= p * qv;
                    }
                }
            }
            let norm = dot(col, col).sqrt();
            if norm > tiny * before && norm > T::min_positive_value() || attempts > 8 {
                col.iter_mut().for_each(|c| *c /= norm);
                break;
            }
            *col = random_vec(col.len(), rng);
            attempts += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_random_digraph;

    fn orthonormality_error(x: &FeatureMatrix<f64>) -> f64 {
        let (n, k) = x.shape();
        let mut worst: f64 = 0.0;
        for a in 0..k {
            for b in 0..k {
                let d: f64 = (0..n).map(|r| x.get(r, a) * x.get(r, b)).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((d - want).abs());
            }
        }
        worst
    }

    #[test]
    fn edgeless_graph_gives_orthonormal_pair() {
        let g = DirectedGraph::empty(5);
        let x = spectral_features::<f64>(&g, 2, 10, 1).unwrap();
        assert_eq!(x.shape(), (5, 2));
        assert!(orthonormality_error(&x) < 1e-10);
    }

    #[test]
    fn argument_errors() {
        let g = DirectedGraph::empty(3);
        assert!(matches!(
            spectral_features::<f64>(&g, 4, 10, 0),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            spectral_features::<f64>(&DirectedGraph::empty(0), 0, 10, 0),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn leading_ritz_value_is_one_on_connected_graph() {
        // Complete digraph on 6 nodes: S = J/6, so top eigenvalue is 1.
        let g = generate_random_digraph(6, 30, 0).unwrap();
        let x = spectral_features::<f64>(&g, 1, 50, 2).unwrap();
        for r in 0..6 {
            assert!((x.get(r, 0) - 1.0 / 6f64.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn ritz_values_match_dense_spectrum() {
        let g = crate::graph::generate_random_digraph(40, 120, 5).unwrap();
        let op = RegularizedAdjacency::<f64>::new(&g);
        let dense = op.to_dense();
        let eig = symmetric_eigen(40, &dense).unwrap();
        let k = 3;
        let x = spectral_features::<f64>(&g, k, 500, 1).unwrap();
        for c in 0..k {
            let col: Vec<f64> = (0..40).map(|r| x.get(r, c)).collect();
            let mut img = vec![0.0; 40];
            op.apply(&col, &mut img);
            let rq = dot(&col, &img);
            assert!(
                (rq - eig.values[39 - c]).abs() < 1e-8,
                "column {c}: {rq} vs {}",
                eig.values[39 - c]
            );
        }
    }
}
