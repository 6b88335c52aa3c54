//! Magnetic Laplacian and the normalized magnetic graph operator.
//!
//! For a binary digraph `A`:
//!
//! ```text
//! A_m(u,v)   = (A(u,v) + A(v,u)) / 2
//! Θ(u,v)     = 2πq (A(u,v) - A(v,u))
//! L_m        = D_m - A_m ⊙ exp(iΘ)
//! Â_m        = D̃^-1/2 (A_m + I) D̃^-1/2 ⊙ exp(iΘ)
//! ```
//!
//! Both are Hermitian and share the symmetric sparsity pattern of `A_m`
//! (plus the diagonal). Matrices are stored as two real value planes over one
//! CSR pattern so a complex product becomes four real sparse-dense products.

mod io;
mod spmm;

pub use io::{decode_matrix, encode_matrix, read_matrix, write_matrix, LDCM_MAGIC};
pub use spmm::complex_spmm;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::scalar::Scalar;

/// Largest admissible phase parameter: beyond a quarter turn `cos Θ` changes
/// sign and the real plane stops encoding edge presence.
pub const Q_MAX: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MagneticConfig {
    pub q: f64,
    pub add_self_loops: bool,
}

impl MagneticConfig {
    pub fn new(q: f64, add_self_loops: bool) -> Result<Self> {
        check_q(q)?;
        Ok(Self { q, add_self_loops })
    }
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if !(0.0..=Q_MAX).contains(&q) {
        return Err(Error::Argument(format!("q = {q} outside [0, {Q_MAX}]")));
    }
    Ok(())
}

/// Hermitian-structured sparse matrix: symmetric CSR pattern, real and
/// imaginary planes aligned to it.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSparseMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    re: Vec<T>,
    im: Vec<T>,
}

impl<T: Scalar> ComplexSparseMatrix<T> {
    /// Assemble from raw CSR arrays, checking shape and ordering.
    pub fn from_parts(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        re: Vec<T>,
        im: Vec<T>,
    ) -> Result<Self> {
        let nnz = col_idx.len();
        if row_ptr.len() != n + 1 || row_ptr[0] != 0 || row_ptr[n] != nnz {
            return Err(Error::Format(
                "row pointer array inconsistent with nnz".into(),
            ));
        }
        if re.len() != nnz || im.len() != nnz {
            return Err(Error::Format("value planes do not match pattern".into()));
        }
        for u in 0..n {
            if row_ptr[u] > row_ptr[u + 1] {
                return Err(Error::Format(format!("row pointer decreases at row {u}")));
            }
            let row = &col_idx[row_ptr[u]..row_ptr[u + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&v| v >= n) {
                return Err(Error::Format(format!(
                    "row {u}: columns unsorted or out of range"
                )));
            }
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            re,
            im,
        })
    }

    /// Identity with an empty imaginary plane.
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            re: vec![T::one(); n],
            im: vec![T::zero(); n],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn re(&self) -> &[T] {
        &self.re
    }

    pub fn im(&self) -> &[T] {
        &self.im
    }

    /// `(re, im)` at `(u, v)`, zero when not stored.
    pub fn get(&self, u: usize, v: usize) -> (T, T) {
        let (lo, hi) = (self.row_ptr[u], self.row_ptr[u + 1]);
        match self.col_idx[lo..hi].binary_search(&v) {
            Ok(p) => (self.re[lo + p], self.im[lo + p]),
            Err(_) => (T::zero(), T::zero()),
        }
    }

    /// Iterate `(u, v, re, im)` over stored entries in row order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T, T)> + '_ {
        (0..self.n).flat_map(move |u| {
            (self.row_ptr[u]..self.row_ptr[u + 1])
                .map(move |p| (u, self.col_idx[p], self.re[p], self.im[p]))
        })
    }

    /// Exact Hermitian check: `re(u,v) == re(v,u)`, `im(u,v) == -im(v,u)` and
    /// a real diagonal, compared bit-for-bit.
    pub fn is_hermitian(&self) -> bool {
        self.entries().all(|(u, v, re, im)| {
            let (re_t, im_t) = self.get(v, u);
            let pattern_ok = self.col_idx[self.row_ptr[v]..self.row_ptr[v + 1]]
                .binary_search(&u)
                .is_ok();
            pattern_ok && re == re_t && im == -im_t && (u != v || im == T::zero())
        })
    }

    /// Dense `(re, im)` row-major planes.
    pub fn to_dense(&self) -> (Vec<T>, Vec<T>) {
        let n = self.n;
        let mut re = vec![T::zero(); n * n];
        let mut im = vec![T::zero(); n * n];
        for (u, v, r, i) in self.entries() {
            re[u * n + v] = r;
            im[u * n + v] = i;
        }
        (re, im)
    }
}

/// Neighbour relation of one stored pair in the symmetric pattern.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Link {
    Diagonal,
    /// Only `u -> v`.
    Forward,
    /// Only `v -> u`.
    Backward,
    Reciprocal,
}

impl Link {
    /// Entry of `A_m`.
    fn weight<T: Scalar>(self) -> T {
        match self {
            Link::Forward | Link::Backward => T::from_f64_lossy(0.5),
            Link::Reciprocal | Link::Diagonal => T::one(),
        }
    }

    /// Sign of `A(u,v) - A(v,u)`.
    fn orientation<T: Scalar>(self) -> T {
        match self {
            Link::Forward => T::one(),
            Link::Backward => -T::one(),
            Link::Reciprocal | Link::Diagonal => T::zero(),
        }
    }
}

/// Row-wise symmetric pattern of `A + A^T` (optionally with the diagonal),
/// each entry tagged with its orientation.
fn symmetric_pattern(
    graph: &DirectedGraph,
    with_diagonal: bool,
) -> (Vec<usize>, Vec<usize>, Vec<Link>) {
    let n = graph.n();
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut cols = Vec::with_capacity(2 * graph.m() + if with_diagonal { n } else { 0 });
    let mut links = Vec::with_capacity(cols.capacity());
    for u in 0..n {
        let (out, inc) = (graph.out_neighbors(u), graph.in_neighbors(u));
        let (mut i, mut j) = (0, 0);
        let mut diag_pending = with_diagonal;
        loop {
            let a = out.get(i).copied().unwrap_or(usize::MAX);
            let b = inc.get(j).copied().unwrap_or(usize::MAX);
            let next = a.min(b);
            if diag_pending && u <= next {
                cols.push(u);
                links.push(Link::Diagonal);
                diag_pending = false;
            }
            if next == usize::MAX {
                break;
            }
            let link = match (a == next, b == next) {
                (true, true) => Link::Reciprocal,
                (true, false) => Link::Forward,
                _ => Link::Backward,
            };
            if a == next {
                i += 1;
            }
            if b == next {
                j += 1;
            }
            cols.push(next);
            links.push(link);
        }
        row_ptr.push(cols.len());
    }
    (row_ptr, cols, links)
}

/// `A_m(u,v) = (A(u,v) + A(v,u)) / 2`: 0.5 for one-way pairs, 1 for
/// reciprocal ones. Imaginary plane is zero.
pub fn symmetrized_adjacency<T: Scalar>(graph: &DirectedGraph) -> ComplexSparseMatrix<T> {
    let (row_ptr, col_idx, links) = symmetric_pattern(graph, false);
    let re = links.iter().map(|l| l.weight()).collect();
    let im = vec![T::zero(); links.len()];
    ComplexSparseMatrix {
        n: graph.n(),
        row_ptr,
        col_idx,
        re,
        im,
    }
}

/// The antisymmetric phase matrix `Θ` on the symmetric pattern, returned as
/// `(row_ptr, col_idx, values)`.
pub fn phase_matrix<T: Scalar>(
    graph: &DirectedGraph,
    q: f64,
) -> Result<(Vec<usize>, Vec<usize>, Vec<T>)> {
    check_q(q)?;
    let (row_ptr, col_idx, links) = symmetric_pattern(graph, false);
    let angle = T::from_f64_lossy(2.0 * std::f64::consts::PI * q);
    let theta = links.iter().map(|l| l.orientation::<T>() * angle).collect();
    Ok((row_ptr, col_idx, theta))
}

/// `(cos 2πq, sin 2πq)` in `T`. Entries take the sine with the orientation
/// sign, which keeps the imaginary plane exactly antisymmetric.
fn phase<T: Scalar>(q: f64) -> (T, T) {
    let angle = 2.0 * std::f64::consts::PI * q;
    (
        T::from_f64_lossy(angle.cos()),
        T::from_f64_lossy(angle.sin()),
    )
}

/// Magnetic Laplacian `D_m - A_m ⊙ exp(iΘ)`. Positive semidefinite.
pub fn magnetic_laplacian<T: Scalar>(
    graph: &DirectedGraph,
    q: f64,
) -> Result<ComplexSparseMatrix<T>> {
    check_q(q)?;
    let (row_ptr, col_idx, links) = symmetric_pattern(graph, true);
    let (cos, sin) = phase::<T>(q);
    let n = graph.n();
    let mut re = Vec::with_capacity(links.len());
    let mut im = Vec::with_capacity(links.len());
    for u in 0..n {
        let row = row_ptr[u]..row_ptr[u + 1];
        let degree: T = links[row.clone()]
            .iter()
            .filter(|&&l| l != Link::Diagonal)
            .map(|l| l.weight::<T>())
            .sum();
        for &link in &links[row] {
            if link == Link::Diagonal {
                re.push(degree);
                im.push(T::zero());
            } else {
                let w = link.weight::<T>();
                re.push(
                    -(w * if link == Link::Reciprocal {
                        T::one()
                    } else {
                        cos
                    }),
                );
                im.push(-(w * link.orientation::<T>() * sin));
            }
        }
    }
    Ok(ComplexSparseMatrix {
        n,
        row_ptr,
        col_idx,
        re,
        im,
    })
}

/// The magnetic graph operator `Â_m = D̃^-1/2 (A_m + I) D̃^-1/2 ⊙ exp(iΘ)`,
/// where `D̃` holds the row sums of `A_m + I`. Its spectrum lies in `[-1, 1]`.
pub fn magnetic_graph_operator<T: Scalar>(
    graph: &DirectedGraph,
    q: f64,
) -> Result<ComplexSparseMatrix<T>> {
    check_q(q)?;
    let (row_ptr, col_idx, links) = symmetric_pattern(graph, true);
    let (cos, sin) = phase::<T>(q);
    let n = graph.n();
    let inv_sqrt: Vec<T> = (0..n)
        .map(|u| {
            let d: T = links[row_ptr[u]..row_ptr[u + 1]]
                .iter()
                .map(|l| l.weight::<T>())
                .sum();
            d.sqrt().recip()
        })
        .collect();
    let mut re = Vec::with_capacity(links.len());
    let mut im = Vec::with_capacity(links.len());
    for u in 0..n {
        for p in row_ptr[u]..row_ptr[u + 1] {
            let link = links[p];
            // Product order (inv_u * inv_v) is commutative, so (u,v) and (v,u)
            // get bit-identical magnitudes.
            let mag = link.weight::<T>() * (inv_sqrt[u] * inv_sqrt[col_idx[p]]);
            match link {
                Link::Diagonal | Link::Reciprocal => {
                    re.push(mag);
                    im.push(T::zero());
                }
                Link::Forward | Link::Backward => {
                    re.push(mag * cos);
                    im.push(link.orientation::<T>() * (mag * sin));
                }
            }
        }
    }
    Ok(ComplexSparseMatrix {
        n,
        row_ptr,
        col_idx,
        re,
        im,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_random_digraph;

    const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

    fn edge01() -> DirectedGraph {
        DirectedGraph::from_edges(2, [(0, 1)]).unwrap()
    }

    #[test]
    fn symmetrized_weights() {
        let a = symmetrized_adjacency::<f64>(&edge01());
        assert_eq!(a.get(0, 1), (0.5, 0.0));
        assert_eq!(a.get(1, 0), (0.5, 0.0));
        let recip = DirectedGraph::from_edges(2, [(0, 1), (1, 0)]).unwrap();
        let a = symmetrized_adjacency::<f64>(&recip);
        assert_eq!(a.get(0, 1), (1.0, 0.0));
        assert_eq!(a.get(1, 0), (1.0, 0.0));
        assert_eq!(
            symmetrized_adjacency::<f64>(&DirectedGraph::empty(3)).nnz(),
            0
        );
    }

    #[test]
    fn phase_values() {
        let (_, cols, theta) = phase_matrix::<f64>(&edge01(), 0.25).unwrap();
        assert_eq!(cols, vec![1, 0]);
        assert_eq!(theta, vec![HALF_PI, -HALF_PI]);

        let g = generate_random_digraph(10, 30, 1).unwrap();
        let (_, _, zero) = phase_matrix::<f64>(&g, 0.0).unwrap();
        assert!(zero.iter().all(|&t| t == 0.0));

        let recip = DirectedGraph::from_edges(2, [(0, 1), (1, 0)]).unwrap();
        let (_, _, t) = phase_matrix::<f64>(&recip, 0.2).unwrap();
        assert_eq!(t, vec![0.0, 0.0]);

        assert!(matches!(
            phase_matrix::<f64>(&g, 0.3),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            phase_matrix::<f64>(&g, -0.01),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn laplacian_single_edge_quarter_turn() {
        let l = magnetic_laplacian::<f64>(&edge01(), 0.25).unwrap();
        let (re01, im01) = l.get(0, 1);
        let (re10, im10) = l.get(1, 0);
        assert!(re01.abs() < 1e-16 && re10.abs() < 1e-16);
        assert_eq!(im01, -0.5);
        assert_eq!(im10, 0.5);
        assert_eq!(l.get(0, 0), (0.5, 0.0));
        assert_eq!(l.get(1, 1), (0.5, 0.0));
        assert!(l.is_hermitian());
    }

    #[test]
    fn laplacian_q0_is_real_symmetric_laplacian() {
        let g = generate_random_digraph(12, 40, 2).unwrap();
        let l = magnetic_laplacian::<f64>(&g, 0.0).unwrap();
        let a = symmetrized_adjacency::<f64>(&g);
        assert!(l.im().iter().all(|&v| v == 0.0));
        for u in 0..12 {
            let deg: f64 = (0..12).map(|v| a.get(u, v).0).sum();
            assert_eq!(l.get(u, u).0, deg);
            for v in 0..12 {
                if u != v {
                    assert_eq!(l.get(u, v).0, -a.get(u, v).0);
                }
            }
        }
    }

    #[test]
    fn operator_two_node_example() {
        let m = magnetic_graph_operator::<f64>(&edge01(), 0.25).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-15;
        assert!(close(m.get(0, 0).0, 2.0 / 3.0) && m.get(0, 0).1 == 0.0);
        assert!(close(m.get(1, 1).0, 2.0 / 3.0));
        let (re, im) = m.get(0, 1);
        assert!(re.abs() < 1e-16 && close(im, 1.0 / 3.0));
        let (re, im) = m.get(1, 0);
        assert!(re.abs() < 1e-16 && close(im, -1.0 / 3.0));
        assert!(m.is_hermitian());
    }

    #[test]
    fn isolated_node_has_unit_self_loop() {
        let g = DirectedGraph::from_edges(3, [(0, 1)]).unwrap();
        let m = magnetic_graph_operator::<f64>(&g, 0.1).unwrap();
        assert_eq!(m.get(2, 2), (1.0, 0.0));
    }

    #[test]
    fn every_constructed_matrix_is_hermitian_with_nonnegative_cos() {
        for seed in 0..20 {
            let g = generate_random_digraph(15, 40, seed).unwrap();
            for q in [0.0, 0.05, 0.1, 0.25] {
                let l = magnetic_laplacian::<f64>(&g, q).unwrap();
                let m = magnetic_graph_operator::<f64>(&g, q).unwrap();
                assert!(l.is_hermitian() && m.is_hermitian());
                // Off-diagonal real parts of the operator carry cos Θ >= 0.
                assert!(m.re().iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn f32_construction() {
        let m = magnetic_graph_operator::<f32>(&edge01(), 0.25).unwrap();
        assert!((m.get(0, 0).0 - 2.0 / 3.0).abs() < 1e-6);
        assert!(m.is_hermitian());
    }
}
