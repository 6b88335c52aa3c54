//! Directed graph data model, ingestion, synthetic generation, spectral
//! feature synthesis and task splits.

mod generate;
pub mod io;
mod spectral;
pub mod split;

pub use generate::{
    generate_planted_digraph, generate_random_digraph, PlantedConfig, PlantedDataset,
};
pub use spectral::spectral_features;
pub use split::{build_link_split, build_node_split, Item, Subset, TaskKind, TaskSplit};

use crate::error::{Error, Result};

/// Immutable binary digraph in CSR form, with the transpose kept alongside so
/// in-neighbourhoods are as cheap as out-neighbourhoods.
///
/// No duplicate edges and no self-loops are ever stored; column indices within
/// each row are strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    out_ptr: Vec<usize>,
    out_idx: Vec<usize>,
    in_ptr: Vec<usize>,
    in_idx: Vec<usize>,
}

impl DirectedGraph {
    /// Build from an arbitrary edge list. Duplicates collapse, self-loops are
    /// dropped, and any endpoint `>= n` is a bounds error.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list = Vec::new();
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::Bounds { index: x, n });
                }
            }
            if u != v {
                list.push((u, v));
            }
        }
        list.sort_unstable();
        list.dedup();
        Ok(Self::from_sorted_unique(n, &list))
    }

    /// `edges` must be sorted, unique, loop-free and in range.
    fn from_sorted_unique(n: usize, edges: &[(usize, usize)]) -> Self {
        let (out_ptr, out_idx) = csr(n, edges.iter().copied());
        let mut rev: Vec<(usize, usize)> = edges.iter().map(|&(u, v)| (v, u)).collect();
        rev.sort_unstable();
        let (in_ptr, in_idx) = csr(n, rev.into_iter());
        Self {
            n,
            out_ptr,
            out_idx,
            in_ptr,
            in_idx,
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_sorted_unique(n, &[])
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.out_idx.len()
    }

    #[inline]
    pub fn out_neighbors(&self, u: usize) -> &[usize] {
        &self.out_idx[self.out_ptr[u]..self.out_ptr[u + 1]]
    }

    #[inline]
    pub fn in_neighbors(&self, u: usize) -> &[usize] {
        &self.in_idx[self.in_ptr[u]..self.in_ptr[u + 1]]
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.out_ptr[u + 1] - self.out_ptr[u]
    }

    pub fn in_degree(&self, u: usize) -> usize {
        self.in_ptr[u + 1] - self.in_ptr[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.out_neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges in lexicographic `(u, v)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Edges recovered from the transpose, swapped back to `(u, v)`.
    pub fn edges_from_transpose(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = (0..self.n)
            .flat_map(|v| self.in_neighbors(v).iter().map(move |&u| (u, v)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn out_csr(&self) -> (&[usize], &[usize]) {
        (&self.out_ptr, &self.out_idx)
    }

    /// Same node set, restricted to `keep`. Edges not present in `self` are
    /// ignored.
    pub fn with_edges(&self, keep: &[(usize, usize)]) -> Self {
        let mut list: Vec<_> = keep
            .iter()
            .copied()
            .filter(|&(u, v)| self.has_edge(u, v))
            .collect();
        list.sort_unstable();
        list.dedup();
        Self::from_sorted_unique(self.n, &list)
    }

    /// 64-bit FNV-1a over the sorted edge list (each endpoint as a
    /// little-endian u64). Stable across platforms and releases.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        for (u, v) in self.edges() {
            for x in [u as u64, v as u64] {
                for b in x.to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(PRIME);
                }
            }
        }
        h
    }

    /// Number of edges whose reverse is absent.
    pub fn one_way_edge_count(&self) -> usize {
        self.edges().filter(|&(u, v)| !self.has_edge(v, u)).count()
    }
}

fn csr(n: usize, sorted: impl Iterator<Item = (usize, usize)>) -> (Vec<usize>, Vec<usize>) {
    let mut ptr = vec![0usize; n + 1];
    let mut idx = Vec::new();
    for (u, v) in sorted {
        ptr[u + 1] += 1;
        idx.push(v);
    }
    for i in 0..n {
        ptr[i + 1] += ptr[i];
    }
    (ptr, idx)
}
