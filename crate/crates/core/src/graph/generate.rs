use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::DirectedGraph;
use crate::dense::FeatureMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniformly random digraph with exactly `m_target` distinct non-loop edges.
pub fn generate_random_digraph(n: usize, m_target: usize, seed: u64) -> Result<DirectedGraph> {
    let pairs = n
        .checked_mul(n.saturating_sub(1))
        .ok_or_else(|| Error::Argument(format!("n = {n} too large")))?;
    if m_target > pairs {
        return Err(Error::Argument(format!(
            "m_target = {m_target} exceeds the {pairs} ordered pairs of a {n}-node digraph"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = index::sample(&mut rng, pairs, m_target)
        .into_iter()
        .map(|k| {
            let u = k / (n - 1);
            let r = k % (n - 1);
            (u, if r >= u { r + 1 } else { r })
        })
        .collect();
    edges.sort_unstable();
    Ok(DirectedGraph::from_sorted_unique(n, &edges))
}

/// Parameters of a planted-partition digraph: nodes split evenly into
/// `classes` blocks, dense within blocks, with sparser inter-block edges that
/// all point from block `c` to block `c + 1 (mod classes)`.
#[derive(Clone, Debug)]
pub struct PlantedConfig {
    pub n: usize,
    pub classes: usize,
    /// Expected out-edges per node inside its own block.
    pub intra_degree: usize,
    /// Expected out-edges per node towards the next block.
    pub inter_degree: usize,
    pub feature_dim: usize,
    /// Standard deviation of the Gaussian noise added to class centroids.
    pub feature_noise: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            n: 400,
            classes: 2,
            intra_degree: 4,
            inter_degree: 1,
            feature_dim: 16,
            feature_noise: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlantedDataset<T> {
    pub graph: DirectedGraph,
    pub features: FeatureMatrix<T>,
    pub labels: Vec<usize>,
}

pub fn generate_planted_digraph<T: Scalar>(cfg: &PlantedConfig) -> Result<PlantedDataset<T>> {
    if cfg.classes == 0 || cfg.n < 2 * cfg.classes {
        return Err(Error::Argument(format!(
            "planted digraph needs at least two nodes per class (n = {}, classes = {})",
            cfg.n, cfg.classes
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let labels: Vec<usize> = (0..cfg.n).map(|u| u * cfg.classes / cfg.n).collect();
    let mut blocks = vec![Vec::new(); cfg.classes];
    for (u, &c) in labels.iter().enumerate() {
        blocks[c].push(u);
    }

    let mut edges = Vec::with_capacity(cfg.n * (cfg.intra_degree + cfg.inter_degree));
    for u in 0..cfg.n {
        let own = &blocks[labels[u]];
        let next = &blocks[(labels[u] + 1) % cfg.classes];
        for _ in 0..cfg.intra_degree {
            edges.push((u, own[rng.random_range(0..own.len())]));
        }
        if cfg.classes > 1 {
            for _ in 0..cfg.inter_degree {
                edges.push((u, next[rng.random_range(0..next.len())]));
            }
        }
    }
    let graph = DirectedGraph::from_edges(cfg.n, edges)?;

    let centroids: Vec<Vec<f64>> = (0..cfg.classes)
        .map(|_| {
            (0..cfg.feature_dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect()
        })
        .collect();
    let mut features = FeatureMatrix::zeros(cfg.n, cfg.feature_dim);
    for u in 0..cfg.n {
        let c = &centroids[labels[u]];
        for (j, x) in features.row_mut(u).iter_mut().enumerate() {
            let noise: f64 = StandardNormal.sample(&mut rng);
            *x = T::from_f64_lossy(c[j] + cfg.feature_noise * noise);
        }
    }
    Ok(PlantedDataset {
        graph,
        features,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edgeless() {
        let g = generate_random_digraph(5, 0, 7).unwrap();
        assert_eq!((g.n(), g.m()), (5, 0));
    }

    #[test]
    fn saturates_to_complete_digraph() {
        let g = generate_random_digraph(4, 12, 1).unwrap();
        assert_eq!(g.m(), 12);
        for u in 0..4 {
            for v in 0..4 {
                assert_eq!(g.has_edge(u, v), u != v);
            }
        }
    }

    #[test]
    fn exact_count_and_deterministic() {
        let a = generate_random_digraph(50, 200, 3).unwrap();
        let b = generate_random_digraph(50, 200, 3).unwrap();
        assert_eq!(a.m(), 200);
        assert_eq!(a, b);
        assert_eq!(a.out_csr(), b.out_csr());
        assert_ne!(a, generate_random_digraph(50, 200, 4).unwrap());
    }

    #[test]
    fn rejects_oversized_target() {
        assert!(matches!(
            generate_random_digraph(4, 13, 0),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn planted_inter_block_edges_point_forward() {
        let cfg = PlantedConfig {
            n: 60,
            classes: 3,
            ..Default::default()
        };
        let d = generate_planted_digraph::<f64>(&cfg).unwrap();
        assert_eq!(d.features.shape(), (60, 16));
        for (u, v) in d.graph.edges() {
            let (cu, cv) = (d.labels[u], d.labels[v]);
            assert!(cu == cv || cv == (cu + 1) % 3);
        }
    }
}
