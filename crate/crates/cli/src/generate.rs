//! Synthetic datasets in the on-disk formats the pipeline reads.

use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use lightdic::graph::io::{write_edge_list, write_features, write_labels};
use lightdic::graph::{generate_planted_digraph, generate_random_digraph, PlantedConfig};
use lightdic::model::two_blobs;
use lightdic::{DirectedGraph, Features};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::bench::gaussian_features;
use crate::commands::Outcome;
use crate::exit::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Blocks with dense intra-block edges and one-way edges to the next block.
    Planted,
    /// Two Gaussian blobs; every edge stays inside a class.
    Blobs,
    /// Uniform random digraph with Gaussian features and no labels.
    Random,
}

#[derive(Args, Clone, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "planted")]
    pub kind: Kind,
    #[arg(long, default_value_t = 400)]
    pub nodes: usize,
    /// Edge count (random kind only).
    #[arg(long, default_value_t = 2000)]
    pub edges: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    /// Out-edges per node inside its own class.
    #[arg(long, default_value_t = 4)]
    pub intra: usize,
    /// Out-edges per node towards the next class (planted kind).
    #[arg(long, default_value_t = 1)]
    pub inter: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Feature noise for planted data, blob centre separation for blobs.
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving edges.txt, features.ldcf and labels.ldcf.
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Random out-edges that never leave a node's class.
fn intra_class_graph(labels: &[usize], degree: usize, seed: u64) -> CliResult<DirectedGraph> {
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); classes];
    for (u, &c) in labels.iter().enumerate() {
        members[c].push(u);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(labels.len() * degree);
    for (u, &c) in labels.iter().enumerate() {
        for _ in 0..degree {
            let v = members[c][rng.random_range(0..members[c].len())];
            if v != u {
                edges.push((u, v));
            }
        }
    }
    Ok(DirectedGraph::from_edges(labels.len(), edges)?)
}

pub fn generate(args: &GenerateArgs) -> CliResult<Outcome> {
    let (graph, features, labels): (DirectedGraph, Features, Option<Vec<usize>>) = match args.kind {
        Kind::Planted => {
            let data = generate_planted_digraph::<f64>(&PlantedConfig {
                n: args.nodes,
                classes: args.classes,
                intra_degree: args.intra,
                inter_degree: args.inter,
                feature_dim: args.dim,
                feature_noise: args.spread,
                seed: args.seed,
            })?;
            (data.graph, data.features, Some(data.labels))
        }
        Kind::Blobs => {
            if args.nodes < 4 {
                return Err(CliError::input("blobs need at least 4 nodes"));
            }
            let (x, y) = two_blobs::<f64>(args.nodes, args.dim.max(1), args.spread, args.seed);
            let graph = intra_class_graph(&y, args.intra, args.seed.wrapping_add(1))?;
            (graph, x, Some(y))
        }
        Kind::Random => {
            let graph = generate_random_digraph(args.nodes, args.edges, args.seed)?;
            (
                graph,
                gaussian_features(args.nodes, args.dim, args.seed.wrapping_add(1)),
                None,
            )
        }
    };

    fs::create_dir_all(&args.out_dir)?;
    let edges_path = args.out_dir.join("edges.txt");
    let features_path = args.out_dir.join("features.ldcf");
    write_edge_list(&graph, &edges_path)?;
    write_features(&features, &features_path)?;
    let mut out = json!({
        "command": "generate",
        "nodes": graph.n(),
        "edges": graph.m(),
        "one_way_edges": graph.one_way_edge_count(),
        "edges_file": edges_path,
        "features_file": features_path,
    });
    if let Some(labels) = labels {
        let labels_path = args.out_dir.join("labels.ldcf");
        write_labels(
            &labels.iter().map(|&l| l as i64).collect::<Vec<_>>(),
            &labels_path,
        )?;
        out["labels_file"] = json!(labels_path);
    }
    Ok(out.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_edges_stay_inside_classes() {
        let (_, y) = two_blobs::<f64>(60, 2, 4.0, 3);
        let g = intra_class_graph(&y, 5, 1).unwrap();
        assert!(g.m() > 0);
        assert!(g.edges().all(|(u, v)| y[u] == y[v]));
    }
}
