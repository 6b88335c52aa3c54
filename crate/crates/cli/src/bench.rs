//! Wall-clock measurements on synthetic graphs. Every figure is the median of
//! `repeats` runs.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use lightdic::graph::generate_random_digraph;
use lightdic::model::assemble_inputs;
use lightdic::{
    Aggregated, Aggregation, DirectedGraph, Features, Item, Model, PropagationConfig, Subset,
    TrainConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use crate::commands::Outcome;
use crate::exit::{CliError, CliResult};
use crate::pipeline::propagate_features;

#[derive(Args, Clone, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 100_000)]
    pub nodes: usize,
    #[arg(long, default_value_t = 300_000)]
    pub edges: usize,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long = "K", short = 'K', default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    #[arg(long, default_value = "last")]
    pub agg: Aggregation,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Training epochs timed per repeat; 0 skips the training measurement.
    #[arg(long, default_value_t = 5)]
    pub train_epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.is_empty() {
        f64::NAN
    } else if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

pub fn gaussian_features(n: usize, f: usize, seed: u64) -> Features {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Features::from_fn(n, f, |_, _| StandardNormal.sample(&mut rng))
}

/// Seconds per run of operator construction plus propagation.
pub fn time_precompute(
    graph: &DirectedGraph,
    x: &Features,
    prop: &PropagationConfig,
    repeats: usize,
) -> CliResult<Vec<f64>> {
    (0..repeats)
        .map(|_| {
            let start = Instant::now();
            let agg = propagate_features(graph, x, prop)?;
            let seconds = start.elapsed().as_secs_f64();
            std::hint::black_box(&agg);
            Ok(seconds)
        })
        .collect()
}

/// Seconds per training epoch over every node of `agg`, with seeded random
/// two-class labels. One value per repeat.
pub fn time_epochs(
    agg: &Aggregated,
    epochs: usize,
    repeats: usize,
    seed: u64,
) -> CliResult<Vec<f64>> {
    if epochs == 0 {
        return Ok(Vec::new());
    }
    let subset = Subset {
        items: (0..agg.n()).map(Item::Node).collect(),
        labels: (0..agg.n()).map(|u| u % 2).collect(),
    };
    let x = assemble_inputs(agg, &subset)?;
    let cfg = TrainConfig {
        learning_rate: 0.01,
        epochs,
        seed,
        patience: None,
        ..Default::default()
    };
    (0..repeats)
        .map(|_| {
            let mut model = Model::new(x.cols(), 2, true);
            let start = Instant::now();
            lightdic::model::train(&mut model, &x, &subset.labels, &cfg, None)?;
            Ok(start.elapsed().as_secs_f64() / epochs as f64)
        })
        .collect()
}

pub fn bench(args: &BenchArgs) -> CliResult<Outcome> {
    if args.repeats == 0 {
        return Err(CliError::input("--repeats must be at least 1"));
    }
    let prop = PropagationConfig::new(args.q, args.k, args.agg)?;
    let graph = generate_random_digraph(args.nodes, args.edges, args.seed)?;
    let x = gaussian_features(args.nodes, args.dim, args.seed.wrapping_add(1));
    let pre = time_precompute(&graph, &x, &prop, args.repeats)?;
    let agg = propagate_features(&graph, &x, &prop)?;
    let epochs = time_epochs(&agg, args.train_epochs, args.repeats, args.seed)?;
    Ok(json!({
        "command": "bench",
        "nodes": args.nodes,
        "edges": graph.m(),
        "dim": args.dim,
        "K": args.k,
        "q": args.q,
        "aggregation": args.agg,
        "repeats": args.repeats,
        "threads": rayon::current_num_threads(),
        "preprocess_seconds": pre,
        "preprocess_median": median(&pre),
        "epoch_seconds": epochs,
        "epoch_median": if epochs.is_empty() { None } else { Some(median(&epochs)) },
    })
    .into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn tiny_bench_runs() {
        let args = BenchArgs {
            nodes: 50,
            edges: 200,
            dim: 4,
            k: 2,
            q: 0.1,
            agg: Aggregation::Concat,
            repeats: 3,
            train_epochs: 2,
            seed: 0,
            threads: None,
            out: None,
        };
        let out = bench(&args).unwrap().json;
        assert_eq!(out["preprocess_seconds"].as_array().unwrap().len(), 3);
        assert_eq!(out["edges"], 200);
        assert!(out["epoch_median"].as_f64().unwrap() >= 0.0);
    }
}
