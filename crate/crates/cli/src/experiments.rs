//! The sparsity and aggregation-ablation harnesses. Both run the whole
//! pipeline in memory per setting, with one shared split and seed, and leave
//! the cache alone.

use clap::{Args, ValueEnum};
use lightdic::propagation::{aggregate, propagate};
use lightdic::{Aggregation, DirectedGraph, PropagationConfig, TaskKind};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::commands::Outcome;
use crate::config::{ConfigArgs, PipelineConfig};
use crate::exit::{CliError, CliResult};
use crate::pipeline::{
    build_split, build_split_with, fit_and_score, input_features, load_dataset, metrics_json,
    primary_metric, propagate_features,
};

/// Salt so the sparsity masks do not reuse the split's random stream.
const MASK_SALT: u64 = 0x5EED_0FDA_7A;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    /// Zero a fraction of the unlabeled nodes' feature rows.
    Feature,
    /// Drop a fraction of the edges.
    Edge,
    /// Training nodes per class.
    Label,
}

impl Axis {
    fn as_str(self) -> &'static str {
        match self {
            Axis::Feature => "feature",
            Axis::Edge => "edge",
            Axis::Label => "label",
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct SparsityArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Comma-separated levels: fractions in [0, 1] for the feature and edge
    /// axes, per-class training counts for the label axis.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    pub levels: Vec<f64>,
}

fn check_levels(axis: Axis, levels: &[f64]) -> CliResult<()> {
    for &level in levels {
        let ok = match axis {
            Axis::Feature | Axis::Edge => (0.0..=1.0).contains(&level),
            Axis::Label => level >= 1.0 && level.fract() == 0.0,
        };
        if !ok {
            let want = match axis {
                Axis::Label => "a positive whole number of nodes per class",
                _ => "a fraction in [0, 1]",
            };
            return Err(CliError::input(format!(
                "{} level {level} is not {want}",
                axis.as_str()
            )));
        }
    }
    Ok(())
}

/// `round(level * len)` of `0..len`, chosen by a seeded shuffle.
fn pick(len: usize, level: f64, seed: u64) -> Vec<usize> {
    let count = ((level * len as f64).round() as usize).min(len);
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ MASK_SALT));
    idx.truncate(count);
    idx
}

pub fn sparsity(cfg: &PipelineConfig, axis: Axis, levels: &[f64]) -> CliResult<Outcome> {
    if cfg.task != TaskKind::NodeClassification {
        return Err(CliError::input("sparsity runs on node classification only"));
    }
    check_levels(axis, levels)?;
    let data = load_dataset(cfg)?;
    let base_split = build_split(cfg, &data)?;
    let prop = cfg.propagation;

    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let (agg, split) = match axis {
            Axis::Feature => {
                let mut x = input_features(cfg, &data, &data.graph)?;
                let mut labeled = vec![false; data.graph.n()];
                for item in &base_split.train.items {
                    if let lightdic::Item::Node(u) = item {
                        labeled[*u] = true;
                    }
                }
                let unlabeled: Vec<usize> = (0..data.graph.n()).filter(|&u| !labeled[u]).collect();
                for i in pick(unlabeled.len(), level, cfg.seed()) {
                    x.row_mut(unlabeled[i]).fill(0.0);
                }
                (
                    propagate_features(&data.graph, &x, &prop)?,
                    base_split.clone(),
                )
            }
            Axis::Edge => {
                let edges: Vec<(usize, usize)> = data.graph.edges().collect();
                let mut dropped = vec![false; edges.len()];
                for i in pick(edges.len(), level, cfg.seed()) {
                    dropped[i] = true;
                }
                let keep: Vec<(usize, usize)> = edges
                    .iter()
                    .zip(&dropped)
                    .filter(|(_, &d)| !d)
                    .map(|(&e, _)| e)
                    .collect();
                let thinned = data.graph.with_edges(&keep);
                let x = input_features(cfg, &data, &thinned)?;
                (propagate_features(&thinned, &x, &prop)?, base_split.clone())
            }
            Axis::Label => {
                let split = build_split_with(cfg, &data, &data.graph, level as usize)?;
                let x = input_features(cfg, &data, &data.graph)?;
                (propagate_features(&data.graph, &x, &prop)?, split)
            }
        };
        let (fitted, metrics) = fit_and_score(cfg, &agg, &split)?;
        rows.push(json!({
            "level": level,
            "test_accuracy": metrics.test.accuracy,
            "epochs_run": fitted.report.epochs_run,
            "metrics": metrics_json(&metrics),
        }));
    }
    Ok(json!({
        "command": "sparsity",
        "axis": axis.as_str(),
        "task": cfg.task,
        "propagation": prop,
        "levels": rows,
    })
    .into())
}

/// Run `graph` through every aggregation mode. Propagation happens once;
/// each mode only re-reduces the step list.
pub fn ablate(cfg: &PipelineConfig) -> CliResult<Outcome> {
    let data = load_dataset(cfg)?;
    let split = build_split(cfg, &data)?;
    let graph: &DirectedGraph = split.propagation_graph(&data.graph);
    let x = input_features(cfg, &data, graph)?;
    let prop = PropagationConfig {
        aggregation: Aggregation::Last,
        ..cfg.propagation
    };
    let steps = propagate(graph, &x, &prop)?;

    let mut modes = Vec::new();
    let mut ranked = Vec::new();
    for mode in Aggregation::ALL {
        let agg = aggregate(&steps, mode)?;
        let (fitted, metrics) = fit_and_score(cfg, &agg, &split)?;
        let (metric, value) = primary_metric(cfg.task, &metrics.test);
        ranked.push((mode, value));
        modes.push(json!({
            "aggregation": mode,
            "metric": metric,
            "test_value": value,
            "epochs_run": fitted.report.epochs_run,
            "metrics": metrics_json(&metrics),
        }));
    }
    // Stable sort: ties keep the registry order.
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(json!({
        "command": "ablate-agg",
        "task": cfg.task,
        "q": cfg.propagation.q,
        "K": cfg.propagation.k,
        "modes": modes,
        "ranking": ranked.iter().map(|(m, _)| m.as_str()).collect::<Vec<_>>(),
    })
    .into())
}
