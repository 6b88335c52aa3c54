//! The pipeline stages as plain functions: load and split, precompute, fit
//! and score. Commands compose these; nothing here touches the cache.

use lightdic::graph::io::{load_edge_list, read_features, read_labels};
use lightdic::graph::{build_link_split, build_node_split, spectral_features};
use lightdic::magnetic::magnetic_graph_operator;
use lightdic::model::{assemble_inputs, evaluate, train};
use lightdic::propagation::precompute;
use lightdic::{
    Aggregated, DirectedGraph, Features, MetricsReport, Model, PropagationConfig, TaskKind,
    TaskSplit, TrainReport,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::PipelineConfig;
use crate::exit::{CliError, CliResult};

pub struct Dataset {
    pub graph: DirectedGraph,
    pub features: Option<Features>,
    pub labels: Option<Vec<usize>>,
}

/// Read the edge list, features and labels named by the config. The node
/// count is `--num-nodes` if given, else the largest of what the three files
/// imply.
pub fn load_dataset(cfg: &PipelineConfig) -> CliResult<Dataset> {
    cfg.check_inputs()?;
    let edges = cfg.edges.as_ref().expect("checked above");
    let mut graph = load_edge_list(edges, cfg.num_nodes)?;
    let features = cfg
        .features
        .as_ref()
        .map(read_features::<f64>)
        .transpose()?;
    let labels = cfg
        .labels
        .as_ref()
        .map(read_labels)
        .transpose()?
        .map(class_labels)
        .transpose()?;

    let implied = [
        features.as_ref().map(|f| f.rows()),
        labels.as_ref().map(Vec::len),
    ];
    let n = match cfg.num_nodes {
        Some(n) => n,
        None => implied.into_iter().flatten().fold(graph.n(), usize::max),
    };
    if n > graph.n() {
        graph = DirectedGraph::from_edges(n, graph.edges().collect::<Vec<_>>())?;
    }
    if let Some(f) = &features {
        if f.rows() != n {
            return Err(CliError::input(format!(
                "feature file has {} rows for {n} nodes",
                f.rows()
            )));
        }
    }
    if let Some(l) = &labels {
        if l.len() != n {
            return Err(CliError::input(format!(
                "label file has {} entries for {n} nodes",
                l.len()
            )));
        }
    }
    Ok(Dataset {
        graph,
        features,
        labels,
    })
}

fn class_labels(raw: Vec<i64>) -> CliResult<Vec<usize>> {
    raw.into_iter()
        .enumerate()
        .map(|(i, l)| {
            usize::try_from(l)
                .map_err(|_| CliError::input(format!("node {i} has negative label {l}")))
        })
        .collect()
}

pub fn build_split(cfg: &PipelineConfig, data: &Dataset) -> CliResult<TaskSplit> {
    build_split_with(cfg, data, &data.graph, cfg.split.train_per_class)
}

/// Node splits only look at the labels and the node count, so a thinned
/// graph yields the same split as the original.
pub fn build_split_with(
    cfg: &PipelineConfig,
    data: &Dataset,
    graph: &DirectedGraph,
    per_class: usize,
) -> CliResult<TaskSplit> {
    let s = &cfg.split;
    let split = match cfg.task {
        TaskKind::NodeClassification => {
            let labels = data
                .labels
                .as_ref()
                .ok_or_else(|| CliError::input("node classification needs --labels"))?;
            build_node_split(graph, labels, per_class, s.val_count, cfg.seed())?
        }
        kind => build_link_split(graph, kind, s.train_frac, s.val_frac, cfg.seed())?,
    };
    Ok(split)
}

/// Raw node features for propagation over `graph`; spectral positional
/// features when the dataset has none.
pub fn input_features(
    cfg: &PipelineConfig,
    data: &Dataset,
    graph: &DirectedGraph,
) -> CliResult<Features> {
    match &data.features {
        Some(x) => Ok(x.clone()),
        None => Ok(spectral_features(
            graph,
            cfg.spectral_dim.min(graph.n()),
            cfg.spectral_iters,
            cfg.seed(),
        )?),
    }
}

/// Build the operator for `graph` and run propagation plus aggregation.
pub fn propagate_features(
    graph: &DirectedGraph,
    x: &Features,
    prop: &PropagationConfig,
) -> CliResult<Aggregated> {
    let op = magnetic_graph_operator::<f64>(graph, prop.q)?;
    Ok(precompute(&op, x, prop)?)
}

/// Features for the split: propagation runs on the split's graph, which for
/// link tasks holds only the training edges.
pub fn precompute_for(
    cfg: &PipelineConfig,
    data: &Dataset,
    split: &TaskSplit,
    prop: &PropagationConfig,
) -> CliResult<Aggregated> {
    let graph = split.propagation_graph(&data.graph);
    let x = input_features(cfg, data, graph)?;
    propagate_features(graph, &x, prop)
}

pub struct Fitted {
    pub model: Model,
    pub report: TrainReport,
}

pub fn fit(cfg: &PipelineConfig, agg: &Aggregated, split: &TaskSplit) -> CliResult<Fitted> {
    let x = assemble_inputs(agg, &split.train)?;
    let vx = assemble_inputs(agg, &split.val)?;
    let mut model = Model::new(x.cols(), split.num_classes, cfg.bias);
    let report = train(
        &mut model,
        &x,
        &split.train.labels,
        &cfg.train,
        Some((&vx, &split.val.labels)),
    )?;
    Ok(Fitted { model, report })
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitMetrics {
    pub train: MetricsReport,
    pub val: MetricsReport,
    pub test: MetricsReport,
}

pub fn score(model: &Model, agg: &Aggregated, split: &TaskSplit) -> CliResult<SplitMetrics> {
    if model.classes() != split.num_classes {
        return Err(CliError::format(format!(
            "checkpoint has {} classes, split has {}",
            model.classes(),
            split.num_classes
        )));
    }
    let eval = |s| -> CliResult<MetricsReport> {
        Ok(evaluate(model, &assemble_inputs(agg, s)?, &s.labels)?)
    };
    Ok(SplitMetrics {
        train: eval(&split.train)?,
        val: eval(&split.val)?,
        test: eval(&split.test)?,
    })
}

/// The number each task is usually judged by.
pub fn primary_metric(task: TaskKind, m: &MetricsReport) -> (&'static str, f64) {
    match task {
        TaskKind::LinkExistence => ("auc", m.auc.unwrap_or(f64::NAN)),
        TaskKind::LinkDirection => ("macro_f1", m.macro_f1),
        _ => ("accuracy", m.accuracy),
    }
}

/// Metrics without the loss curve.
pub fn scores_json(m: &MetricsReport) -> Value {
    let mut v = json!({ "accuracy": m.accuracy, "macro_f1": m.macro_f1 });
    if let Some(auc) = m.auc {
        v["auc"] = json!(auc);
    }
    v
}

pub fn metrics_json(m: &SplitMetrics) -> Value {
    json!({ "train": scores_json(&m.train), "val": scores_json(&m.val), "test": scores_json(&m.test) })
}

/// Fit on the split and score every subset.
pub fn fit_and_score(
    cfg: &PipelineConfig,
    agg: &Aggregated,
    split: &TaskSplit,
) -> CliResult<(Fitted, SplitMetrics)> {
    let fitted = fit(cfg, agg, split)?;
    let metrics = score(&fitted.model, agg, split)?;
    Ok((fitted, metrics))
}
