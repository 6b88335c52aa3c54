//! Pipeline configuration: an optional flat `key = value` file, overridden by
//! command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser};
use lightdic::propagation::DEFAULT_MAX_STEPS;
use lightdic::{Aggregation, PropagationConfig, TaskKind, TrainConfig, Q_MAX};
use serde::Serialize;

use crate::exit::{CliError, CliResult};

pub const CACHE_ENV: &str = "LIGHTDIC_CACHE";
pub const DEFAULT_CACHE_DIR: &str = "lightdic-cache";

pub const K_RANGE: (usize, usize) = (2, 10);
pub const LR_RANGE: (f64, f64) = (0.001, 0.1);

const DEFAULT_Q: f64 = 0.1;
const DEFAULT_K: usize = 3;
const DEFAULT_SPECTRAL_DIM: usize = 64;
const SPECTRAL_ITERS: usize = 200;

/// Every pipeline setting as an optional override. The same struct parses
/// flags and config-file lines, so both accept identical keys.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// Config file, one `key = value` per line (`#` comments). Flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Edge list, one `src dst` pair per line.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Node features (LDCF). Without it, spectral positional features are used.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Node labels (LDCF, integer payload).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub num_nodes: Option<usize>,
    /// node | existence | direction | three-class
    #[arg(long, value_parser = parse_task)]
    pub task: Option<TaskKind>,

    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long = "K", short = 'K')]
    pub k: Option<usize>,
    /// last | mean | sum | concat (default depends on the task)
    #[arg(long)]
    pub agg: Option<Aggregation>,
    /// Width of the spectral features used when no feature file is given.
    #[arg(long)]
    pub spectral_dim: Option<usize>,

    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Early-stopping patience in epochs; 0 disables early stopping.
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub bias: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub train_per_class: Option<usize>,
    #[arg(long)]
    pub val_count: Option<usize>,
    #[arg(long)]
    pub train_frac: Option<f64>,
    #[arg(long)]
    pub val_frac: Option<f64>,

    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Checkpoint path (default: inside the cache entry).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Include wall-clock times in the training report.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timings: Option<bool>,
    /// Allow q, K and lr outside the tuned search ranges.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub unsafe_ranges: Option<bool>,
}

#[derive(Parser)]
#[command(no_binary_name = true)]
struct FileArgs {
    #[command(flatten)]
    args: ConfigArgs,
}

pub fn parse_task(s: &str) -> Result<TaskKind, String> {
    let kind = match s.replace('-', "_").as_str() {
        "node" | "node_classification" => TaskKind::NodeClassification,
        "existence" | "link_existence" => TaskKind::LinkExistence,
        "direction" | "link_direction" => TaskKind::LinkDirection,
        "three_class" | "link_three_class" => TaskKind::LinkThreeClass,
        _ => {
            return Err(format!(
                "unknown task {s:?} (node|existence|direction|three-class)"
            ))
        }
    };
    Ok(kind)
}

macro_rules! overlay {
    ($hi:expr, $lo:expr; $($field:ident),*) => {
        ConfigArgs { $($field: $hi.$field.or($lo.$field)),* }
    };
}

impl ConfigArgs {
    /// Parse a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
        let mut argv = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::input(format!("config line {}: expected key = value", i + 1))
            })?;
            let key = key.trim().replace('_', "-");
            if key == "config" {
                return Err(CliError::input(format!(
                    "config line {}: nested config files are not supported",
                    i + 1
                )));
            }
            argv.push(if key == "K" {
                "-K".to_string()
            } else {
                format!("--{key}")
            });
            argv.push(value.trim().to_string());
        }
        let mut args = FileArgs::try_parse_from(&argv)
            .map_err(|e| {
                CliError::input(format!(
                    "config {}: {}",
                    path.display(),
                    e.render().to_string().trim()
                ))
            })?
            .args;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut args.edges,
            &mut args.features,
            &mut args.labels,
            &mut args.cache_dir,
            &mut args.out,
            &mut args.checkpoint,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(args)
    }

    /// Fields set here win over `lower`.
    pub fn over(self, lower: ConfigArgs) -> ConfigArgs {
        overlay!(self, lower;
            config, edges, features, labels, num_nodes, task, q, k, agg, spectral_dim,
            lr, batch_size, epochs, weight_decay, patience, bias, seed,
            train_per_class, val_count, train_frac, val_frac,
            threads, cache_dir, out, checkpoint, timings, unsafe_ranges)
    }

    /// Merge the config file (if any) under the flags and fill defaults.
    pub fn resolve(self) -> CliResult<PipelineConfig> {
        self.resolve_with_env(std::env::var_os(CACHE_ENV).map(PathBuf::from))
    }

    /// As [`resolve`](Self::resolve). The cache directory from the
    /// environment ranks below `--cache-dir` and above the config file.
    pub fn resolve_with_env(self, env_cache: Option<PathBuf>) -> CliResult<PipelineConfig> {
        let flag_cache = self.cache_dir.is_some();
        let mut merged = match &self.config {
            Some(path) => {
                let file = ConfigArgs::from_file(path)?;
                self.over(file)
            }
            None => self,
        };
        if !flag_cache && env_cache.is_some() {
            merged.cache_dir = env_cache;
        }
        PipelineConfig::from_args(merged)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplitParams {
    pub train_per_class: usize,
    pub val_count: usize,
    pub train_frac: f64,
    pub val_frac: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub edges: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub num_nodes: Option<usize>,
    pub task: TaskKind,
    pub propagation: PropagationConfig,
    pub spectral_dim: usize,
    pub spectral_iters: usize,
    pub train: TrainConfig,
    pub bias: bool,
    pub split: SplitParams,
    pub cache_dir: PathBuf,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub threads: Option<usize>,
    pub timings: bool,
    pub unsafe_ranges: bool,
}

pub fn default_aggregation(task: TaskKind) -> Aggregation {
    match task {
        TaskKind::NodeClassification => Aggregation::Last,
        TaskKind::LinkExistence | TaskKind::LinkDirection => Aggregation::Sum,
        TaskKind::LinkThreeClass => Aggregation::Concat,
    }
}

impl PipelineConfig {
    /// Fill defaults and check ranges.
    pub fn from_args(a: ConfigArgs) -> CliResult<Self> {
        let task = a.task.unwrap_or(TaskKind::NodeClassification);
        let seed = a.seed.unwrap_or(0);
        let defaults = TrainConfig::default();
        let cfg = Self {
            edges: a.edges,
            features: a.features,
            labels: a.labels,
            num_nodes: a.num_nodes,
            task,
            propagation: PropagationConfig {
                q: a.q.unwrap_or(DEFAULT_Q),
                k: a.k.unwrap_or(DEFAULT_K),
                aggregation: a.agg.unwrap_or_else(|| default_aggregation(task)),
            },
            spectral_dim: a.spectral_dim.unwrap_or(DEFAULT_SPECTRAL_DIM),
            spectral_iters: SPECTRAL_ITERS,
            train: TrainConfig {
                learning_rate: a.lr.unwrap_or(defaults.learning_rate),
                batch_size: a.batch_size.unwrap_or(defaults.batch_size),
                epochs: a.epochs.unwrap_or(defaults.epochs),
                weight_decay: a.weight_decay.unwrap_or(defaults.weight_decay),
                seed,
                patience: match a.patience {
                    Some(0) => None,
                    Some(p) => Some(p),
                    None => defaults.patience,
                },
            },
            bias: a.bias.unwrap_or(true),
            split: SplitParams {
                train_per_class: a.train_per_class.unwrap_or(20),
                val_count: a.val_count.unwrap_or(500),
                train_frac: a.train_frac.unwrap_or(0.8),
                val_frac: a.val_frac.unwrap_or(0.15),
            },
            cache_dir: a
                .cache_dir
                .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR)),
            out: a.out,
            checkpoint: a.checkpoint,
            threads: a.threads,
            timings: a.timings.unwrap_or(false),
            unsafe_ranges: a.unsafe_ranges.unwrap_or(false),
        };
        cfg.check_ranges()?;
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.train.seed
    }

    fn check_ranges(&self) -> CliResult<()> {
        let p = &self.propagation;
        if !(0.0..=Q_MAX).contains(&p.q) {
            return Err(CliError::input(format!("q = {} outside [0, {Q_MAX}]", p.q)));
        }
        let lr = self.train.learning_rate;
        if self.unsafe_ranges {
            if p.k > DEFAULT_MAX_STEPS {
                return Err(CliError::input(format!(
                    "K = {} exceeds the step bound {DEFAULT_MAX_STEPS}",
                    p.k
                )));
            }
        } else {
            if !(K_RANGE.0..=K_RANGE.1).contains(&p.k) {
                return Err(CliError::input(format!(
                    "K = {} outside [{}, {}] (use --unsafe-ranges to override)",
                    p.k, K_RANGE.0, K_RANGE.1
                )));
            }
            if !(LR_RANGE.0..=LR_RANGE.1).contains(&lr) {
                return Err(CliError::input(format!(
                    "lr = {lr} outside [{}, {}] (use --unsafe-ranges to override)",
                    LR_RANGE.0, LR_RANGE.1
                )));
            }
        }
        self.train.validate()?;
        let s = &self.split;
        if !(s.train_frac > 0.0 && s.val_frac > 0.0 && s.train_frac + s.val_frac < 1.0) {
            return Err(CliError::input(format!(
                "split fractions {} / {} must be positive and sum below 1",
                s.train_frac, s.val_frac
            )));
        }
        if self.threads == Some(0) {
            return Err(CliError::input("--threads must be at least 1"));
        }
        Ok(())
    }

    /// The input files this run will read must exist.
    pub fn check_inputs(&self) -> CliResult<()> {
        let edges = self
            .edges
            .as_ref()
            .ok_or_else(|| CliError::input("no edge list given (--edges)"))?;
        for path in [Some(edges), self.features.as_ref(), self.labels.as_ref()]
            .into_iter()
            .flatten()
        {
            if !path.is_file() {
                return Err(CliError::input(format!("{}: no such file", path.display())));
            }
        }
        if self.task == TaskKind::NodeClassification && self.labels.is_none() {
            return Err(CliError::input("node classification needs --labels"));
        }
        Ok(())
    }
}
