//! `precompute`, `train`, `eval` and `verify`.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use lightdic::model::{encode_checkpoint, read_checkpoint};
use lightdic::verify::{check_names, run_named, VerifyConfig};
use serde_json::{json, Value};

use crate::cache::{fingerprint_hex, write_atomic, CacheEntry, CacheLock};
use crate::config::PipelineConfig;
use crate::exit::{CliError, CliResult, OK, VERIFY_FAILED};
use crate::pipeline::{
    build_split, fit_and_score, load_dataset, metrics_json, precompute_for, score,
};

/// JSON result plus the exit code to report it with.
pub struct Outcome {
    pub json: Value,
    pub code: u8,
}

impl From<Value> for Outcome {
    fn from(json: Value) -> Self {
        Self { json, code: OK }
    }
}

/// Steps 1 and 2: build the operator, propagate, aggregate, cache. A fresh
/// entry for the same configuration and graph is left untouched.
pub fn precompute(cfg: &PipelineConfig) -> CliResult<Outcome> {
    cfg.check_inputs()?;
    let entry = CacheEntry::for_config(cfg)?;
    let _lock = CacheLock::acquire(&cfg.cache_dir, &entry.hash)?;
    let data = load_dataset(cfg)?;
    let fingerprint = data.graph.fingerprint();
    let mut out = json!({
        "command": "precompute",
        "cache_entry": entry.dir,
        "config_hash": entry.hash,
        "fingerprint": fingerprint_hex(fingerprint),
        "nodes": data.graph.n(),
        "edges": data.graph.m(),
    });
    if entry.is_fresh(fingerprint) {
        out["status"] = json!("hit");
        return Ok(out.into());
    }

    let split = build_split(cfg, &data)?;
    let start = Instant::now();
    let agg = precompute_for(cfg, &data, &split, &cfg.propagation)?;
    let seconds = start.elapsed().as_secs_f64();
    let manifest = entry.store(&agg, &split, fingerprint, data.graph.m())?;
    out["status"] = json!("computed");
    out["width"] = json!(manifest.width);
    out["items"] = json!({ "train": manifest.train_items, "val": manifest.val_items, "test": manifest.test_items });
    out["preprocess_seconds"] = json!(seconds);
    Ok(out.into())
}

/// Step 3: train from the cache entry only. The graph is never opened.
pub fn train(cfg: &PipelineConfig) -> CliResult<Outcome> {
    let entry = CacheEntry::for_config(cfg)?;
    let _lock = CacheLock::acquire(&cfg.cache_dir, &entry.hash)?;
    let load_start = Instant::now();
    let (agg, split, fingerprint) = entry.load()?;
    let load_seconds = load_start.elapsed().as_secs_f64();

    let train_start = Instant::now();
    let (fitted, metrics) = fit_and_score(cfg, &agg, &split)?;
    let train_seconds = train_start.elapsed().as_secs_f64();

    let checkpoint = cfg
        .checkpoint
        .clone()
        .unwrap_or_else(|| entry.default_checkpoint());
    write_atomic(&checkpoint, &encode_checkpoint(&fitted.model))?;

    let mut out = json!({
        "command": "train",
        "task": split.kind,
        "config_hash": entry.hash,
        "fingerprint": fingerprint_hex(fingerprint),
        "checkpoint": checkpoint,
        "epochs_run": fitted.report.epochs_run,
        "best_epoch": fitted.report.best_epoch,
        "metrics": metrics_json(&metrics),
        "per_epoch_loss": fitted.report.per_epoch_loss,
    });
    if cfg.timings {
        let epochs = fitted.report.epochs_run.max(1) as f64;
        out["timings"] = json!({
            "load_seconds": load_seconds,
            "train_seconds": train_seconds,
            "epoch_seconds": train_seconds / epochs,
        });
    }
    Ok(out.into())
}

/// Score a saved checkpoint on every subset of the cached split.
pub fn eval(cfg: &PipelineConfig) -> CliResult<Outcome> {
    let entry = CacheEntry::for_config(cfg)?;
    let (agg, split, fingerprint) = entry.load()?;
    let checkpoint = cfg
        .checkpoint
        .clone()
        .unwrap_or_else(|| entry.default_checkpoint());
    if !checkpoint.is_file() {
        return Err(CliError::input(format!(
            "{}: no checkpoint; run train first",
            checkpoint.display()
        )));
    }
    let model = read_checkpoint::<f64>(&checkpoint)?;
    let metrics = score(&model, &agg, &split)?;
    Ok(json!({
        "command": "eval",
        "task": split.kind,
        "config_hash": entry.hash,
        "fingerprint": fingerprint_hex(fingerprint),
        "checkpoint": checkpoint,
        "metrics": metrics_json(&metrics),
    })
    .into())
}

#[derive(Args, Clone, Debug)]
pub struct VerifyArgs {
    /// Largest generated graph, at most 64 nodes.
    #[arg(long, default_value_t = 30)]
    pub scale: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run only this check (repeatable).
    #[arg(long = "check")]
    pub checks: Vec<String>,
    /// Print the available check names and exit.
    #[arg(long)]
    pub list: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Randomized property checks against the dense oracle. Exit 5 on any
/// failure.
pub fn verify(args: &VerifyArgs) -> CliResult<Outcome> {
    if args.list {
        return Ok(json!({ "checks": check_names().collect::<Vec<_>>() }).into());
    }
    let cfg = VerifyConfig {
        scale: args.scale,
        trials: args.trials,
        seed: args.seed,
    };
    let names: Vec<&str> = if args.checks.is_empty() {
        check_names().collect()
    } else {
        args.checks.iter().map(String::as_str).collect()
    };
    let report = run_named(&cfg, &names)?;
    let code = if report.passed { OK } else { VERIFY_FAILED };
    Ok(Outcome {
        json: serde_json::to_value(&report)?,
        code,
    })
}
