//! Command-line driver for the decoupled pipeline: precompute propagated
//! features once, then train and evaluate from the cache alone.

pub mod bench;
pub mod cache;
pub mod commands;
pub mod config;
pub mod exit;
pub mod experiments;
pub mod generate;
pub mod pipeline;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::bench::BenchArgs;
use crate::commands::{Outcome, VerifyArgs};
use crate::config::ConfigArgs;
use crate::exit::{CliError, CliResult};
use crate::experiments::SparsityArgs;
use crate::generate::GenerateArgs;

#[derive(Parser, Debug)]
#[command(
    name = "lightdic",
    version,
    about = "Magnetic-Laplacian feature propagation for directed graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the operator, propagate and aggregate features, write the cache.
    Precompute(ConfigArgs),
    /// Train the linear model from a cache entry.
    Train(ConfigArgs),
    /// Score a checkpoint on the cached split.
    Eval(ConfigArgs),
    /// Run the randomized property checks against the dense oracle.
    Verify(VerifyArgs),
    /// Accuracy under missing features, edges or labels.
    Sparsity(SparsityArgs),
    /// Compare the four aggregation modes on one split.
    AblateAgg(ConfigArgs),
    /// Time propagation and training on a synthetic graph.
    Bench(BenchArgs),
    /// Write a synthetic dataset.
    Generate(GenerateArgs),
}

/// Run `f` on a dedicated pool when a thread count is given.
fn with_threads<R: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> CliResult<R> + Send,
) -> CliResult<R> {
    match threads {
        None => f(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::input(format!("thread pool: {e}")))?
            .install(f),
    }
}

/// Execute a parsed command, returning its JSON and where it should go.
pub fn run(command: Command) -> CliResult<(Outcome, Option<PathBuf>)> {
    match command {
        Command::Precompute(a) => pipeline_command(a, commands::precompute),
        Command::Train(a) => pipeline_command(a, commands::train),
        Command::Eval(a) => pipeline_command(a, commands::eval),
        Command::AblateAgg(a) => pipeline_command(a, experiments::ablate),
        Command::Sparsity(s) => {
            let cfg = s.config.resolve()?;
            let out = cfg.out.clone();
            let outcome = with_threads(cfg.threads, || {
                experiments::sparsity(&cfg, s.axis, &s.levels)
            })?;
            Ok((outcome, out))
        }
        Command::Verify(v) => Ok((commands::verify(&v)?, v.out.clone())),
        Command::Bench(b) => Ok((with_threads(b.threads, || bench::bench(&b))?, b.out.clone())),
        Command::Generate(g) => Ok((generate::generate(&g)?, None)),
    }
}

fn pipeline_command(
    args: ConfigArgs,
    f: fn(&config::PipelineConfig) -> CliResult<Outcome>,
) -> CliResult<(Outcome, Option<PathBuf>)> {
    let cfg = args.resolve()?;
    let outcome = with_threads(cfg.threads, || f(&cfg))?;
    Ok((outcome, cfg.out.clone()))
}

/// Pretty JSON with a trailing newline, to a file or stdout.
pub fn emit(json: &serde_json::Value, out: Option<&Path>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(json)?;
    text.push('\n');
    match out {
        Some(path) => cache::write_atomic(path, text.as_bytes())?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Parse, run and report; returns the process exit code.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::INPUT
            } else {
                exit::OK
            };
        }
    };
    match run(cli.command)
        .and_then(|(outcome, out)| emit(&outcome.json, out.as_deref()).map(|_| outcome.code))
    {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
