//! Cache entries: `<cache_dir>/<config_hash>/` holding the propagated
//! features (LDCP), the split and a manifest. The directory name depends only
//! on the configuration and on the feature/label file contents, never on the
//! graph, so `train` can find an entry without reading any edges. The graph
//! fingerprint is stored inside the entry and checked on both sides.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use lightdic::propagation::{encode_cache, read_cache};
use lightdic::{Aggregated, PropagationConfig, TaskKind, TaskSplit};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::exit::{CliError, CliResult};

const LAYOUT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub layout: u32,
    pub config_hash: String,
    /// Graph fingerprint as 16 hex digits.
    pub fingerprint: String,
    pub task: TaskKind,
    pub propagation: PropagationConfig,
    pub nodes: usize,
    pub edges: usize,
    pub width: usize,
    pub train_items: usize,
    pub val_items: usize,
    pub test_items: usize,
}

pub fn fingerprint_hex(fp: u64) -> String {
    format!("{fp:016x}")
}

fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Hash of everything that shapes the cached artifacts except the graph
/// itself. Training hyperparameters are left out: they do not change the
/// features or the split.
pub fn config_hash(cfg: &PipelineConfig) -> CliResult<String> {
    let p = &cfg.propagation;
    let s = &cfg.split;
    let digest_of = |path: &Option<PathBuf>| -> CliResult<String> {
        path.as_deref().map_or(Ok("none".to_string()), file_digest)
    };
    let path_of = |path: &Option<PathBuf>| {
        path.as_ref()
            .map_or("none".to_string(), |p| p.display().to_string())
    };
    let canonical = [
        format!("layout={LAYOUT_VERSION}"),
        format!("edges={}", path_of(&cfg.edges)),
        format!("features={}", digest_of(&cfg.features)?),
        format!("labels={}", digest_of(&cfg.labels)?),
        format!("num_nodes={:?}", cfg.num_nodes),
        format!("task={}", cfg.task),
        format!("q={:016x}", p.q.to_bits()),
        format!("k={}", p.k),
        format!("aggregation={}", p.aggregation),
        format!("spectral_dim={}", cfg.spectral_dim),
        format!("spectral_iters={}", cfg.spectral_iters),
        format!("seed={}", cfg.seed()),
        format!("train_per_class={}", s.train_per_class),
        format!("val_count={}", s.val_count),
        format!("train_frac={:016x}", s.train_frac.to_bits()),
        format!("val_frac={:016x}", s.val_frac.to_bits()),
    ]
    .join("\n");
    Ok(hex::encode(&Sha256::digest(canonical.as_bytes())[..8]))
}

/// Write through a sibling temp file and rename, so readers never see a
/// half-written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

#[derive(Clone, Debug)]
pub struct CacheEntry {
    pub hash: String,
    pub dir: PathBuf,
}

impl CacheEntry {
    pub fn for_config(cfg: &PipelineConfig) -> CliResult<Self> {
        let hash = config_hash(cfg)?;
        Ok(Self {
            dir: cfg.cache_dir.join(&hash),
            hash,
        })
    }

    pub fn features_path(&self) -> PathBuf {
        self.dir.join("features.ldcp")
    }

    pub fn split_path(&self) -> PathBuf {
        self.dir.join("split.txt")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.dir.join("manifest.json")
    }

    pub fn default_checkpoint(&self) -> PathBuf {
        self.dir.join("model.ldcw")
    }

    pub fn manifest(&self) -> Option<Manifest> {
        let text = fs::read_to_string(self.manifest_path()).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// A complete entry built from the graph with this fingerprint.
    pub fn is_fresh(&self, fingerprint: u64) -> bool {
        self.manifest().is_some_and(|m| {
            m.fingerprint == fingerprint_hex(fingerprint) && m.config_hash == self.hash
        }) && self.features_path().is_file()
            && self.split_path().is_file()
    }

    /// Write features, split and manifest. The manifest goes last and marks
    /// the entry complete.
    pub fn store(
        &self,
        agg: &Aggregated,
        split: &TaskSplit,
        fingerprint: u64,
        edges: usize,
    ) -> CliResult<Manifest> {
        fs::create_dir_all(&self.dir)?;
        let _ = fs::remove_file(self.manifest_path());
        write_atomic(&self.features_path(), &encode_cache(agg, fingerprint))?;
        write_atomic(
            &self.split_path(),
            split.to_text(Some(fingerprint)).as_bytes(),
        )?;
        let manifest = Manifest {
            layout: LAYOUT_VERSION,
            config_hash: self.hash.clone(),
            fingerprint: fingerprint_hex(fingerprint),
            task: split.kind,
            propagation: agg.config,
            nodes: agg.n(),
            edges,
            width: agg.width(),
            train_items: split.train.len(),
            val_items: split.val.len(),
            test_items: split.test.len(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        write_atomic(&self.manifest_path(), text.as_bytes())?;
        Ok(manifest)
    }

    /// Read the cached features and split back. The fingerprints recorded in
    /// the split file, the feature cache and the manifest must all agree.
    pub fn load(&self) -> CliResult<(Aggregated, TaskSplit, u64)> {
        let split_path = self.split_path();
        if !split_path.is_file() || !self.features_path().is_file() {
            return Err(CliError::format(format!(
                "no cache entry at {}; run precompute with the same configuration first",
                self.dir.display()
            )));
        }
        let (split, fingerprint) = TaskSplit::read(&split_path)?;
        let fingerprint = fingerprint.ok_or_else(|| {
            CliError::format(format!(
                "{}: split carries no graph fingerprint",
                split_path.display()
            ))
        })?;
        let (agg, _) = read_cache::<f64>(self.features_path(), Some(fingerprint))?;
        let manifest = self.manifest().ok_or_else(|| {
            CliError::format(format!(
                "{}: missing or unreadable manifest",
                self.dir.display()
            ))
        })?;
        if manifest.fingerprint != fingerprint_hex(fingerprint) {
            return Err(CliError::format(format!(
                "stale cache: manifest records graph {}, split records {}",
                manifest.fingerprint,
                fingerprint_hex(fingerprint)
            )));
        }
        if split.kind != manifest.task {
            return Err(CliError::format(format!(
                "cache holds a {} split, manifest says {}",
                split.kind, manifest.task
            )));
        }
        Ok((agg, split, fingerprint))
    }
}

/// Advisory lock: a `<hash>.lock` file next to the entry, created
/// exclusively and removed on drop.
#[derive(Debug)]
pub struct CacheLock {
    path: PathBuf,
}

impl CacheLock {
    pub fn acquire(cache_dir: &Path, hash: &str) -> CliResult<Self> {
        fs::create_dir_all(cache_dir)?;
        let path = cache_dir.join(format!("{hash}.lock"));
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(Self { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(CliError::input(format!(
                "cache entry {hash} is locked by another run ({}); remove the file if that run is gone",
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for CacheLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
