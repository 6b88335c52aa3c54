//! Offline K-step complex propagation and weight-free aggregation.
//!
//! Starting from `X̃⁽⁰⁾ = X + iX`, each step applies the magnetic graph
//! operator once: `X̃⁽ᵏ⁺¹⁾ = Â_m X̃⁽ᵏ⁾`. The `K + 1` results are reduced to a
//! single pair of real/imaginary planes by one of four fixed rules; nothing
//! here is learned, so the whole stage runs once before training.

mod cache;

pub use cache::{
    decode_cache, encode_cache, read_cache, write_cache, CACHE_HEADER_BYTES, LDCP_MAGIC,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dense::FeatureMatrix;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::magnetic::{check_q, complex_spmm, magnetic_graph_operator, ComplexSparseMatrix};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_STEPS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Only the K-th step.
    Last,
    /// Element-wise mean over steps 0..=K.
    Mean,
    /// Element-wise sum over steps 0..=K.
    Sum,
    /// Horizontal concatenation of steps 0..=K.
    Concat,
}

impl Aggregation {
    pub const ALL: [Aggregation; 4] = [
        Aggregation::Last,
        Aggregation::Mean,
        Aggregation::Sum,
        Aggregation::Concat,
    ];

    pub fn tag(self) -> u8 {
        match self {
            Aggregation::Last => 0,
            Aggregation::Mean => 1,
            Aggregation::Sum => 2,
            Aggregation::Concat => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.tag() == tag)
            .ok_or_else(|| Error::Format(format!("unknown aggregation tag {tag}")))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Last => "last",
            Aggregation::Mean => "mean",
            Aggregation::Sum => "sum",
            Aggregation::Concat => "concat",
        }
    }

    /// Output width for base width `f` after `k` steps.
    pub fn width(self, f: usize, k: usize) -> usize {
        match self {
            Aggregation::Concat => f * (k + 1),
            _ => f,
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Argument(format!("unknown aggregation {s:?} (last|mean|sum|concat)"))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub q: f64,
    pub k: usize,
    pub aggregation: Aggregation,
}

impl PropagationConfig {
    pub fn new(q: f64, k: usize, aggregation: Aggregation) -> Result<Self> {
        let cfg = Self { q, k, aggregation };
        cfg.validate(DEFAULT_MAX_STEPS)?;
        Ok(cfg)
    }

    pub fn validate(&self, max_steps: usize) -> Result<()> {
        check_q(self.q)?;
        if self.k > max_steps {
            return Err(Error::Argument(format!(
                "K = {} exceeds the step bound {max_steps}",
                self.k
            )));
        }
        Ok(())
    }
}

/// The propagated list `[X̃⁽⁰⁾, …, X̃⁽ᴷ⁾]`, each as `(real, imag)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexFeatureSet<T> {
    pub q: f64,
    pub steps: Vec<(FeatureMatrix<T>, FeatureMatrix<T>)>,
}

impl<T: Scalar> ComplexFeatureSet<T> {
    pub fn k(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    /// Base feature width `f`.
    pub fn width(&self) -> usize {
        self.steps.first().map_or(0, |(re, _)| re.cols())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregatedFeatures<T> {
    pub real: FeatureMatrix<T>,
    pub imag: FeatureMatrix<T>,
    pub config: PropagationConfig,
}

impl<T: Scalar> AggregatedFeatures<T> {
    pub fn n(&self) -> usize {
        self.real.rows()
    }

    /// Per-plane width `f'`.
    pub fn width(&self) -> usize {
        self.real.cols()
    }
}

fn check_input<T: Scalar>(n: usize, x: &FeatureMatrix<T>) -> Result<()> {
    if x.rows() != n {
        return Err(Error::Argument(format!(
            "feature matrix has {} rows, graph has {n} nodes",
            x.rows()
        )));
    }
    if !x.is_finite() {
        return Err(Error::Validation(
            "input features contain non-finite values".into(),
        ));
    }
    Ok(())
}

fn step<T: Scalar>(
    op: &ComplexSparseMatrix<T>,
    re: &FeatureMatrix<T>,
    im: &FeatureMatrix<T>,
    k: usize,
) -> Result<(FeatureMatrix<T>, FeatureMatrix<T>)> {
    let (r, i) = complex_spmm(op, re, im)?;
    if !(r.is_finite() && i.is_finite()) {
        return Err(Error::Validation(format!(
            "non-finite values after propagation step {k}"
        )));
    }
    Ok((r, i))
}

/// `K` applications of the magnetic graph operator to `X + iX`, keeping
/// every intermediate step.
pub fn propagate<T: Scalar>(
    graph: &DirectedGraph,
    x: &FeatureMatrix<T>,
    cfg: &PropagationConfig,
) -> Result<ComplexFeatureSet<T>> {
    cfg.validate(DEFAULT_MAX_STEPS)?;
    check_input(graph.n(), x)?;
    let op = magnetic_graph_operator(graph, cfg.q)?;
    propagate_with(&op, x, cfg.q, cfg.k)
}

/// As [`propagate`], with a prebuilt operator.
pub fn propagate_with<T: Scalar>(
    op: &ComplexSparseMatrix<T>,
    x: &FeatureMatrix<T>,
    q: f64,
    k: usize,
) -> Result<ComplexFeatureSet<T>> {
    check_input(op.n(), x)?;
    let mut steps = Vec::with_capacity(k + 1);
    steps.push((x.clone(), x.clone()));
    for s in 1..=k {
        let (re, im) = &steps[s - 1];
        let next = step(op, re, im, s)?;
        steps.push(next);
    }
    Ok(ComplexFeatureSet { q, steps })
}

/// Reduce the step list to one pair of planes. The same rule is applied to
/// the real and imaginary parts.
pub fn aggregate<T: Scalar>(
    features: &ComplexFeatureSet<T>,
    mode: Aggregation,
) -> Result<AggregatedFeatures<T>> {
    let Some((last_re, last_im)) = features.steps.last() else {
        return Err(Error::Argument(
            "cannot aggregate an empty step list".into(),
        ));
    };
    let config = PropagationConfig {
        q: features.q,
        k: features.k(),
        aggregation: mode,
    };
    let (real, imag) = match mode {
        Aggregation::Last => (last_re.clone(), last_im.clone()),
        Aggregation::Sum | Aggregation::Mean => {
            let mut acc = Accumulator::new(&features.steps[0].0, &features.steps[0].1);
            for (re, im) in &features.steps[1..] {
                acc.add(re, im);
            }
            acc.finish(mode)
        }
        Aggregation::Concat => {
            let re: Vec<_> = features.steps.iter().map(|(r, _)| r).collect();
            let im: Vec<_> = features.steps.iter().map(|(_, i)| i).collect();
            (FeatureMatrix::hcat(&re)?, FeatureMatrix::hcat(&im)?)
        }
    };
    Ok(AggregatedFeatures { real, imag, config })
}

/// Running sum over steps in order 0..=K, so streamed and materialized
/// reductions agree bit-for-bit.
struct Accumulator<T> {
    re: FeatureMatrix<T>,
    im: FeatureMatrix<T>,
    count: usize,
}

impl<T: Scalar> Accumulator<T> {
    fn new(re: &FeatureMatrix<T>, im: &FeatureMatrix<T>) -> Self {
        Self {
            re: re.clone(),
            im: im.clone(),
            count: 1,
        }
    }

    fn add(&mut self, re: &FeatureMatrix<T>, im: &FeatureMatrix<T>) {
        self.re.axpy(T::one(), re);
        self.im.axpy(T::one(), im);
        self.count += 1;
    }

    fn finish(mut self, mode: Aggregation) -> (FeatureMatrix<T>, FeatureMatrix<T>) {
        if mode == Aggregation::Mean && self.count > 1 {
            let c = T::from_usize_lossy(self.count);
            self.re.as_mut_slice().iter_mut().for_each(|v| *v /= c);
            self.im.as_mut_slice().iter_mut().for_each(|v| *v /= c);
        }
        (self.re, self.im)
    }
}

/// Propagate and aggregate in one pass. `Last`, `Mean` and `Sum` keep only
/// O(n·f) state; `Concat` necessarily holds every step. Results are identical
/// to `aggregate(&propagate(..), mode)`.
pub fn precompute<T: Scalar>(
    op: &ComplexSparseMatrix<T>,
    x: &FeatureMatrix<T>,
    cfg: &PropagationConfig,
) -> Result<AggregatedFeatures<T>> {
    cfg.validate(DEFAULT_MAX_STEPS)?;
    if cfg.aggregation == Aggregation::Concat {
        return aggregate(&propagate_with(op, x, cfg.q, cfg.k)?, Aggregation::Concat);
    }
    check_input(op.n(), x)?;
    let mut cur = (x.clone(), x.clone());
    let mut acc = (cfg.aggregation != Aggregation::Last).then(|| Accumulator::new(x, x));
    for s in 1..=cfg.k {
        cur = step(op, &cur.0, &cur.1, s)?;
        if let Some(acc) = acc.as_mut() {
            acc.add(&cur.0, &cur.1);
        }
    }
    let (real, imag) = match acc {
        Some(acc) => acc.finish(cfg.aggregation),
        None => cur,
    };
    Ok(AggregatedFeatures {
        real,
        imag,
        config: *cfg,
    })
}
