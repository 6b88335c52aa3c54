//! Randomized property checks against the dense oracle.
//!
//! Every check draws its own seeded instances, so a run is a pure function of
//! [`VerifyConfig`]. Results carry the worst observed error next to the
//! tolerance it was held to; no timings are recorded, which keeps the JSON
//! output byte-stable across runs.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dense::FeatureMatrix;
use crate::error::{Error, Result};
use crate::graph::io::{decode_features, decode_labels, encode_features, encode_labels};
use crate::graph::{generate_random_digraph, DirectedGraph};
use crate::magnetic::{
    complex_spmm, decode_matrix, encode_matrix, magnetic_graph_operator, magnetic_laplacian,
    ComplexSparseMatrix,
};
use crate::model::{auc, decode_checkpoint, encode_checkpoint, macro_f1, LinearModel};
use crate::oracle::{
    denoise_solve, dirichlet_energy, distance, eigendecompose, norm_sqr, prox_gradient_trajectory,
    DenseHermitian,
};
use crate::propagation::{
    decode_cache, encode_cache, propagate, AggregatedFeatures, Aggregation, PropagationConfig,
};

pub const MAX_VERIFY_SCALE: usize = 64;
const Q_GRID: [f64; 4] = [0.0, 0.05, 0.1, 0.25];
const K_GRID: [usize; 4] = [1, 2, 5, 10];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyConfig {
    /// Largest node count of a generated graph.
    pub scale: usize,
    /// Base trial count; individual checks use fixed fractions of it.
    pub trials: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            scale: 30,
            trials: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Acceptance criterion number, for checks that back one.
    pub criterion: Option<u8>,
    pub cases: usize,
    /// Instances drawn but not eligible (e.g. no spectral gap).
    pub skipped: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub passed: bool,
    pub warnings: Vec<String>,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

type CheckFn = fn(&mut Ctx) -> Result<CheckResult>;

const CHECKS: [(&str, CheckFn); 17] = [
    ("hermitian_psd", hermitian_psd),
    ("dirichlet_energy", dirichlet_identity),
    ("low_pass", low_pass_attenuation),
    ("rayleigh_ordering", rayleigh_ordering),
    ("denoise_prox", denoise_convergence),
    ("propagation_oracle", propagation_oracle),
    ("classifier_gradient", classifier_gradient),
    ("metric_oracles", metric_oracles),
    ("format_round_trip", format_round_trip),
    ("operator_spectrum", operator_spectrum),
    ("phase_cosine", phase_cosine),
    ("q_zero_reduction", q_zero_reduction),
    ("spmm_dense", spmm_dense),
    ("propagation_linearity", propagation_linearity),
    ("rayleigh_descent", rayleigh_descent),
    ("eigen_self_consistency", eigen_self_consistency),
    ("thread_determinism", thread_determinism),
];

pub fn check_names() -> impl Iterator<Item = &'static str> {
    CHECKS.iter().map(|(name, _)| *name)
}

/// Run every check. Fails only on a bad configuration; check failures are
/// reported in the result.
pub fn run_all(cfg: &VerifyConfig) -> Result<VerifyReport> {
    run_named(cfg, &check_names().collect::<Vec<_>>())
}

/// Run only the named checks, in registry order.
pub fn run_named(cfg: &VerifyConfig, names: &[&str]) -> Result<VerifyReport> {
    if cfg.scale < 2 || cfg.scale > MAX_VERIFY_SCALE {
        return Err(Error::Argument(format!(
            "scale {} outside [2, {MAX_VERIFY_SCALE}]",
            cfg.scale
        )));
    }
    if let Some(bad) = names.iter().find(|n| !check_names().any(|k| k == **n)) {
        return Err(Error::Argument(format!("unknown check {bad:?}")));
    }
    let mut warnings = Vec::new();
    if cfg.trials == 0 {
        warnings.push("trials = 0: every check passes vacuously".to_string());
    }
    let mut results = Vec::new();
    for (i, (name, check)) in CHECKS.iter().enumerate() {
        if !names.contains(name) {
            continue;
        }
        // Each check's stream depends only on the seed and its registry slot.
        let mut ctx = Ctx {
            cfg: *cfg,
            rng: ChaCha8Rng::seed_from_u64(
                cfg.seed
                    .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                    .wrapping_add(i as u64),
            ),
        };
        results.push(check(&mut ctx)?);
    }
    Ok(VerifyReport {
        config: *cfg,
        passed: results.iter().all(|c| c.passed),
        warnings,
        checks: results,
    })
}

struct Ctx {
    cfg: VerifyConfig,
    rng: ChaCha8Rng,
}

impl Ctx {
    fn trials(&self, divisor: usize) -> usize {
        match self.cfg.trials {
            0 => 0,
            t => (t / divisor).max(1),
        }
    }

    /// Random digraph with `n` in `[max(2, cap/2), cap]` and up to `3n` edges.
    fn graph(&mut self, cap: usize) -> Result<DirectedGraph> {
        let cap = cap.min(self.cfg.scale).max(2);
        let n = self.rng.random_range((cap / 2).max(2)..=cap);
        let m = self.rng.random_range(0..=(3 * n).min(n * (n - 1)));
        generate_random_digraph(n, m, self.rng.random())
    }

    fn q(&mut self) -> f64 {
        self.rng.random_range(0.0..=0.25)
    }

    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    fn signal(&mut self, n: usize) -> Vec<Complex<f64>> {
        (0..n)
            .map(|_| Complex::new(self.normal(), self.normal()))
            .collect()
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> FeatureMatrix<f64> {
        FeatureMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut self.rng))
    }
}

struct Tally {
    name: &'static str,
    criterion: Option<u8>,
    tolerance: f64,
    cases: usize,
    skipped: usize,
    worst: f64,
    failures: Vec<String>,
}

impl Tally {
    fn new(name: &'static str, criterion: Option<u8>, tolerance: f64) -> Self {
        Self {
            name,
            criterion,
            tolerance,
            cases: 0,
            skipped: 0,
            worst: 0.0,
            failures: Vec::new(),
        }
    }

    /// Record one case's error; `ok` overrides the tolerance comparison for
    /// checks with extra conditions.
    fn record(&mut self, err: f64, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if err.is_nan() || err > self.worst {
            self.worst = err;
        }
        if !(ok && err <= self.tolerance) && self.failures.len() < 3 {
            self.failures.push(what());
        }
    }

    fn finish(self) -> CheckResult {
        let passed = self.failures.is_empty();
        let detail = if passed {
            String::new()
        } else {
            format!("first failures: {}", self.failures.join("; "))
        };
        CheckResult {
            name: self.name.to_string(),
            criterion: self.criterion,
            cases: self.cases,
            skipped: self.skipped,
            worst: self.worst,
            tolerance: self.tolerance,
            passed,
            detail,
        }
    }
}

fn dense<T: crate::scalar::Scalar>(m: &ComplexSparseMatrix<T>) -> DenseHermitian<T> {
    DenseHermitian::from_sparse(m)
}

fn column(x: &[Complex<f64>]) -> (FeatureMatrix<f64>, FeatureMatrix<f64>) {
    let n = x.len();
    (
        FeatureMatrix::from_fn(n, 1, |r, _| x[r].re),
        FeatureMatrix::from_fn(n, 1, |r, _| x[r].im),
    )
}

fn uncolumn(re: &FeatureMatrix<f64>, im: &FeatureMatrix<f64>) -> Vec<Complex<f64>> {
    (0..re.rows())
        .map(|r| Complex::new(re.get(r, 0), im.get(r, 0)))
        .collect()
}

fn sparse_power(
    op: &ComplexSparseMatrix<f64>,
    x: &[Complex<f64>],
    k: usize,
) -> Result<Vec<Complex<f64>>> {
    let (mut re, mut im) = column(x);
    for _ in 0..k {
        (re, im) = complex_spmm(op, &re, &im)?;
    }
    Ok(uncolumn(&re, &im))
}

fn hermitian_psd(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("hermitian_psd", Some(1), 1e-9);
    for case in 0..ctx.trials(1) {
        let g = ctx.graph(50)?;
        for q in Q_GRID {
            let l = magnetic_laplacian::<f64>(&g, q)?;
            let hermitian = l.is_hermitian();
            let min = eigendecompose(&dense(&l))?.values[0];
            t.record(-min.min(0.0), hermitian, || {
                format!("case {case} q={q}: min eigenvalue {min:e}, hermitian {hermitian}")
            });
        }
    }
    Ok(t.finish())
}

fn dirichlet_identity(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("dirichlet_energy", Some(2), 1e-9);
    for case in 0..ctx.trials(1) {
        let g = ctx.graph(50)?;
        let q = ctx.q();
        let x = ctx.signal(g.n());
        let quad = dense(&magnetic_laplacian::<f64>(&g, q)?).quadratic_form(&x);
        let edge = dirichlet_energy(&g, q, &x)?;
        let rel = (quad - edge).abs() / quad.abs().max(f64::MIN_POSITIVE);
        let rel = if quad == edge { 0.0 } else { rel };
        t.record(rel, true, || {
            format!("case {case}: quadratic form {quad} vs edge sum {edge}")
        });
    }
    Ok(t.finish())
}

fn low_pass_attenuation(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("low_pass", Some(3), 1e-8);
    for case in 0..ctx.trials(5) {
        let g = ctx.graph(50)?;
        let q = ctx.q();
        let op = magnetic_graph_operator::<f64>(&g, q)?;
        let eig = eigendecompose(&dense(&op).identity_minus())?;
        let mut x = ctx.signal(g.n());
        let norm = norm_sqr(&x).sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let before = eig.project(&x);
        for k in K_GRID {
            let after = eig.project(&sparse_power(&op, &x, k)?);
            let err = before
                .iter()
                .zip(&after)
                .zip(&eig.values)
                .map(|((b, a), &l)| (*a - b * (1.0 - l).powi(k as i32)).norm())
                .fold(0.0, f64::max);
            t.record(err, true, || {
                format!("case {case} K={k}: coefficient error {err:e}")
            });
        }
    }
    Ok(t.finish())
}

fn rayleigh_ordering(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("rayleigh_ordering", Some(4), 1e-8);
    for case in 0..ctx.trials(5) {
        let g = ctx.graph(50)?;
        let q = ctx.q();
        let l = dense(&magnetic_laplacian::<f64>(&g, q)?);
        let eig = eigendecompose(&l)?;
        let scale = eig.values.last().map_or(1.0, |v| v.abs().max(1.0));
        let mut err: f64 = 0.0;
        for (u, &lambda) in eig.vectors.iter().zip(&eig.values) {
            err = err.max((l.rayleigh_quotient(u) - lambda).abs() / scale);
        }
        let mut bound_ok = true;
        for _ in 0..1000 {
            let x = ctx.signal(g.n());
            if l.rayleigh_quotient(&x) < eig.values[0] - 1e-12 * scale {
                bound_ok = false;
            }
        }
        t.record(err, bound_ok, || {
            format!("case {case}: quotient error {err:e}, lower bound holds {bound_ok}")
        });
    }
    Ok(t.finish())
}

fn denoise_convergence(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("denoise_prox", Some(5), 1e-4);
    for case in 0..ctx.trials(5) {
        let g = ctx.graph(30)?;
        let q = ctx.q();
        let y = ctx.signal(g.n());
        let (x, z) = prox_gradient_trajectory(&g, q, &y, &y, 0.5, 500)?;
        let monotone = z.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs());
        let dist = distance(&x, &denoise_solve(&g, q, &y)?);
        t.record(dist, monotone, || {
            format!("case {case}: distance {dist:e}, monotone {monotone}")
        });
    }
    Ok(t.finish())
}

fn relative_frobenius(got: &[f64], want: &[f64]) -> f64 {
    let diff: f64 = got.iter().zip(want).map(|(a, b)| (a - b) * (a - b)).sum();
    let base: f64 = want.iter().map(|v| v * v).sum();
    if diff == 0.0 {
        0.0
    } else {
        (diff / base.max(f64::MIN_POSITIVE)).sqrt()
    }
}

fn propagation_oracle(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("propagation_oracle", Some(6), 1e-10);
    for case in 0..ctx.trials(2) {
        let g = ctx.graph(50)?;
        let x = ctx.matrix(g.n(), 3);
        for q in [0.0, 0.1, 0.25] {
            let m = dense(&magnetic_graph_operator::<f64>(&g, q)?);
            let set = propagate(&g, &x, &PropagationConfig::new(q, 10, Aggregation::Last)?)?;
            for k in K_GRID {
                let (re, im) = &set.steps[k];
                let (mut want_re, mut want_im) = (Vec::new(), Vec::new());
                for c in 0..3 {
                    let mut v: Vec<Complex<f64>> = (0..g.n())
                        .map(|r| Complex::new(x.get(r, c), x.get(r, c)))
                        .collect();
                    for _ in 0..k {
                        v = m.matvec(&v);
                    }
                    want_re.push(v.iter().map(|z| z.re).collect::<Vec<_>>());
                    want_im.push(v.iter().map(|z| z.im).collect::<Vec<_>>());
                }
                let flat = |p: &FeatureMatrix<f64>| {
                    (0..3)
                        .flat_map(|c| (0..g.n()).map(move |r| p.get(r, c)))
                        .collect::<Vec<_>>()
                };
                let got: Vec<f64> = flat(re).into_iter().chain(flat(im)).collect();
                let want: Vec<f64> = want_re
                    .concat()
                    .into_iter()
                    .chain(want_im.concat())
                    .collect();
                let err = relative_frobenius(&got, &want);
                t.record(err, true, || {
                    format!("case {case} q={q} K={k}: relative error {err:e}")
                });
            }
        }
    }
    Ok(t.finish())
}

fn classifier_gradient(ctx: &mut Ctx) -> Result<CheckResult> {
    const EPS: f64 = 1e-5;
    let mut t = Tally::new("classifier_gradient", Some(7), 1e-5);
    for case in 0..ctx.trials(2) {
        let rng = &mut ctx.rng;
        let (d, c, b) = (
            rng.random_range(1..8),
            rng.random_range(2..5),
            rng.random_range(1..16),
        );
        let mut m = LinearModel::<f64>::new(d, c, rng.random_bool(0.5));
        m.weights = FeatureMatrix::from_fn(d, c, |_, _| rng.random_range(-1.0..1.0));
        if let Some(bias) = m.bias.as_mut() {
            bias.iter_mut()
                .for_each(|v| *v = rng.random_range(-1.0..1.0));
        }
        let x = FeatureMatrix::from_fn(b, d, |_, _| rng.random_range(-2.0..2.0));
        let y: Vec<usize> = (0..b).map(|_| rng.random_range(0..c)).collect();
        let wd = rng.random_range(0.0..0.5);
        let (_, g) = m.loss_and_gradient(&x, &y, wd)?;
        let loss = |m: &LinearModel<f64>| m.loss_and_gradient(&x, &y, wd).map(|r| r.0);
        let mut worst: f64 = 0.0;
        let mut compare = |analytic: f64, hi: f64, lo: f64| {
            let numeric = (hi - lo) / (2.0 * EPS);
            // Relative error, with a floor so near-zero partials are judged absolutely.
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(rel);
        };
        for i in 0..d * c {
            let (mut hi, mut lo) = (m.clone(), m.clone());
            hi.weights.as_mut_slice()[i] += EPS;
            lo.weights.as_mut_slice()[i] -= EPS;
            compare(g.weights.as_slice()[i], loss(&hi)?, loss(&lo)?);
        }
        if let Some(gb) = &g.bias {
            for (i, &gbi) in gb.iter().enumerate() {
                let (mut hi, mut lo) = (m.clone(), m.clone());
                hi.bias.as_mut().expect("bias")[i] += EPS;
                lo.bias.as_mut().expect("bias")[i] -= EPS;
                compare(gbi, loss(&hi)?, loss(&lo)?);
            }
        }
        t.record(worst, true, || {
            format!("case {case}: relative error {worst:e}")
        });
    }
    Ok(t.finish())
}

fn brute_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut hits, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if positive[i] && !positive[j] {
                pairs += 1.0;
                hits += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    hits / pairs
}

fn brute_macro_f1(pred: &[usize], truth: &[usize], classes: usize) -> f64 {
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        confusion[t][p] += 1;
    }
    let mut total = 0.0;
    for c in 0..classes {
        let actual: usize = confusion[c].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[c]).sum();
        if actual + predicted > 0 {
            total += 2.0 * confusion[c][c] as f64 / (actual + predicted) as f64;
        }
    }
    total / classes as f64
}

fn metric_oracles(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("metric_oracles", Some(8), 0.0);
    for case in 0..ctx.trials(1) {
        let rng = &mut ctx.rng;
        let n = rng.random_range(2..=200);
        let levels = rng.random_range(2..50);
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0..levels) as f64 / levels as f64)
            .collect();
        let mut positive: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        positive[0] = true;
        positive[1] = false;
        let auc_err =
            (auc(&scores, &positive).unwrap_or(f64::NAN) - brute_auc(&scores, &positive)).abs();

        let classes = rng.random_range(2..6);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let pred: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let f1_err =
            (macro_f1(&pred, &truth, classes) - brute_macro_f1(&pred, &truth, classes)).abs();
        let err = auc_err.max(f1_err);
        t.record(err, !err.is_nan(), || {
            format!("case {case}: auc error {auc_err:e}, macro-F1 error {f1_err:e}")
        });
    }
    Ok(t.finish())
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn awkward_value(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..8) {
        0 => -0.0,
        1 => f64::MIN_POSITIVE / 3.0,
        2 => f64::MAX,
        3 => -1e-300,
        _ => StandardNormal.sample(rng),
    }
}

fn format_round_trip(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("format_round_trip", Some(9), 0.0);
    for case in 0..ctx.trials(5) {
        let rng = &mut ctx.rng;
        let (rows, cols) = (rng.random_range(0..30), rng.random_range(0..12));
        let x = FeatureMatrix::from_fn(rows, cols, |_, _| awkward_value(rng));
        let ldcf =
            bits(decode_features::<f64>(&encode_features(&x))?.as_slice()) == bits(x.as_slice());
        let x32: FeatureMatrix<f32> =
            FeatureMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1e3..1e3));
        let ldcf32 = decode_features::<f32>(&encode_features(&x32))?
            .as_slice()
            .iter()
            .zip(x32.as_slice())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        let labels: Vec<i64> = (0..rows).map(|_| rng.random_range(-5..100)).collect();
        let ldcl = decode_labels(&encode_labels(&labels))? == labels;

        let mode = Aggregation::ALL[rng.random_range(0..4)];
        let agg = AggregatedFeatures {
            real: FeatureMatrix::from_fn(rows, cols, |_, _| awkward_value(rng)),
            imag: FeatureMatrix::from_fn(rows, cols, |_, _| awkward_value(rng)),
            config: PropagationConfig {
                q: rng.random_range(0.0..=0.25),
                k: rng.random_range(0..10),
                aggregation: mode,
            },
        };
        let fp: u64 = rng.random();
        let (back, back_fp) = decode_cache::<f64>(&encode_cache(&agg, fp), Some(fp))?;
        let ldcp = back_fp == fp
            && back.config.q.to_bits() == agg.config.q.to_bits()
            && back.config.k == agg.config.k
            && back.config.aggregation == mode
            && bits(back.real.as_slice()) == bits(agg.real.as_slice())
            && bits(back.imag.as_slice()) == bits(agg.imag.as_slice());

        let mut model = LinearModel::<f64>::new(rows, cols.max(1), rng.random_bool(0.5));
        model
            .weights
            .as_mut_slice()
            .iter_mut()
            .for_each(|w| *w = awkward_value(rng));
        if let Some(b) = model.bias.as_mut() {
            b.iter_mut().for_each(|v| *v = awkward_value(rng));
        }
        let m2 = decode_checkpoint::<f64>(&encode_checkpoint(&model))?;
        let ldcw = bits(m2.weights.as_slice()) == bits(model.weights.as_slice())
            && m2.weights.shape() == model.weights.shape()
            && m2.bias.as_deref().map(bits) == model.bias.as_deref().map(bits);

        let gn = rows.max(1);
        let g = generate_random_digraph(gn, (2 * gn).min(gn * (gn - 1)), rng.random())?;
        let op = magnetic_graph_operator::<f64>(&g, rng.random_range(0.0..=0.25))?;
        let op2 = decode_matrix::<f64>(&encode_matrix(&op))?;
        let ldcm = op2.row_ptr() == op.row_ptr()
            && op2.col_idx() == op.col_idx()
            && bits(op2.re()) == bits(op.re())
            && bits(op2.im()) == bits(op.im());

        let ok = ldcf && ldcf32 && ldcl && ldcp && ldcw && ldcm;
        t.record(if ok { 0.0 } else { 1.0 }, ok, || {
            format!("case {case}: LDCF {ldcf}/{ldcf32} labels {ldcl} LDCP {ldcp} LDCW {ldcw} LDCM {ldcm}")
        });
    }
    Ok(t.finish())
}

fn operator_spectrum(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("operator_spectrum", None, 1e-9);
    for case in 0..ctx.trials(1) {
        let g = ctx.graph(50)?;
        let q = ctx.q();
        let op = magnetic_graph_operator::<f64>(&g, q)?;
        let diag_ok = (0..g.n()).all(|u| {
            let (re, im) = op.get(u, u);
            re > 0.0 && im == 0.0
        });
        let eig = eigendecompose(&dense(&op))?;
        let excess = eig.values.iter().map(|v| v.abs() - 1.0).fold(0.0, f64::max);
        let ok = op.is_hermitian() && diag_ok;
        t.record(excess, ok, || {
            format!("case {case} q={q}: spectrum excess {excess:e}, structure ok {ok}")
        });
    }
    Ok(t.finish())
}

fn phase_cosine(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("phase_cosine", None, 0.0);
    for case in 0..ctx.trials(1) {
        let g = ctx.graph(50)?;
        let q = ctx.q();
        let op = magnetic_graph_operator::<f64>(&g, q)?;
        // Real part is magnitude times cos Θ.
        let worst = op.re().iter().map(|&v| -v).fold(0.0, f64::max);
        t.record(worst, true, || {
            format!("case {case} q={q}: negative real part {worst:e}")
        });
    }
    Ok(t.finish())
}

fn q_zero_reduction(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("q_zero_reduction", None, 1e-14);
    for case in 0..ctx.trials(5) {
        let g = ctx.graph(50)?;
        let n = g.n();
        let op = magnetic_graph_operator::<f64>(&g, 0.0)?;
        let mut a = vec![0.0; n * n];
        for (u, v) in g.edges() {
            a[u * n + v] += 0.5;
            a[v * n + u] += 0.5;
        }
        (0..n).for_each(|u| a[u * n + u] += 1.0);
        let deg: Vec<f64> = (0..n).map(|u| a[u * n..(u + 1) * n].iter().sum()).collect();
        let (re, im) = op.to_dense();
        let mut err: f64 = 0.0;
        for u in 0..n {
            for v in 0..n {
                err = err.max((re[u * n + v] - a[u * n + v] / (deg[u] * deg[v]).sqrt()).abs());
            }
        }
        let imag_zero = im.iter().all(|&v| v == 0.0);
        t.record(err, imag_zero, || {
            format!("case {case}: entry error {err:e}, imaginary plane zero {imag_zero}")
        });
    }
    Ok(t.finish())
}

fn spmm_dense(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("spmm_dense", None, 1e-12);
    for case in 0..ctx.trials(2) {
        let g = ctx.graph(64)?;
        let q = ctx.q();
        let op = magnetic_graph_operator::<f64>(&g, q)?;
        let m = dense(&op);
        let f = ctx.rng.random_range(1..6);
        let (xr, xi) = (ctx.matrix(g.n(), f), ctx.matrix(g.n(), f));
        let (yr, yi) = complex_spmm(&op, &xr, &xi)?;
        let (mut got, mut want) = (Vec::new(), Vec::new());
        for c in 0..f {
            let x: Vec<Complex<f64>> = (0..g.n())
                .map(|r| Complex::new(xr.get(r, c), xi.get(r, c)))
                .collect();
            for (r, z) in m.matvec(&x).into_iter().enumerate() {
                want.extend([z.re, z.im]);
                got.extend([yr.get(r, c), yi.get(r, c)]);
            }
        }
        let err = relative_frobenius(&got, &want);
        t.record(err, true, || format!("case {case}: relative error {err:e}"));
    }
    Ok(t.finish())
}

fn propagation_linearity(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("propagation_linearity", None, 1e-10);
    for case in 0..ctx.trials(5) {
        let g = ctx.graph(50)?;
        let cfg = PropagationConfig::new(ctx.q(), K_GRID[case % K_GRID.len()], Aggregation::Last)?;
        let (x, y) = (ctx.matrix(g.n(), 2), ctx.matrix(g.n(), 2));
        let (a, b) = (ctx.normal(), ctx.normal());
        let mut combo = x.clone();
        combo.scale(a);
        combo.axpy(b, &y);
        let (px, py, pc) = (
            propagate(&g, &x, &cfg)?,
            propagate(&g, &y, &cfg)?,
            propagate(&g, &combo, &cfg)?,
        );
        let k = cfg.k;
        let mut got = Vec::new();
        let mut want = Vec::new();
        for plane in 0..2 {
            let pick = |s: &crate::propagation::ComplexFeatureSet<f64>| {
                let (re, im) = &s.steps[k];
                if plane == 0 {
                    re.clone()
                } else {
                    im.clone()
                }
            };
            let mut w = pick(&px);
            w.scale(a);
            w.axpy(b, &pick(&py));
            want.extend_from_slice(w.as_slice());
            got.extend_from_slice(pick(&pc).as_slice());
        }
        let err = relative_frobenius(&got, &want);
        t.record(err, true, || format!("case {case}: relative error {err:e}"));
    }
    Ok(t.finish())
}

/// Sparse-path smoothness after 64 steps against the oracle's smallest
/// eigenvalue of `I - Â`. A (graph, signal) instance is eligible when the
/// dominant-eigenvalue margin predicts an error below a tenth of the
/// tolerance; others are counted as skipped.
fn rayleigh_descent(ctx: &mut Ctx) -> Result<CheckResult> {
    const K: usize = 64;
    let mut t = Tally::new("rayleigh_descent", None, 1e-4);
    let want = ctx.trials(5);
    let mut attempts = 0;
    while t.cases < want && attempts < 50 * want {
        attempts += 1;
        let g = ctx.graph(50)?;
        let q = ctx.q();
        let op = magnetic_graph_operator::<f64>(&g, q)?;
        let lt = dense(&op).identity_minus();
        let eig = eigendecompose(&lt)?;
        let x = ctx.signal(g.n());
        let coeffs = eig.project(&x);
        let lead = (1.0 - eig.values[0]).abs();
        let rest = eig.values[1..]
            .iter()
            .map(|l| (1.0 - l).abs())
            .fold(0.0, f64::max);
        let spread = eig.values.last().copied().unwrap_or(0.0) - eig.values[0];
        let predicted =
            (rest / lead).powi(2 * K as i32) * spread * norm_sqr(&x) / coeffs[0].norm_sqr();
        if !(lead > rest && predicted <= 1e-5) {
            t.skipped += 1;
            continue;
        }
        let z = sparse_power(&op, &x, K)?;
        let rq = lt.rayleigh_quotient(&z);
        let err = (rq - eig.values[0]).abs();
        t.record(err, true, || {
            format!(
                "q={q}, n={}: quotient {rq} vs lambda_min {}",
                g.n(),
                eig.values[0]
            )
        });
    }
    if t.cases < want && t.failures.len() < 3 {
        t.failures.push(format!(
            "only {} of {want} eligible instances in {attempts} draws",
            t.cases
        ));
    }
    Ok(t.finish())
}

fn eigen_self_consistency(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("eigen_self_consistency", None, 1e-8);
    for case in 0..ctx.trials(5) {
        let g = ctx.graph(50)?;
        let q = ctx.q();
        let mut mats = vec![
            ("laplacian", dense(&magnetic_laplacian::<f64>(&g, q)?)),
            ("operator", dense(&magnetic_graph_operator::<f64>(&g, q)?)),
        ];
        let n = g.n();
        let (mut re, mut im) = (vec![0.0; n * n], vec![0.0; n * n]);
        for u in 0..n {
            re[u * n + u] = ctx.normal();
            for v in 0..u {
                let (a, b) = (ctx.normal(), ctx.normal());
                re[u * n + v] = a;
                re[v * n + u] = a;
                im[u * n + v] = b;
                im[v * n + u] = -b;
            }
        }
        mats.push(("random", DenseHermitian::new(n, re, im)?));
        for (what, m) in mats {
            let eig = eigendecompose(&m)?;
            let scale = m.frobenius_norm().max(1.0);
            let err = (eig.reconstruction_error(&m) / scale)
                .max(eig.orthonormality_error())
                .max(eig.max_residual(&m) / scale);
            t.record(err, eig.values.len() == n, || {
                format!("case {case} {what}: residual {err:e}")
            });
        }
    }
    Ok(t.finish())
}

fn thread_determinism(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut t = Tally::new("thread_determinism", None, 0.0);
    if ctx.cfg.trials == 0 {
        return Ok(t.finish());
    }
    // Large enough that rows are split across workers.
    let g = generate_random_digraph(3000, 12000, ctx.rng.random())?;
    let x = ctx.matrix(3000, 4);
    let cfg = PropagationConfig::new(ctx.q(), 3, Aggregation::Concat)?;
    let run = |threads: usize| -> Result<Vec<u64>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
        let set = pool.install(|| propagate(&g, &x, &cfg))?;
        let (re, im) = &set.steps[cfg.k];
        Ok(bits(re.as_slice())
            .into_iter()
            .chain(bits(im.as_slice()))
            .collect())
    };
    let reference = run(1)?;
    for threads in [2, 4, 7] {
        let same = run(threads)? == reference;
        t.record(if same { 0.0 } else { 1.0 }, same, || {
            format!("{threads} threads differ from 1 thread")
        });
    }
    Ok(t.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes_and_is_deterministic() {
        let cfg = VerifyConfig {
            scale: 12,
            trials: 10,
            seed: 3,
        };
        let a = run_all(&cfg).unwrap();
        for c in &a.checks {
            assert!(c.passed, "{c:?}");
        }
        let b = run_all(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn registry_names_match_results() {
        let r = run_all(&VerifyConfig {
            scale: 4,
            trials: 0,
            seed: 0,
        })
        .unwrap();
        let got: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(got, check_names().collect::<Vec<_>>());
    }

    #[test]
    fn zero_trials_is_vacuous_with_warning() {
        let r = run_all(&VerifyConfig {
            scale: 10,
            trials: 0,
            seed: 0,
        })
        .unwrap();
        assert!(r.passed);
        assert_eq!(r.warnings.len(), 1);
        assert!(r.checks.iter().all(|c| c.cases == 0));
    }

    #[test]
    fn scale_is_bounded() {
        assert!(run_all(&VerifyConfig {
            scale: 65,
            trials: 1,
            seed: 0
        })
        .is_err());
        assert!(run_all(&VerifyConfig {
            scale: 1,
            trials: 1,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn named_subset() {
        let cfg = VerifyConfig {
            scale: 8,
            trials: 5,
            seed: 1,
        };
        let r = run_named(&cfg, &["metric_oracles"]).unwrap();
        assert_eq!(r.checks.len(), 1);
        assert_eq!(
            r.checks[0],
            run_all(&cfg)
                .unwrap()
                .check("metric_oracles")
                .unwrap()
                .clone()
        );
        assert!(run_named(&cfg, &["nope"]).is_err());
    }
}
