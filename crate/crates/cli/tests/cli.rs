use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout)
            .unwrap_or_else(|e| panic!("{e}: {}\n{}", self.stdout, self.stderr))
    }
}

fn lightdic(cwd: &Path, args: &[&str]) -> Run {
    lightdic_env(cwd, args, &[])
}

fn lightdic_env(cwd: &Path, args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lightdic"));
    cmd.current_dir(cwd).args(args).env_remove("LIGHTDIC_CACHE");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let Output {
        status,
        stdout,
        stderr,
    } = cmd.output().unwrap();
    Run {
        code: status.code().unwrap_or(-1),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn ok(run: Run) -> Run {
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    run
}

/// Planted 3-class dataset in `dir/data`.
fn planted(dir: &Path) {
    ok(lightdic(
        dir,
        &[
            "generate",
            "--kind",
            "planted",
            "--nodes",
            "600",
            "--classes",
            "3",
            "--spread",
            "2.0",
            "--out-dir",
            "data",
        ],
    ));
}

const DATA: [&str; 6] = [
    "--edges",
    "data/edges.txt",
    "--features",
    "data/features.ldcf",
    "--labels",
    "data/labels.ldcf",
];

fn with_data<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(&DATA);
    v.extend_from_slice(&["--val-count", "100", "--cache-dir", "cache"]);
    v.extend_from_slice(extra);
    v
}

fn entry_dir(run: &Run) -> PathBuf {
    PathBuf::from(run.json()["cache_entry"].as_str().unwrap())
}

#[test]
fn second_precompute_is_a_cache_hit() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    let first = ok(lightdic(dir.path(), &with_data("precompute", &[])));
    assert_eq!(first.json()["status"], "computed");
    let ldcp = dir.path().join(entry_dir(&first)).join("features.ldcp");
    let before = fs::metadata(&ldcp).unwrap().modified().unwrap();
    let bytes = fs::read(&ldcp).unwrap();

    let second = ok(lightdic(dir.path(), &with_data("precompute", &[])));
    assert_eq!(second.json()["status"], "hit");
    assert!(second.json().get("preprocess_seconds").is_none());
    assert_eq!(fs::metadata(&ldcp).unwrap().modified().unwrap(), before);
    assert_eq!(fs::read(&ldcp).unwrap(), bytes);
}

#[test]
fn precompute_artifacts_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        planted(d);
        ok(lightdic(d, &with_data("precompute", &["--seed", "3"])));
    }
    let entry = |d: &Path| {
        fs::read_dir(d.join("cache"))
            .unwrap()
            .next()
            .unwrap()
            .unwrap()
            .path()
    };
    for file in ["features.ldcp", "split.txt", "manifest.json"] {
        assert_eq!(
            fs::read(entry(a.path()).join(file)).unwrap(),
            fs::read(entry(b.path()).join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn training_never_reads_the_graph() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    ok(lightdic(dir.path(), &with_data("precompute", &[])));
    fs::remove_file(dir.path().join("data/edges.txt")).unwrap();
    let run = ok(lightdic(dir.path(), &with_data("train", &["--lr", "0.1"])));
    assert!(run.json()["metrics"]["test"]["accuracy"].as_f64().unwrap() > 0.9);
    // Precompute, which does need the graph, now fails as an input error.
    assert_eq!(lightdic(dir.path(), &with_data("precompute", &[])).code, 2);
}

#[test]
fn seeded_training_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    ok(lightdic(
        dir.path(),
        &with_data("precompute", &["--seed", "5"]),
    ));
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let run = ok(lightdic(
            dir.path(),
            &with_data(
                "train",
                &[
                    "--seed",
                    "5",
                    "--batch-size",
                    "64",
                    "--out",
                    "m.json",
                    "--checkpoint",
                    "m.ldcw",
                ],
            ),
        ));
        assert!(run.stdout.is_empty());
        outputs.push((
            fs::read(dir.path().join("m.json")).unwrap(),
            fs::read(dir.path().join("m.ldcw")).unwrap(),
        ));
    }
    assert!(outputs[0].0 == outputs[1].0, "metrics JSON differs");
    assert!(outputs[0].1 == outputs[1].1, "checkpoint differs");
    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(!text.contains("seconds"));
}

#[test]
fn timings_are_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    ok(lightdic(dir.path(), &with_data("precompute", &[])));
    let run = ok(lightdic(dir.path(), &with_data("train", &["--timings"])));
    assert!(run.json()["timings"]["epoch_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn toy_blobs_reach_high_test_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    ok(lightdic(
        dir.path(),
        &[
            "generate",
            "--kind",
            "blobs",
            "--nodes",
            "400",
            "--dim",
            "4",
            "--spread",
            "6.0",
            "--out-dir",
            "data",
        ],
    ));
    ok(lightdic(dir.path(), &with_data("precompute", &[])));
    let run = ok(lightdic(dir.path(), &with_data("train", &["--lr", "0.1"])));
    let acc = run.json()["metrics"]["test"]["accuracy"].as_f64().unwrap();
    assert!(acc >= 0.95, "test accuracy {acc}");
}

#[test]
fn eval_reproduces_training_metrics() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    ok(lightdic(dir.path(), &with_data("precompute", &[])));
    let trained = ok(lightdic(dir.path(), &with_data("train", &[]))).json();
    let evaluated = ok(lightdic(dir.path(), &with_data("eval", &[]))).json();
    assert_eq!(trained["metrics"], evaluated["metrics"]);
}

#[test]
fn q_out_of_range_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    let run = lightdic(dir.path(), &with_data("precompute", &["--q", "0.3"]));
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("outside [0, 0.25]"), "{}", run.stderr);
    assert_eq!(
        lightdic(dir.path(), &with_data("precompute", &["-K", "11"])).code,
        2
    );
    assert_eq!(
        lightdic(dir.path(), &with_data("precompute", &["--lr", "0.5"])).code,
        2
    );
}

#[test]
fn mismatched_cache_parts_are_stale() {
    // Two caches built from different graphs under one configuration; mixing
    // their files must be caught.
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    planted(a.path());
    ok(lightdic(
        b.path(),
        &[
            "generate",
            "--nodes",
            "600",
            "--classes",
            "3",
            "--seed",
            "9",
            "--out-dir",
            "data",
        ],
    ));
    fs::copy(
        a.path().join("data/features.ldcf"),
        b.path().join("data/features.ldcf"),
    )
    .unwrap();
    fs::copy(
        a.path().join("data/labels.ldcf"),
        b.path().join("data/labels.ldcf"),
    )
    .unwrap();
    let ea = entry_dir(&ok(lightdic(a.path(), &with_data("precompute", &[]))));
    let eb = entry_dir(&ok(lightdic(b.path(), &with_data("precompute", &[]))));
    assert_eq!(ea, eb);
    fs::copy(
        b.path().join(&eb).join("features.ldcp"),
        a.path().join(&ea).join("features.ldcp"),
    )
    .unwrap();
    let run = lightdic(a.path(), &with_data("train", &[]));
    assert_eq!(run.code, 3, "{}", run.stderr);
    assert!(run.stderr.contains("stale"));
}

#[test]
fn train_without_precompute_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    let run = lightdic(dir.path(), &with_data("train", &[]));
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("run precompute"));
}

#[test]
fn corrupt_cache_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    let entry = entry_dir(&ok(lightdic(dir.path(), &with_data("precompute", &[]))));
    let ldcp = dir.path().join(entry).join("features.ldcp");
    let bytes = fs::read(&ldcp).unwrap();
    fs::write(&ldcp, &bytes[..bytes.len() - 3]).unwrap();
    assert_eq!(lightdic(dir.path(), &with_data("train", &[])).code, 3);
}

#[test]
fn held_lock_blocks_a_second_run() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    let entry = entry_dir(&ok(lightdic(dir.path(), &with_data("precompute", &[]))));
    let hash = entry.file_name().unwrap().to_str().unwrap().to_string();
    let lock = dir.path().join("cache").join(format!("{hash}.lock"));
    fs::write(&lock, "1").unwrap();
    let run = lightdic(dir.path(), &with_data("train", &[]));
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("locked"));
    fs::remove_file(&lock).unwrap();
    ok(lightdic(dir.path(), &with_data("train", &[])));
}

#[test]
fn zero_steps_make_all_aggregations_agree() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    let run = ok(lightdic(
        dir.path(),
        &with_data("ablate-agg", &["-K", "0", "--unsafe-ranges"]),
    ));
    let modes = run.json()["modes"].as_array().unwrap().clone();
    assert_eq!(modes.len(), 4);
    for m in &modes[1..] {
        assert_eq!(m["metrics"], modes[0]["metrics"]);
    }
}

#[test]
fn ablation_reports_every_mode_once() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    let out = ok(lightdic(
        dir.path(),
        &with_data("ablate-agg", &["--task", "existence"]),
    ))
    .json();
    let mut ranking: Vec<&str> = out["ranking"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    ranking.sort_unstable();
    assert_eq!(ranking, ["concat", "last", "mean", "sum"]);
    assert!(out["modes"]
        .as_array()
        .unwrap()
        .iter()
        .all(|m| m["metric"] == "auc"));
}

#[test]
fn edge_level_zero_matches_the_plain_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    ok(lightdic(dir.path(), &with_data("precompute", &[])));
    let plain = ok(lightdic(dir.path(), &with_data("train", &[]))).json();
    let sweep = ok(lightdic(
        dir.path(),
        &with_data("sparsity", &["--axis", "edge", "--levels", "0.0,0.5"]),
    ))
    .json();
    assert_eq!(sweep["levels"][0]["metrics"], plain["metrics"]);
    assert_eq!(sweep["levels"][0]["epochs_run"], plain["epochs_run"]);
}

#[test]
fn sparsity_rejects_levels_outside_the_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    for level in ["1.5", "-0.2"] {
        let run = lightdic(
            dir.path(),
            &with_data("sparsity", &["--axis", "feature", "--levels", level]),
        );
        assert_eq!(run.code, 2, "{}", run.stderr);
    }
    let run = lightdic(
        dir.path(),
        &with_data(
            "sparsity",
            &["--axis", "edge", "--levels", "0.1", "--task", "direction"],
        ),
    );
    assert_eq!(run.code, 2);
}

#[test]
fn missing_features_without_propagation_collapse_to_one_class() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    let out = ok(lightdic(
        dir.path(),
        &with_data(
            "sparsity",
            &[
                "--axis",
                "feature",
                "--levels",
                "1.0",
                "-K",
                "0",
                "--agg",
                "last",
                "--unsafe-ranges",
            ],
        ),
    ))
    .json();
    // Every unlabeled row is zero, so every test node gets the bias-only
    // prediction and accuracy is the share of one class.
    let acc = out["levels"][0]["test_accuracy"].as_f64().unwrap();
    let f1 = out["levels"][0]["metrics"]["test"]["macro_f1"]
        .as_f64()
        .unwrap();
    assert!(acc <= 0.4, "accuracy {acc}");
    assert!(f1 <= 0.2, "macro-F1 {f1}");
}

#[test]
fn label_axis_uses_counts() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    let out = ok(lightdic(
        dir.path(),
        &with_data("sparsity", &["--axis", "label", "--levels", "2,10"]),
    ))
    .json();
    let levels = out["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 2);
    assert_eq!(levels[1]["level"], 10.0);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    fs::write(
        dir.path().join("run.conf"),
        "edges = data/edges.txt\nfeatures = data/features.ldcf\nlabels = data/labels.ldcf\n\
         val_count = 100\nq = 0.05\nK = 2\ncache-dir = cache\n",
    )
    .unwrap();
    let from_file = ok(lightdic(
        dir.path(),
        &["precompute", "--config", "run.conf"],
    ))
    .json();
    let flags_only = ok(lightdic(
        dir.path(),
        &with_data("precompute", &["--q", "0.05", "-K", "2"]),
    ))
    .json();
    assert_eq!(from_file["config_hash"], flags_only["config_hash"]);
    let overridden = ok(lightdic(
        dir.path(),
        &["precompute", "--config", "run.conf", "-K", "4"],
    ))
    .json();
    assert_ne!(overridden["config_hash"], from_file["config_hash"]);
    assert_eq!(overridden["status"], "computed");
}

#[test]
fn cache_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    let args = [
        "precompute",
        DATA[0],
        DATA[1],
        DATA[2],
        DATA[3],
        DATA[4],
        DATA[5],
        "--val-count",
        "100",
    ];
    let run = ok(lightdic_env(
        dir.path(),
        &args,
        &[("LIGHTDIC_CACHE", "envcache")],
    ));
    assert!(run.json()["cache_entry"]
        .as_str()
        .unwrap()
        .starts_with("envcache"));
    assert!(dir.path().join("envcache").is_dir());
}

#[test]
fn spectral_features_stand_in_for_missing_attributes() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    let args = [
        "precompute",
        "--edges",
        "data/edges.txt",
        "--labels",
        "data/labels.ldcf",
        "--spectral-dim",
        "8",
        "--val-count",
        "100",
        "--cache-dir",
        "cache",
    ];
    let run = ok(lightdic(dir.path(), &args));
    assert_eq!(run.json()["width"], 8);
}

#[test]
fn link_tasks_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    planted(dir.path());
    for (task, classes_with_auc) in [
        ("existence", true),
        ("direction", true),
        ("three-class", false),
    ] {
        let args = [
            "--edges",
            "data/edges.txt",
            "--features",
            "data/features.ldcf",
            "--task",
            task,
            "--cache-dir",
            "c",
        ];
        let mut pre = vec!["precompute"];
        pre.extend_from_slice(&args);
        ok(lightdic(dir.path(), &pre));
        let mut tr = vec!["train"];
        tr.extend_from_slice(&args);
        let out = ok(lightdic(dir.path(), &tr)).json();
        assert_eq!(
            out["metrics"]["test"].get("auc").is_some(),
            classes_with_auc,
            "{task}"
        );
    }
}

#[test]
fn verify_json_is_seed_stable_and_vacuous_at_zero_trials() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["verify", "--scale", "12", "--trials", "10", "--seed", "4"];
    let a = ok(lightdic(dir.path(), &args));
    let b = ok(lightdic(dir.path(), &args));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.json()["passed"], true);

    let vacuous = ok(lightdic(dir.path(), &["verify", "--trials", "0"])).json();
    assert_eq!(vacuous["passed"], true);
    assert!(!vacuous["warnings"].as_array().unwrap().is_empty());

    assert_eq!(lightdic(dir.path(), &["verify", "--scale", "65"]).code, 2);
    assert_eq!(
        lightdic(dir.path(), &["verify", "--check", "no_such_check"]).code,
        2
    );
    let one = ok(lightdic(
        dir.path(),
        &["verify", "--check", "metric_oracles", "--trials", "5"],
    ))
    .json();
    assert_eq!(one["checks"].as_array().unwrap().len(), 1);
}

#[test]
fn unknown_flags_exit_with_input_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lightdic(dir.path(), &["train", "--no-such-flag"]).code, 2);
    assert_eq!(lightdic(dir.path(), &["frobnicate"]).code, 2);
    assert_eq!(lightdic(dir.path(), &["--help"]).code, 0);
}
