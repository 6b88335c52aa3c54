//! Train/validation/test partitions for node classification and the three
//! link-level tasks.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DirectedGraph;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    NodeClassification,
    /// Is the ordered pair `(u, v)` an edge?
    LinkExistence,
    /// Given a one-way edge, which orientation is the real one?
    LinkDirection,
    /// `(u, v)` in E, `(v, u)` in E, or neither.
    LinkThreeClass,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::NodeClassification,
        TaskKind::LinkExistence,
        TaskKind::LinkDirection,
        TaskKind::LinkThreeClass,
    ];

    pub fn is_link(self) -> bool {
        self != TaskKind::NodeClassification
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::NodeClassification => "node_classification",
            TaskKind::LinkExistence => "link_existence",
            TaskKind::LinkDirection => "link_direction",
            TaskKind::LinkThreeClass => "link_three_class",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown task kind {s:?}")))
    }
}

/// One supervised example: a node, or an ordered node pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Item {
    Node(usize),
    Pair(usize, usize),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subset {
    pub items: Vec<Item>,
    pub labels: Vec<usize>,
}

impl Subset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn push(&mut self, item: Item, label: usize) {
        self.items.push(item);
        self.labels.push(label);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskSplit {
    pub kind: TaskKind,
    pub train: Subset,
    pub val: Subset,
    pub test: Subset,
    pub num_classes: usize,
    /// Training-edge subgraph for link tasks. `None` means the full input
    /// graph (node tasks), or that the split was read back from disk.
    pub propagation_graph: Option<DirectedGraph>,
}

impl TaskSplit {
    pub fn subsets(&self) -> [(&'static str, &Subset); 3] {
        [
            ("train", &self.train),
            ("val", &self.val),
            ("test", &self.test),
        ]
    }

    pub fn propagation_graph<'a>(&'a self, full: &'a DirectedGraph) -> &'a DirectedGraph {
        self.propagation_graph.as_ref().unwrap_or(full)
    }

    /// Checks the structural invariants: disjoint nonempty subsets and labels
    /// in range.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (name, s) in self.subsets() {
            if s.is_empty() {
                return Err(Error::Validation(format!("{name} split is empty")));
            }
            if s.items.len() != s.labels.len() {
                return Err(Error::Validation(format!(
                    "{name}: item/label count mismatch"
                )));
            }
            if let Some(&bad) = s.labels.iter().find(|&&l| l >= self.num_classes) {
                return Err(Error::Validation(format!(
                    "{name}: label {bad} outside [0, {})",
                    self.num_classes
                )));
            }
            for item in &s.items {
                if !seen.insert(*item) {
                    return Err(Error::Validation(format!(
                        "{item:?} appears in more than one split"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self, fingerprint: Option<u64>) -> String {
        let mut out = format!("# task {}\n# classes {}\n", self.kind, self.num_classes);
        if let Some(fp) = fingerprint {
            out.push_str(&format!("# fingerprint {fp:016x}\n"));
        }
        for (name, s) in self.subsets() {
            for (item, label) in s.items.iter().zip(&s.labels) {
                match item {
                    Item::Node(u) => out.push_str(&format!("{name} {u} {label}\n")),
                    Item::Pair(u, v) => out.push_str(&format!("{name} {u} {v} {label}\n")),
                }
            }
        }
        out
    }

    /// Parse the newline-delimited `split_name index [index2] label` form.
    /// Returns the split and the graph fingerprint recorded in its header.
    pub fn from_text(text: &str) -> Result<(Self, Option<u64>)> {
        let mut kind = None;
        let mut classes = None;
        let mut fingerprint = None;
        let mut subsets = [Subset::default(), Subset::default(), Subset::default()];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            let err = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut kv = rest.split_whitespace();
                match (kv.next(), kv.next()) {
                    (Some("task"), Some(v)) => kind = Some(v.parse::<TaskKind>()?),
                    (Some("classes"), Some(v)) => {
                        classes = Some(
                            v.parse::<usize>()
                                .map_err(|_| err(format!("bad class count {v:?}")))?,
                        )
                    }
                    (Some("fingerprint"), Some(v)) => {
                        fingerprint = Some(
                            u64::from_str_radix(v, 16)
                                .map_err(|_| err(format!("bad fingerprint {v:?}")))?,
                        )
                    }
                    _ => {}
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let slot = match fields.first().copied() {
                Some("train") => 0,
                Some("val") => 1,
                Some("test") => 2,
                other => return Err(err(format!("unknown split name {other:?}"))),
            };
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| err(format!("invalid integer {s:?}")))
            };
            let (item, label) = match fields.len() {
                3 => (Item::Node(num(fields[1])?), num(fields[2])?),
                4 => (
                    Item::Pair(num(fields[1])?, num(fields[2])?),
                    num(fields[3])?,
                ),
                k => return Err(err(format!("expected 3 or 4 fields, found {k}"))),
            };
            subsets[slot].push(item, label);
        }
        let kind = kind.ok_or_else(|| Error::Format("split file has no '# task' header".into()))?;
        let [train, val, test] = subsets;
        let num_classes = match classes {
            Some(c) => c,
            None => train
                .labels
                .iter()
                .chain(&val.labels)
                .chain(&test.labels)
                .max()
                .map_or(0, |m| m + 1),
        };
        let split = TaskSplit {
            kind,
            train,
            val,
            test,
            num_classes,
            propagation_graph: None,
        };
        split.validate()?;
        Ok((split, fingerprint))
    }

    pub fn write(&self, path: impl AsRef<Path>, fingerprint: Option<u64>) -> Result<()> {
        fs::write(path, self.to_text(fingerprint))?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<(Self, Option<u64>)> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

/// Stratified node split: `per_class_train` random nodes from every class,
/// `val_count` uniform random nodes from what remains, the rest is test.
pub fn build_node_split(
    graph: &DirectedGraph,
    labels: &[usize],
    per_class_train: usize,
    val_count: usize,
    seed: u64,
) -> Result<TaskSplit> {
    let n = graph.n();
    if labels.len() != n {
        return Err(Error::Argument(format!(
            "{} labels for {n} nodes",
            labels.len()
        )));
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    if per_class_train == 0 || val_count == 0 {
        return Err(Error::Argument(
            "training and validation sets must be nonempty".into(),
        ));
    }
    if per_class_train * num_classes + val_count >= n {
        return Err(Error::Argument(format!(
            "{per_class_train} x {num_classes} training + {val_count} validation nodes leave no test nodes out of {n}"
        )));
    }

    let mut by_class = vec![Vec::new(); num_classes];
    for (u, &c) in labels.iter().enumerate() {
        by_class[c].push(u);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; n];
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.len() < per_class_train {
            return Err(Error::InsufficientLabels {
                class,
                have: members.len(),
                need: per_class_train,
            });
        }
        members.shuffle(&mut rng);
        for &u in &members[..per_class_train] {
            in_train[u] = true;
        }
    }
    let mut rest: Vec<usize> = (0..n).filter(|&u| !in_train[u]).collect();
    rest.shuffle(&mut rng);
    let mut val_nodes = rest[..val_count].to_vec();
    let mut test_nodes = rest[val_count..].to_vec();
    val_nodes.sort_unstable();
    test_nodes.sort_unstable();

    let subset = |nodes: &[usize]| Subset {
        items: nodes.iter().map(|&u| Item::Node(u)).collect(),
        labels: nodes.iter().map(|&u| labels[u]).collect(),
    };
    let train_nodes: Vec<usize> = (0..n).filter(|&u| in_train[u]).collect();
    Ok(TaskSplit {
        kind: TaskKind::NodeClassification,
        train: subset(&train_nodes),
        val: subset(&val_nodes),
        test: subset(&test_nodes),
        num_classes,
        propagation_graph: None,
    })
}

/// Edge split for the link tasks. Edges are shuffled and cut by count into
/// `train_frac` / `val_frac` / remainder; the propagation graph keeps only the
/// training edges so held-out edges never reach the propagated features.
pub fn build_link_split(
    graph: &DirectedGraph,
    kind: TaskKind,
    train_frac: f64,
    val_frac: f64,
    seed: u64,
) -> Result<TaskSplit> {
    if !kind.is_link() {
        return Err(Error::Argument(format!("{kind} is not a link task")));
    }
    if !(train_frac > 0.0 && val_frac > 0.0 && train_frac + val_frac < 1.0) {
        return Err(Error::Argument(format!(
            "invalid fractions {train_frac}/{val_frac}"
        )));
    }
    let m = graph.m();
    if m < 20 {
        return Err(Error::InsufficientEdges(format!(
            "link split needs at least 20 edges, graph has {m}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = graph.edges().collect();
    edges.shuffle(&mut rng);
    // Small slack so that e.g. 0.15 * 100 counts as 15, not 14.
    let n_train = (train_frac * m as f64 + 1e-9).floor() as usize;
    let n_val = (val_frac * m as f64 + 1e-9).floor() as usize;
    let parts = [
        &edges[..n_train],
        &edges[n_train..n_train + n_val],
        &edges[n_train + n_val..],
    ];

    let mut negatives = NegativeSampler::new(graph);
    let mut subsets = [Subset::default(), Subset::default(), Subset::default()];
    for (part, subset) in parts.iter().zip(subsets.iter_mut()) {
        match kind {
            TaskKind::LinkExistence => {
                for &(u, v) in part.iter() {
                    subset.push(Item::Pair(u, v), 1);
                }
                for _ in 0..part.len() {
                    let (u, v) = negatives.sample(&mut rng, false)?;
                    subset.push(Item::Pair(u, v), 0);
                }
            }
            TaskKind::LinkDirection | TaskKind::LinkThreeClass => {
                let one_way: Vec<_> = part
                    .iter()
                    .copied()
                    .filter(|&(u, v)| !graph.has_edge(v, u))
                    .collect();
                if one_way.is_empty() {
                    return Err(Error::InsufficientEdges(format!(
                        "no one-way edges left for a {kind} subset"
                    )));
                }
                for &(u, v) in &one_way {
                    subset.push(Item::Pair(u, v), 0);
                    subset.push(Item::Pair(v, u), 1);
                }
                if kind == TaskKind::LinkThreeClass {
                    for _ in 0..one_way.len() {
                        let (u, v) = negatives.sample(&mut rng, true)?;
                        subset.push(Item::Pair(u, v), 2);
                    }
                }
            }
            TaskKind::NodeClassification => unreachable!(),
        }
    }

    let [train, val, test] = subsets;
    let num_classes = if kind == TaskKind::LinkThreeClass {
        3
    } else {
        2
    };
    Ok(TaskSplit {
        kind,
        train,
        val,
        test,
        num_classes,
        propagation_graph: Some(graph.with_edges(parts[0])),
    })
}

/// Rejection sampler over ordered non-edge pairs; never hands out a pair twice.
struct NegativeSampler<'a> {
    graph: &'a DirectedGraph,
    used: HashSet<(usize, usize)>,
}

impl<'a> NegativeSampler<'a> {
    fn new(graph: &'a DirectedGraph) -> Self {
        Self {
            graph,
            used: HashSet::new(),
        }
    }

    /// With `both_directions`, pairs whose reverse is an edge are rejected too.
    fn sample(&mut self, rng: &mut ChaCha8Rng, both_directions: bool) -> Result<(usize, usize)> {
        let n = self.graph.n();
        for _ in 0..10_000 {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u == v || self.graph.has_edge(u, v) || (both_directions && self.graph.has_edge(v, u))
            {
                continue;
            }
            if self.used.insert((u, v)) {
                return Ok((u, v));
            }
        }
        Err(Error::InsufficientEdges(
            "graph too dense to sample non-edge pairs".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_random_digraph;

    fn striped_labels(n: usize, classes: usize) -> Vec<usize> {
        (0..n).map(|u| u % classes).collect()
    }

    #[test]
    fn node_split_cardinalities() {
        let g = DirectedGraph::empty(20);
        let s = build_node_split(&g, &striped_labels(20, 3), 2, 4, 0).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (6, 4, 10));
        s.validate().unwrap();
    }

    #[test]
    fn coraml_shaped_split() {
        let g = DirectedGraph::empty(2995);
        let s = build_node_split(&g, &striped_labels(2995, 7), 20, 500, 11).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (140, 500, 2355));
    }

    #[test]
    fn seeds_change_members_not_class_counts() {
        let g = DirectedGraph::empty(200);
        let labels = striped_labels(200, 4);
        let a = build_node_split(&g, &labels, 5, 30, 1).unwrap();
        let b = build_node_split(&g, &labels, 5, 30, 2).unwrap();
        assert_ne!(a.train.items, b.train.items);
        let counts = |s: &TaskSplit| {
            let mut c = vec![0; 4];
            s.train.labels.iter().for_each(|&l| c[l] += 1);
            c
        };
        assert_eq!(counts(&a), vec![5; 4]);
        assert_eq!(counts(&a), counts(&b));
    }

    #[test]
    fn node_split_errors() {
        let g = DirectedGraph::empty(20);
        let mut labels = striped_labels(20, 3);
        labels[0] = 5; // class 5 has a single member, classes 3 and 4 none
        assert!(matches!(
            build_node_split(&g, &labels, 2, 4, 0),
            Err(Error::InsufficientLabels {
                class: 3,
                have: 0,
                need: 2
            })
        ));
        assert!(matches!(
            build_node_split(&g, &striped_labels(20, 3), 5, 6, 0),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn link_split_counts_and_leakage() {
        let g = generate_random_digraph(40, 100, 5).unwrap();
        for kind in [
            TaskKind::LinkExistence,
            TaskKind::LinkDirection,
            TaskKind::LinkThreeClass,
        ] {
            let s = build_link_split(&g, kind, 0.8, 0.15, 9).unwrap();
            s.validate().unwrap();
            let prop = s.propagation_graph.as_ref().unwrap();
            assert_eq!(prop.m(), 80);
            for subset in [&s.val, &s.test] {
                for item in &subset.items {
                    if let Item::Pair(u, v) = *item {
                        if g.has_edge(u, v) {
                            assert!(!prop.has_edge(u, v), "{kind}: held-out edge leaked");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn existence_split_is_balanced() {
        let g = generate_random_digraph(40, 100, 5).unwrap();
        let s = build_link_split(&g, TaskKind::LinkExistence, 0.8, 0.15, 1).unwrap();
        for (_, subset) in s.subsets() {
            let pos = subset.labels.iter().filter(|&&l| l == 1).count();
            assert_eq!(2 * pos, subset.len());
            for (item, &label) in subset.items.iter().zip(&subset.labels) {
                let Item::Pair(u, v) = *item else { panic!() };
                assert_eq!(g.has_edge(u, v), label == 1);
            }
        }
        assert_eq!(s.train.len(), 160);
        assert_eq!(s.val.len(), 30);
        assert_eq!(s.test.len(), 10);
    }

    #[test]
    fn direction_pairs_come_with_their_reverse() {
        // A DAG-like orientation: every edge u -> v with u < v is one-way.
        let edges: Vec<_> = (0..30)
            .flat_map(|u| (u + 1..30).map(move |v| (u, v)))
            .take(120)
            .collect();
        let g = DirectedGraph::from_edges(30, edges).unwrap();
        let s = build_link_split(&g, TaskKind::LinkDirection, 0.8, 0.15, 4).unwrap();
        for (_, subset) in s.subsets() {
            let set: HashSet<_> = subset.items.iter().zip(&subset.labels).collect();
            for (item, &label) in subset.items.iter().zip(&subset.labels) {
                let Item::Pair(u, v) = *item else { panic!() };
                assert!(set.contains(&(&Item::Pair(v, u), &(1 - label))));
                assert_eq!(label == 0, g.has_edge(u, v));
            }
        }
    }

    #[test]
    fn three_class_counts_are_equal() {
        let g = generate_random_digraph(50, 150, 2).unwrap();
        let s = build_link_split(&g, TaskKind::LinkThreeClass, 0.8, 0.15, 3).unwrap();
        assert_eq!(s.num_classes, 3);
        for (_, subset) in s.subsets() {
            let mut c = [0; 3];
            subset.labels.iter().for_each(|&l| c[l] += 1);
            assert!(c[0] == c[1] && c[1] == c[2] && c[0] > 0);
            for (item, &label) in subset.items.iter().zip(&subset.labels) {
                let Item::Pair(u, v) = *item else { panic!() };
                let want = if g.has_edge(u, v) {
                    0
                } else if g.has_edge(v, u) {
                    1
                } else {
                    2
                };
                assert_eq!(label, want);
            }
        }
    }

    #[test]
    fn direction_without_one_way_edges_fails() {
        let edges: Vec<_> = (0..12)
            .flat_map(|u| [(u, (u + 1) % 12), ((u + 1) % 12, u)])
            .collect();
        let g = DirectedGraph::from_edges(12, edges).unwrap();
        assert!(matches!(
            build_link_split(&g, TaskKind::LinkDirection, 0.8, 0.15, 0),
            Err(Error::InsufficientEdges(_))
        ));
        let small = generate_random_digraph(10, 19, 0).unwrap();
        assert!(matches!(
            build_link_split(&small, TaskKind::LinkExistence, 0.8, 0.15, 0),
            Err(Error::InsufficientEdges(_))
        ));
    }

    #[test]
    fn split_text_round_trip() {
        let g = generate_random_digraph(40, 100, 5).unwrap();
        let s = build_link_split(&g, TaskKind::LinkThreeClass, 0.8, 0.15, 9).unwrap();
        let (back, fp) = TaskSplit::from_text(&s.to_text(Some(g.fingerprint()))).unwrap();
        assert_eq!(fp, Some(g.fingerprint()));
        assert_eq!(back.train, s.train);
        assert_eq!(back.test, s.test);
        assert_eq!(back.num_classes, 3);

        let node =
            build_node_split(&DirectedGraph::empty(20), &striped_labels(20, 2), 3, 4, 0).unwrap();
        let (back, fp) = TaskSplit::from_text(&node.to_text(None)).unwrap();
        assert_eq!(fp, None);
        assert_eq!(back, node);
    }
}
