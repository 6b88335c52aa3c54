use serde::{Deserialize, Serialize};

use super::LinearModel;
use crate::dense::FeatureMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Only for two-class problems.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    pub per_epoch_loss: Vec<f64>,
}

/// Accuracy, macro-F1 and (for two classes) AUC of the class-1 probability.
/// `per_epoch_loss` is left empty for the caller to fill.
pub fn evaluate<T: Scalar>(
    model: &LinearModel<T>,
    design: &FeatureMatrix<T>,
    labels: &[usize],
) -> Result<MetricsReport> {
    if design.rows() == 0 || labels.len() != design.rows() {
        return Err(Error::Argument(format!(
            "{} labels for {} evaluation rows",
            labels.len(),
            design.rows()
        )));
    }
    let probs = model.forward(design)?;
    let pred: Vec<usize> = (0..probs.rows())
        .map(|r| super::argmax(probs.row(r)))
        .collect();
    let classes = model.classes();
    let auc = (classes == 2).then(|| {
        let scores: Vec<f64> = (0..probs.rows())
            .map(|r| probs.get(r, 1).to_f64_lossy())
            .collect();
        let truth: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
        auc(&scores, &truth)
    });
    Ok(MetricsReport {
        accuracy: accuracy(&pred, labels),
        macro_f1: macro_f1(&pred, labels, classes),
        auc: auc.flatten(),
        per_epoch_loss: Vec::new(),
    })
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

/// Unweighted mean of per-class F1 over `0..classes`; a class with no true
/// and no predicted members scores 0.
pub fn macro_f1(pred: &[usize], truth: &[usize], classes: usize) -> f64 {
    if classes == 0 {
        return 0.0;
    }
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fn_ = vec![0usize; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[t] += 1;
        } else {
            if p < classes {
                fp[p] += 1;
            }
            if t < classes {
                fn_[t] += 1;
            }
        }
    }
    let total: f64 = (0..classes)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fn_[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .sum();
    total / classes as f64
}

/// Mann–Whitney AUC: the fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half. `None` if either class is absent.
pub fn auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let pos = positive.iter().filter(|&&p| p).count();
    let neg = positive.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of midranks (1-based, doubled to stay integral) of the positives.
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid2 = (i + 1 + j + 1) as u128;
        rank_sum2 += mid2 * order[i..=j].iter().filter(|&&k| positive[k]).count() as u128;
        i = j + 1;
    }
    let base2 = (pos * (pos + 1)) as u128;
    let u2 = rank_sum2 - base2;
    Some(u2 as f64 / (2 * pos * neg) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_auc(scores: &[f64], positive: &[bool]) -> f64 {
        let mut hits = 0.0;
        let mut pairs = 0.0;
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

    #[test]
    fn auc_example() {
        let s = [0.9, 0.8, 0.3, 0.1];
        let p = [true, false, true, false];
        assert_eq!(auc(&s, &p), Some(0.75));
        assert_eq!(brute_auc(&s, &p), 0.75);
    }

    #[test]
    fn constant_scores_give_half() {
        assert_eq!(
            auc(&[0.4; 6], &[true, false, true, false, true, false]),
            Some(0.5)
        );
        assert_eq!(auc(&[0.4; 3], &[true; 3]), None);
    }

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 1, 0];
        assert_eq!(accuracy(&y, &y), 1.0);
        assert_eq!(macro_f1(&y, &y, 3), 1.0);
    }

    #[test]
    fn absent_class_counts_zero() {
        let y = [0, 0, 1, 1];
        assert_eq!(macro_f1(&y, &y, 3), 2.0 / 3.0);
    }

    #[test]
    fn constant_predictor_on_balanced_labels() {
        let m = LinearModel::<f64>::new(2, 2, true);
        let x = FeatureMatrix::from_fn(4, 2, |r, c| (r * 2 + c) as f64);
        let r = evaluate(&m, &x, &[0, 1, 0, 1]).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.auc, Some(0.5));
    }

    #[test]
    fn auc_matches_brute_force_with_ties() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(2..=200);
            let s: Vec<f64> = (0..n)
                .map(|_| (rng.random_range(0..20) as f64) / 20.0)
                .collect();
            let mut p: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            p[0] = true;
            p[1] = false;
            assert_eq!(auc(&s, &p).unwrap(), brute_auc(&s, &p));
        }
    }
}
