use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::accuracy;
use super::LinearModel;
use crate::dense::FeatureMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_BATCH_SIZE: usize = 5000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
    /// Early-stopping patience in epochs, measured on validation accuracy.
    /// Only used when a validation set is passed to [`train`].
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: DEFAULT_BATCH_SIZE,
            epochs: 200,
            weight_decay: 0.0,
            seed: 0,
            patience: Some(50),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch size must be at least 1".into()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Argument(format!(
                "weight decay {} must be >= 0",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Size-weighted mean of the batch objectives, one entry per epoch run.
    pub per_epoch_loss: Vec<f64>,
    pub epochs_run: usize,
    /// Epoch whose weights were kept (validation-accuracy argmax), if early
    /// stopping was active.
    pub best_epoch: Option<usize>,
}

/// Mini-batch gradient descent on the regularized cross-entropy.
///
/// Batches come from a seeded shuffle per epoch. The L2 term is applied as a
/// proximal (implicit) step, `W ← (W - lr·∇CE) / (1 + lr·λ)`, which is stable
/// for any decay strength. With a validation set the weights with the best
/// validation accuracy are restored at the end.
pub fn train<T: Scalar>(
    model: &mut LinearModel<T>,
    design: &FeatureMatrix<T>,
    labels: &[usize],
    cfg: &TrainConfig,
    validation: Option<(&FeatureMatrix<T>, &[usize])>,
) -> Result<TrainReport> {
    cfg.validate()?;
    if labels.len() != design.rows() {
        return Err(Error::Argument(format!(
            "{} labels for {} rows",
            labels.len(),
            design.rows()
        )));
    }
    if design.cols() != model.d_in() {
        return Err(Error::Argument(format!(
            "design width {} != model width {}",
            design.cols(),
            model.d_in()
        )));
    }
    let mut report = TrainReport::default();
    if cfg.epochs == 0 || design.rows() == 0 {
        return Ok(report);
    }

    let lr = T::from_f64_lossy(cfg.learning_rate);
    let decay = T::from_f64_lossy(cfg.weight_decay);
    let shrink = T::one() / (T::one() + lr * decay);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..design.rows()).collect();

    let mut best: Option<(f64, usize, LinearModel<T>)> = None;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let x = design.select_rows(batch);
            let y: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (ce, grad) = model.cross_entropy_and_gradient(&x, &y)?;
            let loss = ce + model.l2_penalty(decay);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            epoch_loss += loss.to_f64_lossy() * batch.len() as f64;

            for (w, &g) in model
                .weights
                .as_mut_slice()
                .iter_mut()
                .zip(grad.weights.as_slice())
            {
                *w = (*w - lr * g) * shrink;
            }
            if let (Some(b), Some(gb)) = (model.bias.as_mut(), grad.bias.as_ref()) {
                for (bv, &g) in b.iter_mut().zip(gb) {
                    *bv -= lr * g;
                }
            }
            if !model.is_finite() {
                return Err(Error::Diverged { epoch });
            }
        }
        report
            .per_epoch_loss
            .push(epoch_loss / design.rows() as f64);
        report.epochs_run = epoch + 1;

        if let Some((vx, vy)) = validation {
            let acc = accuracy(&model.predict(vx)?, vy);
            match &best {
                Some((best_acc, _, _)) if acc <= *best_acc => {}
                _ => best = Some((acc, epoch, model.clone())),
            }
            if let (Some(patience), Some((_, best_epoch, _))) = (cfg.patience, &best) {
                if epoch - best_epoch >= patience {
                    break;
                }
            }
        }
    }
    if let Some((_, epoch, kept)) = best {
        *model = kept;
        report.best_epoch = Some(epoch);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::two_blobs;

    #[test]
    fn zero_epochs_leave_model_untouched() {
        let (x, y) = two_blobs::<f64>(20, 2, 4.0, 0);
        let mut m = LinearModel::new(2, 2, true);
        m.weights.set(0, 0, 0.5);
        let before = m.clone();
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let report = train(&mut m, &x, &y, &cfg, None).unwrap();
        assert_eq!(m, before);
        assert!(report.per_epoch_loss.is_empty());
    }

    #[test]
    fn separable_blobs_reach_full_training_accuracy() {
        let (x, y) = two_blobs::<f64>(100, 2, 8.0, 1);
        // Brute-force linear probe: some threshold on the first axis separates the classes.
        let separable = (0..100).any(|i| {
            let t = x.get(i, 0);
            (0..100).all(|r| (x.get(r, 0) > t) == (y[r] == 1))
                || (0..100).all(|r| (x.get(r, 0) >= t) == (y[r] == 1))
        });
        assert!(separable);
        let mut m = LinearModel::new(2, 2, true);
        let cfg = TrainConfig {
            learning_rate: 0.1,
            epochs: 200,
            batch_size: 32,
            ..Default::default()
        };
        train(&mut m, &x, &y, &cfg, None).unwrap();
        assert!(accuracy(&m.predict(&x).unwrap(), &y) >= 0.99);
    }

    #[test]
    fn huge_weight_decay_pins_weights_near_zero() {
        let (x, y) = two_blobs::<f64>(100, 4, 6.0, 2);
        let mut m = LinearModel::new(4, 2, true);
        let cfg = TrainConfig {
            learning_rate: 0.1,
            weight_decay: 1e6,
            epochs: 50,
            ..Default::default()
        };
        let report = train(&mut m, &x, &y, &cfg, None).unwrap();
        assert!(m.weights.frobenius_norm() <= 1e-2);
        assert!(report.per_epoch_loss.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn same_seed_same_weights() {
        let (x, y) = two_blobs::<f64>(90, 3, 2.0, 3);
        let cfg = TrainConfig {
            learning_rate: 0.05,
            batch_size: 16,
            epochs: 20,
            seed: 9,
            ..Default::default()
        };
        let run = |cfg: &TrainConfig| {
            let mut m = LinearModel::new(3, 2, true);
            train(&mut m, &x, &y, cfg, None).unwrap();
            m
        };
        let a = run(&cfg);
        assert_eq!(a, run(&cfg));
        assert_ne!(
            a,
            run(&TrainConfig {
                seed: 10,
                ..cfg.clone()
            })
        );
    }

    #[test]
    fn full_batch_loss_is_non_increasing() {
        for seed in 0..5 {
            let (x, y) = two_blobs::<f64>(60, 3, 1.5, seed);
            let mut m = LinearModel::new(3, 2, true);
            let cfg = TrainConfig {
                learning_rate: 0.01,
                batch_size: 60,
                epochs: 100,
                weight_decay: 0.1,
                ..Default::default()
            };
            let r = train(&mut m, &x, &y, &cfg, None).unwrap();
            assert!(r.per_epoch_loss.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }

    #[test]
    fn early_stopping_restores_best_weights() {
        let (x, y) = two_blobs::<f64>(80, 2, 6.0, 5);
        let (vx, vy) = two_blobs::<f64>(40, 2, 6.0, 6);
        let mut m = LinearModel::new(2, 2, true);
        let cfg = TrainConfig {
            learning_rate: 0.1,
            batch_size: 8,
            epochs: 500,
            patience: Some(5),
            ..Default::default()
        };
        let r = train(&mut m, &x, &y, &cfg, Some((&vx, &vy))).unwrap();
        let best = r.best_epoch.unwrap();
        assert!(r.epochs_run <= best + 6);
        assert!(r.epochs_run < 500);
    }

    #[test]
    fn rejects_bad_config() {
        let (x, y) = two_blobs::<f64>(10, 2, 1.0, 0);
        let mut m = LinearModel::new(2, 2, true);
        for cfg in [
            TrainConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            TrainConfig {
                batch_size: 0,
                ..Default::default()
            },
            TrainConfig {
                weight_decay: -1.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                train(&mut m, &x, &y, &cfg, None),
                Err(Error::Argument(_))
            ));
        }
        assert!(train(&mut m, &x, &y[..5], &TrainConfig::default(), None).is_err());
    }
}
