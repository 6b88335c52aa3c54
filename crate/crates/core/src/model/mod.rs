//! Linear softmax classifier over concatenated real/imaginary features.

mod checkpoint;
mod design;
mod metrics;
mod toy;
mod train;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, LDCW_MAGIC,
};
pub use design::assemble_inputs;
pub use metrics::{accuracy, auc, evaluate, macro_f1, MetricsReport};
pub use toy::two_blobs;
pub use train::{train, TrainConfig, TrainReport, DEFAULT_BATCH_SIZE};

use crate::dense::FeatureMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel<T> {
    /// `d_in x classes`
    pub weights: FeatureMatrix<T>,
    pub bias: Option<Vec<T>>,
}

/// Gradient of the training objective with respect to each parameter block.
#[derive(Clone, Debug)]
pub struct Gradient<T> {
    pub weights: FeatureMatrix<T>,
    pub bias: Option<Vec<T>>,
}

impl<T: Scalar> LinearModel<T> {
    /// Zero-initialized model.
    pub fn new(d_in: usize, classes: usize, with_bias: bool) -> Self {
        Self {
            weights: FeatureMatrix::zeros(d_in, classes),
            bias: with_bias.then(|| vec![T::zero(); classes]),
        }
    }

    pub fn d_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn classes(&self) -> usize {
        self.weights.cols()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite()
            && self
                .bias
                .as_ref()
                .is_none_or(|b| b.iter().all(|v| v.is_finite()))
    }

    fn check_width(&self, x: &FeatureMatrix<T>) -> Result<()> {
        if x.cols() != self.d_in() {
            return Err(Error::Argument(format!(
                "design width {} != model input width {}",
                x.cols(),
                self.d_in()
            )));
        }
        Ok(())
    }

    pub fn logits(&self, x: &FeatureMatrix<T>) -> Result<FeatureMatrix<T>> {
        self.check_width(x)?;
        let c = self.classes();
        let mut out = FeatureMatrix::zeros(x.rows(), c);
        for r in 0..x.rows() {
            let row = out.row_mut(r);
            if let Some(b) = &self.bias {
                row.copy_from_slice(b);
            }
            for (k, &xv) in x.row(r).iter().enumerate() {
                if xv == T::zero() {
                    continue;
                }
                for (o, &w) in row.iter_mut().zip(self.weights.row(k)) {
                    *o += xv * w;
                }
            }
        }
        Ok(out)
    }

    /// Row-wise softmax of the logits.
    pub fn forward(&self, x: &FeatureMatrix<T>) -> Result<FeatureMatrix<T>> {
        let mut z = self.logits(x)?;
        softmax_rows(&mut z);
        Ok(z)
    }

    pub fn predict(&self, x: &FeatureMatrix<T>) -> Result<Vec<usize>> {
        let z = self.logits(x)?;
        Ok((0..z.rows()).map(|r| argmax(z.row(r))).collect())
    }

    /// Mean cross-entropy plus `weight_decay * ‖W‖² / 2`, and its gradient.
    /// The bias is not regularized.
    pub fn loss_and_gradient(
        &self,
        x: &FeatureMatrix<T>,
        labels: &[usize],
        weight_decay: T,
    ) -> Result<(T, Gradient<T>)> {
        let (ce, mut grad) = self.cross_entropy_and_gradient(x, labels)?;
        grad.weights.axpy(weight_decay, &self.weights);
        Ok((ce + self.l2_penalty(weight_decay), grad))
    }

    /// `weight_decay * ‖W‖² / 2`
    pub fn l2_penalty(&self, weight_decay: T) -> T {
        weight_decay * self.weights.as_slice().iter().map(|&w| w * w).sum::<T>()
            / T::from_f64_lossy(2.0)
    }

    /// Unregularized mean cross-entropy and its gradient.
    pub(crate) fn cross_entropy_and_gradient(
        &self,
        x: &FeatureMatrix<T>,
        labels: &[usize],
    ) -> Result<(T, Gradient<T>)> {
        if labels.len() != x.rows() || x.rows() == 0 {
            return Err(Error::Argument(format!(
                "{} labels for {} rows",
                labels.len(),
                x.rows()
            )));
        }
        let c = self.classes();
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::Argument(format!("label {bad} outside [0, {c})")));
        }
        let mut p = self.logits(x)?;
        let inv_b = T::one() / T::from_usize_lossy(x.rows());
        let mut loss = T::zero();
        for (r, &y) in labels.iter().enumerate() {
            let row = p.row_mut(r);
            let lse = log_sum_exp(row);
            loss += lse - row[y];
            for v in row.iter_mut() {
                *v = (*v - lse).exp();
            }
            // p - onehot(y), pre-scaled by 1/B
            row[y] -= T::one();
            row.iter_mut().for_each(|v| *v *= inv_b);
        }
        loss *= inv_b;

        let mut gw = FeatureMatrix::zeros(self.d_in(), c);
        for r in 0..x.rows() {
            let delta = p.row(r);
            for (k, &xv) in x.row(r).iter().enumerate() {
                if xv == T::zero() {
                    continue;
                }
                for (g, &d) in gw.row_mut(k).iter_mut().zip(delta) {
                    *g += xv * d;
                }
            }
        }
        let gb = self.bias.as_ref().map(|_| {
            let mut gb = vec![T::zero(); c];
            for r in 0..x.rows() {
                for (g, &d) in gb.iter_mut().zip(p.row(r)) {
                    *g += d;
                }
            }
            gb
        });
        Ok((
            loss,
            Gradient {
                weights: gw,
                bias: gb,
            },
        ))
    }
}

fn log_sum_exp<T: Scalar>(row: &[T]) -> T {
    let m = row.iter().copied().fold(T::neg_infinity(), T::max);
    m + row.iter().map(|&v| (v - m).exp()).sum::<T>().ln()
}

/// In-place softmax with max subtraction.
pub fn softmax_rows<T: Scalar>(z: &mut FeatureMatrix<T>) {
    for r in 0..z.rows() {
        let row = z.row_mut(r);
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            total += *v;
        }
        row.iter_mut().for_each(|v| *v /= total);
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_is_uniform() {
        let m = LinearModel::<f64>::new(3, 4, true);
        let x = FeatureMatrix::from_fn(5, 3, |r, c| (r + c) as f64);
        let p = m.forward(&x).unwrap();
        assert!(p.as_slice().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let mut z = FeatureMatrix::from_vec(1, 2, vec![1000.0f64, 0.0]).unwrap();
        softmax_rows(&mut z);
        assert_eq!(z.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn rows_sum_to_one_and_shift_invariant() {
        let mut m = LinearModel::<f64>::new(4, 3, true);
        m.weights = FeatureMatrix::from_fn(4, 3, |r, c| ((r * 3 + c) as f64).sin() * 5.0);
        m.bias = Some(vec![0.3, -2.0, 7.0]);
        let x = FeatureMatrix::from_fn(6, 4, |r, c| ((r * 4 + c) as f64 * 0.9).cos() * 3.0);
        let p = m.forward(&x).unwrap();
        for r in 0..6 {
            assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let mut shifted = m.clone();
        shifted.bias = Some(vec![100.3, 98.0, 107.0]);
        let q = shifted.forward(&x).unwrap();
        assert!(p.distance(&q) < 1e-12);
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let m = LinearModel::<f64>::new(3, 2, false);
        assert!(m.forward(&FeatureMatrix::zeros(2, 4)).is_err());
        assert!(m
            .loss_and_gradient(&FeatureMatrix::zeros(2, 3), &[0, 2], 0.0)
            .is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let eps = 1e-5;
        for _ in 0..50 {
            let (d, c, b) = (
                rng.random_range(1..5),
                rng.random_range(2..5),
                rng.random_range(1..8),
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
            let (_, g) = m.loss_and_gradient(&x, &y, wd).unwrap();
            let loss_at = |m: &LinearModel<f64>| m.loss_and_gradient(&x, &y, wd).unwrap().0;
            let check = |analytic: f64, numeric: f64| {
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
                assert!(rel <= 1e-5, "analytic {analytic} numeric {numeric}");
            };
            for i in 0..d * c {
                let mut hi = m.clone();
                hi.weights.as_mut_slice()[i] += eps;
                let mut lo = m.clone();
                lo.weights.as_mut_slice()[i] -= eps;
                check(
                    g.weights.as_slice()[i],
                    (loss_at(&hi) - loss_at(&lo)) / (2.0 * eps),
                );
            }
            if let Some(gb) = &g.bias {
                for i in 0..c {
                    let mut hi = m.clone();
                    hi.bias.as_mut().unwrap()[i] += eps;
                    let mut lo = m.clone();
                    lo.bias.as_mut().unwrap()[i] -= eps;
                    check(gb[i], (loss_at(&hi) - loss_at(&lo)) / (2.0 * eps));
                }
            }
        }
    }
}
