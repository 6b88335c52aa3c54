use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::FeatureMatrix;
use crate::scalar::Scalar;

/// Two unit-variance Gaussian blobs centred at `±separation/2` along the
/// first axis. Rows alternate between class 0 and class 1.
pub fn two_blobs<T: Scalar>(
    n: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> (FeatureMatrix<T>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let x = FeatureMatrix::from_fn(n, dim, |r, c| {
        let noise: f64 = StandardNormal.sample(&mut rng);
        let centre = if c == 0 {
            (labels[r] as f64 - 0.5) * separation
        } else {
            0.0
        };
        T::from_f64_lossy(centre + noise)
    });
    (x, labels)
}
