//! Deterministic workloads shared by the benchmarks.

use stable_predict::rng::seeded;
use stable_predict::{HypothesisClass, LabeledSample, Point};
use rand::Rng;

/// `n` uniform points labeled by the threshold at `t`, each label flipped
/// with probability `noise`.
pub fn threshold_sample(domain_size: usize, n: usize, t: usize, noise: f64, seed: u64) -> LabeledSample {
    let mut rng = seeded(seed);
    let pairs = (0..n)
        .map(|_| {
            let x = rng.random_range(0..domain_size);
            let y = (x < t) ^ rng.random_bool(noise);
            (Point(x), y)
        })
        .collect();
    LabeledSample::new(domain_size, pairs).expect("points lie in the domain")
}

pub fn thresholds(domain_size: usize) -> HypothesisClass {
    HypothesisClass::thresholds(domain_size).expect("valid domain")
}
