#![allow(dead_code)]

use gce_core::{BitVector, Hypothesis, PrivacyParams};
use rand::seq::index::sample;
use rand::Rng;

/// Random hypothesis over `{0,1}^k` with `support` distinct atoms and
/// flat-Dirichlet weights.
pub fn random_hypothesis<R: Rng>(rng: &mut R, k: usize, support: usize) -> Hypothesis {
    let space = 1usize << k;
    let support = support.clamp(1, space);
    let words = sample(rng, space, support);
    let gammas: Vec<f64> = (0..support).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = gammas.iter().sum();
    Hypothesis::new(
        words
            .iter()
            .zip(&gammas)
            .map(|(w, g)| (BitVector::from_word(w as u64, k).unwrap(), g / total)),
    )
    .unwrap()
}

pub fn random_params<R: Rng>(rng: &mut R) -> PrivacyParams {
    let eps = 2.0 * (1.0 - rng.random::<f64>());
    let delta = 1e-4 * rng.random::<f64>();
    PrivacyParams::new(eps, delta).unwrap()
}

/// `ln[(1/(2^k − 1)) Σ_j C(k, j) e^{jε}]` and `(1/(2^k − 1)) Σ_j C(k, j) j δ`,
/// summed term by term over the number of ones j.
pub fn binomial_sum_oracle(eps: f64, delta: f64, k: usize) -> (f64, f64) {
    let norm = ((1u64 << k) - 1) as f64;
    let mut binom = 1.0f64;
    let (mut es, mut ds) = (0.0f64, 0.0f64);
    for j in 1..=k {
        binom = binom * (k - j + 1) as f64 / j as f64;
        es += binom * (j as f64 * eps).exp();
        ds += binom * j as f64 * delta;
    }
    ((es / norm).ln(), ds / norm)
}
