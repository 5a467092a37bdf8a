//! Hypothesis-DP guarantees: compose each matched pair of the refinement over
//! the iterations where its two vectors differ, then aggregate with the
//! matched weights.

use rayon::prelude::*;

use crate::compose::{compose, CompositionTheorem};
use crate::error::{Error, Result};
use crate::numeric::{kahan_sum, ln_exp_minus_one, ln_pow2_minus_one, log_sum_exp};
use crate::params::{BitVector, Hypothesis, HypothesisPairSet, MechanismSequence, PrivacyParams};
use crate::refine::refine_tuples;

/// 0-based iterations where `b0` and `b1` differ.
pub fn differing_indices(b0: &BitVector, b1: &BitVector) -> Result<Vec<usize>> {
    Ok(b0.xor(b1)?.ones_indices())
}

/// Guarantee for distinguishing two deterministic vectors: iterations where
/// both vectors agree run on the same database and are ignored.
pub fn pair_guarantee(
    b0: &BitVector,
    b1: &BitVector,
    seq: &MechanismSequence,
    theorem: &CompositionTheorem,
) -> Result<PrivacyParams> {
    seq.check_len(b0.len())?;
    let indices = differing_indices(b0, b1)?;
    compose(&seq.select(&indices), theorem)
}

/// Guarantee for a composite hypothesis pair `(p0, p1)`.
///
/// `δ = Σ w_i δ_i` and `ε = ln Σ w_i e^{ε_i}` over the matched pairs of the
/// refinement. Terms are sorted before summation so the result does not
/// depend on pair order.
///
/// Caveat: averaging `e^{ε_i}` is exact when one side is a point mass and
/// the other is a mixture of vectors (e.g. `zero` vs `uniform_nonzero`), but
/// it is not a valid bound for every pair of mixtures. Exact enumeration
/// finds mixture pairs over randomized response that need δ > 0 at this ε
/// (see `weighted_epsilon_can_be_unsound_for_two_mixtures` in the property
/// tests). Taking `max ε_i` over the matched pairs instead is always sound.
pub fn hdp_guarantee(
    p0: &Hypothesis,
    p1: &Hypothesis,
    seq: &MechanismSequence,
    theorem: &CompositionTheorem,
) -> Result<PrivacyParams> {
    seq.check_len(p0.len())?;
    seq.check_len(p1.len())?;
    let refinement = refine_tuples(p0, p1)?;

    let mut terms = Vec::with_capacity(refinement.len());
    for (t0, t1) in refinement.pairs() {
        let g = pair_guarantee(&t0.vector, &t1.vector, seq, theorem)?;
        terms.push((t0.weight, g));
    }
    terms.sort_by(|a, b| {
        (a.1.epsilon(), a.1.delta(), a.0)
            .partial_cmp(&(b.1.epsilon(), b.1.delta(), b.0))
            .expect("finite terms")
    });

    let delta = kahan_sum(terms.iter().map(|(w, g)| w * g.delta()));
    let log_terms: Vec<f64> = terms.iter().map(|(w, g)| w.ln() + g.epsilon()).collect();
    Ok(PrivacyParams::clamped(log_sum_exp(&log_terms), delta))
}

/// Componentwise maximum of [`hdp_guarantee`] over every pair in the set.
pub fn hdp_guarantee_over_set(
    pairs: &HypothesisPairSet,
    seq: &MechanismSequence,
    theorem: &CompositionTheorem,
) -> Result<PrivacyParams> {
    if pairs.is_empty() {
        return Err(Error::EmptySet);
    }
    let per_pair: Vec<PrivacyParams> = pairs
        .pairs()
        .par_iter()
        .map(|(p0, p1)| hdp_guarantee(p0, p1, seq, theorem))
        .collect::<Result<_>>()?;
    let (eps, delta) = per_pair
        .iter()
        .fold((0.0f64, 0.0f64), |(e, d), g| (e.max(g.epsilon()), d.max(g.delta())));
    Ok(PrivacyParams::clamped(eps, delta))
}

/// Closed form for the point mass on the zero vector against the uniform
/// distribution over nonzero vectors, with k identical `(ε, δ)` mechanisms
/// under simple composition:
/// `(ln[((1 + e^ε)^k − 1)/(2^k − 1)], k 2^{k−1}/(2^k − 1) δ)`.
pub fn uniform_nonzero_closed_form(eps: f64, delta: f64, k: usize) -> Result<PrivacyParams> {
    PrivacyParams::new(eps, delta)?;
    if k == 0 {
        return Err(Error::InvalidLength(0));
    }
    let kf = k as f64;
    // k ln(1 + e^ε), evaluated as a softplus
    let a = kf * (eps + (-eps).exp().ln_1p());
    let epsilon = ln_exp_minus_one(a) - ln_pow2_minus_one(k);
    // k 2^{k−1}/(2^k − 1) = k / (2 (1 − 2^{−k}))
    let coeff = 0.5 * kf / -(-kf * std::f64::consts::LN_2).exp_m1();
    Ok(PrivacyParams::clamped(epsilon, coeff * delta))
}
