//! Amplification by subsampling, and guarantees against an adversary with a
//! uniform prior over nonzero membership vectors.
//!
//! Choosing each `b_i` uniformly is the same as running each mechanism on a
//! rate-1/2 Poisson subsample of a one-record database, so the pipelines
//! below fix the rate at 1/2. Only add/remove-one neighborhoods apply.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::compose::{compose, simple_compose, CompositionTheorem};
use crate::error::{Error, Result};
use crate::numeric::{kahan_sum, ln_pow2_minus_one, log_sum_exp};
use crate::params::{MechanismSequence, PrivacyParams};

/// Poisson subsampling rate.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SubsampleRate(f64);

impl SubsampleRate {
    pub const HALF: SubsampleRate = SubsampleRate(0.5);

    pub fn new(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(Self(p))
        } else {
            Err(Error::InvalidRate(format!("subsampling rate must lie in [0, 1] (got {p})")))
        }
    }

    pub fn get(&self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SubsampleRate {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<SubsampleRate> for f64 {
    fn from(r: SubsampleRate) -> f64 {
        r.0
    }
}

/// `(ln(1 + p(e^ε − 1)), p δ)`.
pub fn amplify(g: PrivacyParams, p: SubsampleRate) -> PrivacyParams {
    let p = p.get();
    PrivacyParams::clamped((p * g.epsilon().exp_m1()).ln_1p(), p * g.delta())
}

/// Log weights `ln(2^{k−i}/(2^k − 1))` for i = 1..=k.
fn log_weights(k: usize) -> Vec<f64> {
    let norm = ln_pow2_minus_one(k);
    (1..=k).map(|i| (k - i) as f64 * LN_2 - norm).collect()
}

/// `ε = ln Σ w_i e^{ε̂_i}`, `δ = Σ w_i δ̂_i` with `w_i = 2^{k−i}/(2^k − 1)`.
fn aggregate(terms: &[PrivacyParams]) -> PrivacyParams {
    let weights = log_weights(terms.len());
    let eps_terms: Vec<f64> = weights.iter().zip(terms).map(|(w, t)| w + t.epsilon()).collect();
    let delta = kahan_sum(weights.iter().zip(terms).map(|(w, t)| w.exp() * t.delta()));
    PrivacyParams::clamped(log_sum_exp(&eps_terms), delta)
}

fn amplified_tail(seq: &MechanismSequence, i: usize) -> Vec<PrivacyParams> {
    seq.guarantees()[i + 1..]
        .iter()
        .map(|g| amplify(*g, SubsampleRate::HALF))
        .collect()
}

/// Guarantee against the uniform-nonzero adversary, with
/// `(ε̂_i, δ̂_i) = CompGuarantee(M_i, S½(M_{i+1}), …, S½(M_k))`.
pub fn theorem2_bound(seq: &MechanismSequence, theorem: &CompositionTheorem) -> Result<PrivacyParams> {
    let terms = (0..seq.len())
        .map(|i| {
            let mut mixed = Vec::with_capacity(seq.len() - i);
            mixed.push(seq.guarantees()[i]);
            mixed.extend(amplified_tail(seq, i));
            compose(&mixed, theorem)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&terms))
}

/// Variant that composes only the subsampled tail with the chosen theorem and
/// joins the head mechanism by simple composition.
pub fn corollary2_bound(seq: &MechanismSequence, theorem: &CompositionTheorem) -> Result<PrivacyParams> {
    let terms = (0..seq.len())
        .map(|i| {
            let tail = compose(&amplified_tail(seq, i), theorem)?;
            Ok(simple_compose(&[seq.guarantees()[i], tail]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&terms))
}

/// Closed form for k identical `(ε, δ)` mechanisms with simple composition
/// throughout: `(ln[((e^ε + 1)^k − 1)/(2^k − 1)], 2^{k−1}/(2^k − 1) · k δ)`.
pub fn corollary3_closed_form(eps: f64, delta: f64, k: usize) -> Result<PrivacyParams> {
    PrivacyParams::new(eps, delta)?;
    if k == 0 {
        return Err(Error::InvalidLength(0));
    }
    let kf = k as f64;
    let log_base = (eps.exp() + 1.0).ln();
    let numerator = if kf * log_base < 700.0 {
        ((eps.exp() + 1.0).powf(kf) - 1.0).ln()
    } else {
        let a = kf * log_base;
        a + (-(-a).exp()).ln_1p()
    };
    let epsilon = numerator - ln_pow2_minus_one(k);
    let delta_coeff = if k <= 50 {
        (1u64 << (k - 1)) as f64 / ((1u64 << k) - 1) as f64
    } else {
        ((kf - 1.0) * LN_2 - ln_pow2_minus_one(k)).exp()
    };
    Ok(PrivacyParams::clamped(epsilon, delta_coeff * kf * delta))
}
