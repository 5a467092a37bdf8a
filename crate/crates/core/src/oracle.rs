//! Exact verification of hypothesis-DP inequalities for finite-alphabet
//! mechanisms, and Monte-Carlo runs of the composition experiment.
//!
//! Only nonadaptive adversaries with fixed mechanisms are modelled, so a
//! view is the tuple of mechanism outputs and its distribution is a product
//! measure. The worst output set for a given ε is `{v : P0(v) > e^ε P1(v)}`,
//! which turns the check over all sets into a single hockey-stick sum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::kahan_sum;
use crate::params::{BitVector, Hypothesis, PrivacyParams};

/// Largest view space that will be enumerated.
pub const VIEW_SPACE_LIMIT: u128 = 10_000_000;

/// Absolute slack on δ comparisons.
pub const SOUNDNESS_SLACK: f64 = 1e-12;

const MECHANISM_TOLERANCE: f64 = 1e-12;

/// A mechanism with a finite output alphabet, given by its output
/// distribution without the target record (`absent`) and with it (`present`).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMechanism {
    absent: Vec<f64>,
    present: Vec<f64>,
}

impl DiscreteMechanism {
    pub fn new(absent: Vec<f64>, present: Vec<f64>) -> Result<Self> {
        if absent.is_empty() || absent.len() != present.len() {
            return Err(Error::InvalidMechanism(format!(
                "alphabets differ or are empty ({} vs {} symbols)",
                absent.len(),
                present.len()
            )));
        }
        for (name, dist) in [("absent", &absent), ("present", &present)] {
            if dist.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(Error::InvalidMechanism(format!("{name} distribution has an entry outside [0, 1]")));
            }
            let total = kahan_sum(dist.iter().copied());
            if (total - 1.0).abs() > MECHANISM_TOLERANCE {
                return Err(Error::InvalidMechanism(format!("{name} distribution sums to {total}")));
            }
        }
        Ok(Self { absent, present })
    }

    pub fn alphabet_size(&self) -> usize {
        self.absent.len()
    }

    /// Output distribution when the iteration's bit is `bit`.
    pub fn dist(&self, bit: bool) -> &[f64] {
        if bit {
            &self.present
        } else {
            &self.absent
        }
    }

    /// Smallest ε for which the mechanism is ε-DP: the largest absolute log
    /// likelihood ratio over the alphabet.
    pub fn pure_epsilon(&self) -> f64 {
        self.absent
            .iter()
            .zip(&self.present)
            .map(|(&a, &p)| match (a > 0.0, p > 0.0) {
                (true, true) => (a.ln() - p.ln()).abs(),
                (false, false) => 0.0,
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }
}

/// Binary randomized response: reports the true membership bit with
/// probability `1 − q`. Symbol 1 means "present".
pub fn randomized_response(q: f64) -> Result<DiscreteMechanism> {
    if !(q > 0.0 && q < 0.5) {
        return Err(Error::InvalidRate(format!("randomized response needs 0 < q < 0.5 (got {q})")));
    }
    DiscreteMechanism::new(vec![1.0 - q, q], vec![q, 1.0 - q])
}

/// The pure-DP guarantee of randomized response with flip probability `q`.
pub fn randomized_response_guarantee(q: f64) -> Result<PrivacyParams> {
    randomized_response(q)?;
    PrivacyParams::pure(((1.0 - q) / q).ln())
}

/// Exact distribution over view tuples, stored densely in mixed radix with
/// iteration 1 as the most significant digit.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewDistribution {
    radices: Vec<usize>,
    probs: Vec<f64>,
}

impl ViewDistribution {
    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        kahan_sum(self.probs.iter().copied())
    }

    pub fn index_of(&self, view: &[usize]) -> Option<usize> {
        if view.len() != self.radices.len() {
            return None;
        }
        let mut idx = 0;
        for (&v, &r) in view.iter().zip(&self.radices) {
            if v >= r {
                return None;
            }
            idx = idx * r + v;
        }
        Some(idx)
    }

    pub fn view_of(&self, mut index: usize) -> Vec<usize> {
        let mut view = vec![0; self.radices.len()];
        for (slot, &r) in view.iter_mut().zip(&self.radices).rev() {
            *slot = index % r;
            index /= r;
        }
        view
    }

    pub fn prob(&self, view: &[usize]) -> f64 {
        self.index_of(view).map_or(0.0, |i| self.probs[i])
    }
}

fn view_space(mechs: &[DiscreteMechanism]) -> Result<Vec<usize>> {
    let radices: Vec<usize> = mechs.iter().map(DiscreteMechanism::alphabet_size).collect();
    let mut size: u128 = 1;
    for &r in &radices {
        size = size.saturating_mul(r as u128);
    }
    if size > VIEW_SPACE_LIMIT {
        return Err(Error::ViewSpaceTooLarge(size));
    }
    Ok(radices)
}

fn check_len(mechs: &[DiscreteMechanism], k: usize) -> Result<()> {
    if mechs.len() != k {
        return Err(Error::MixedLength {
            expected: mechs.len(),
            found: k,
        });
    }
    Ok(())
}

/// Product distribution of the views when iteration i runs on database `b_i`.
pub fn view_distribution(mechs: &[DiscreteMechanism], b: &BitVector) -> Result<ViewDistribution> {
    check_len(mechs, b.len())?;
    let radices = view_space(mechs)?;
    let mut probs = vec![1.0];
    for (i, m) in mechs.iter().enumerate() {
        let dist = m.dist(b.get(i));
        probs = probs
            .iter()
            .flat_map(|&p| dist.iter().map(move |&q| p * q))
            .collect();
    }
    Ok(ViewDistribution { radices, probs })
}

/// `Σ_b h(b) · view_distribution(mechs, b)`.
pub fn mixture_view_distribution(mechs: &[DiscreteMechanism], h: &Hypothesis) -> Result<ViewDistribution> {
    check_len(mechs, h.len())?;
    let radices = view_space(mechs)?;
    let size: usize = radices.iter().product();
    let mut probs = vec![0.0; size];
    for (b, w) in h.atoms() {
        let component = view_distribution(mechs, &b)?;
        for (acc, p) in probs.iter_mut().zip(component.probs) {
            *acc += w * p;
        }
    }
    Ok(ViewDistribution { radices, probs })
}

/// Hockey-stick divergence `Σ_v max(0, P0(v) − e^ε P1(v))`: the smallest δ
/// with `P0(S) ≤ e^ε P1(S) + δ` for every view set S.
pub fn required_delta(p0: &ViewDistribution, p1: &ViewDistribution, eps: f64) -> Result<f64> {
    if p0.radices != p1.radices {
        return Err(Error::MismatchedSupport);
    }
    let scale = eps.exp();
    Ok(kahan_sum(p0.probs.iter().zip(&p1.probs).map(|(&a, &b)| {
        if b == 0.0 {
            a
        } else {
            (a - scale * b).max(0.0)
        }
    })))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyReport {
    /// δ needed for `E_{p0}[Pr(V ∈ S)] ≤ e^ε E_{p1}[Pr(V ∈ S)] + δ`.
    pub delta_needed_fwd: f64,
    /// δ needed with the hypotheses exchanged.
    pub delta_needed_rev: f64,
    pub sound: bool,
}

/// Checks both directed HDP inequalities for `claimed` by exact enumeration.
pub fn verify_hdp(
    mechs: &[DiscreteMechanism],
    p0: &Hypothesis,
    p1: &Hypothesis,
    claimed: &PrivacyParams,
) -> Result<VerifyReport> {
    let v0 = mixture_view_distribution(mechs, p0)?;
    let v1 = mixture_view_distribution(mechs, p1)?;
    let fwd = required_delta(&v0, &v1, claimed.epsilon())?;
    let rev = required_delta(&v1, &v0, claimed.epsilon())?;
    Ok(VerifyReport {
        delta_needed_fwd: fwd,
        delta_needed_rev: rev,
        sound: fwd.max(rev) <= claimed.delta() + SOUNDNESS_SLACK,
    })
}

/// Empirical view counts from repeated runs of the experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewCounts {
    radices: Vec<usize>,
    counts: Vec<u64>,
    trials: u64,
}

impl ViewCounts {
    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    /// Empirical frequency of each view, in the same order as
    /// [`ViewDistribution::probs`].
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.trials as f64).collect()
    }
}

const TRIALS_PER_TASK: u64 = 1 << 14;

/// Samples `trials` views with `b` fixed. Trial `t` draws from ChaCha8 stream
/// `t` of the generator seeded by `seed`, so counts are identical across
/// runs and thread counts.
pub fn simulate_experiment(
    mechs: &[DiscreteMechanism],
    b: &BitVector,
    trials: u64,
    seed: u64,
) -> Result<ViewCounts> {
    if trials == 0 {
        return Err(Error::InvalidTrials);
    }
    check_len(mechs, b.len())?;
    let radices = view_space(mechs)?;
    let size: usize = radices.iter().product();
    let cumulative: Vec<Vec<f64>> = mechs
        .iter()
        .enumerate()
        .map(|(i, m)| {
            m.dist(b.get(i))
                .iter()
                .scan(0.0, |acc, &p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let base = ChaCha8Rng::seed_from_u64(seed);
    let tasks = trials.div_ceil(TRIALS_PER_TASK);

    let counts = (0..tasks)
        .into_par_iter()
        .map(|task| {
            let mut local = vec![0u64; size];
            let start = task * TRIALS_PER_TASK;
            let end = (start + TRIALS_PER_TASK).min(trials);
            for t in start..end {
                let mut rng = base.clone();
                rng.set_stream(t);
                let mut idx = 0;
                for (cdf, &r) in cumulative.iter().zip(&radices) {
                    let u: f64 = rng.random();
                    let symbol = cdf.iter().position(|&c| u < c).unwrap_or(r - 1);
                    idx = idx * r + symbol;
                }
                local[idx] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; size],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(ViewCounts {
        radices,
        counts,
        trials,
    })
}
