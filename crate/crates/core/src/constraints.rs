//! Bounds under publicly known membership constraints, and the
//! parallel-composition baseline they are compared against.

use std::collections::BTreeSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::compose::{compose, CompositionTheorem};
use crate::error::{Error, Result};
use crate::numeric::kahan_sum;
use crate::params::{BitVector, MechanismSequence, PrivacyParams, MAX_K};

/// Largest number of index subsets searched exhaustively.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

/// Largest number of vectors [`allowed_vectors`] will materialize.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// Which bit vectors are possible for the target record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MembershipConstraint {
    /// The record is in at most `m` databases.
    MaxOnes(usize),
    /// Equivalent to `MaxOnes(1)`.
    AtMostOne,
    /// Only the listed membership patterns are possible.
    PatternSet(BTreeSet<BitVector>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NeighborhoodMode {
    /// Add or remove one record.
    #[default]
    Unbounded,
    /// Replace one record.
    Bounded,
}

impl NeighborhoodMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Unbounded => "unbounded",
            Self::Bounded => "bounded",
        }
    }
}

impl MembershipConstraint {
    pub fn patterns<I: IntoIterator<Item = BitVector>>(patterns: I) -> Result<Self> {
        let set: BTreeSet<BitVector> = patterns.into_iter().collect();
        let Some(first) = set.first() else {
            return Err(Error::InvalidConstraint("pattern set is empty".into()));
        };
        let k = first.len();
        if let Some(b) = set.iter().find(|b| b.len() != k) {
            return Err(Error::MixedLength {
                expected: k,
                found: b.len(),
            });
        }
        Ok(Self::PatternSet(set))
    }

    /// Checks the constraint against a sequence length `k`.
    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            Self::MaxOnes(m) if *m == 0 || *m > k => Err(Error::InvalidConstraint(format!(
                "max_ones requires 1 ≤ m ≤ k (got m={m}, k={k})"
            ))),
            Self::PatternSet(set) => match set.first() {
                None => Err(Error::InvalidConstraint("pattern set is empty".into())),
                Some(_) => match set.iter().find(|b| b.len() != k) {
                    Some(b) => Err(Error::MixedLength {
                        expected: k,
                        found: b.len(),
                    }),
                    None => Ok(()),
                },
            },
            _ => Ok(()),
        }
    }

    /// The `m` of a max-ones style constraint; for a pattern set, the largest
    /// number of ones in any pattern.
    pub fn max_ones(&self) -> usize {
        match self {
            Self::MaxOnes(m) => *m,
            Self::AtMostOne => 1,
            Self::PatternSet(set) => set.iter().map(BitVector::count_ones).max().unwrap_or(0),
        }
    }
}

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc == u128::MAX {
            return acc;
        }
    }
    acc
}

/// Every `k`-bit vector the constraint allows, in lexicographic order.
pub fn allowed_vectors(c: &MembershipConstraint, k: usize) -> Result<Vec<BitVector>> {
    if k == 0 || k > MAX_K {
        return Err(Error::KTooLarge(format!("enumeration needs 1 ≤ k ≤ {MAX_K} (got {k})")));
    }
    c.validate(k)?;
    let m = match c {
        MembershipConstraint::PatternSet(set) => return Ok(set.iter().copied().collect()),
        MembershipConstraint::AtMostOne => 1,
        MembershipConstraint::MaxOnes(m) => *m,
    };
    let count: u128 = (0..=m).map(|j| binomial(k, j)).sum();
    if count > ENUMERATION_LIMIT {
        return Err(Error::KTooLarge(format!(
            "{count} allowed vectors exceed the enumeration limit"
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    out.push(BitVector::zeros(k)?);
    for ones in 1..=m {
        // Gosper's hack: successive words with the same popcount, increasing.
        let limit = 1u64 << k;
        let mut w: u64 = (1u64 << ones) - 1;
        while w < limit {
            out.push(BitVector::from_word(w, k)?);
            let c = w & w.wrapping_neg();
            let r = w + c;
            w = (((r ^ w) >> 2) / c) | r;
        }
    }
    out.sort();
    Ok(out)
}

/// A constrained guarantee together with how it was found.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedBound {
    pub guarantee: PrivacyParams,
    /// 0-based differing indices of the worst case, when a single index set
    /// attains the bound.
    pub worst_indices: Option<Vec<usize>>,
    /// Set when the subset search was too large and the top-m shortcut was
    /// used; the ε component stays exact, δ is an upper bound.
    pub heuristic: bool,
}

/// Keeps the ε-largest candidate; δ is maximized among ε ties.
#[derive(Default)]
struct WorstCase {
    best: Option<(PrivacyParams, Vec<usize>)>,
}

impl WorstCase {
    fn offer(&mut self, g: PrivacyParams, indices: &[usize]) {
        let better = match &self.best {
            None => true,
            Some((b, _)) => {
                g.epsilon() > b.epsilon() || (g.epsilon() == b.epsilon() && g.delta() > b.delta())
            }
        };
        if better {
            self.best = Some((g, indices.to_vec()));
        }
    }

    fn finish(self) -> ConstrainedBound {
        match self.best {
            Some((guarantee, idx)) => ConstrainedBound {
                guarantee,
                worst_indices: Some(idx),
                heuristic: false,
            },
            None => ConstrainedBound {
                guarantee: PrivacyParams::ZERO,
                worst_indices: Some(Vec::new()),
                heuristic: false,
            },
        }
    }
}

/// Worst-case composition over every index subset of size `size`.
fn worst_subset(
    seq: &MechanismSequence,
    size: usize,
    theorem: &CompositionTheorem,
) -> Result<ConstrainedBound> {
    let k = seq.len();
    let size = size.min(k);
    if binomial(k, size) <= EXHAUSTIVE_LIMIT {
        let mut worst = WorstCase::default();
        for subset in (0..k).combinations(size) {
            let g = compose(&seq.select(&subset), theorem)?;
            worst.offer(g, &subset);
        }
        return Ok(worst.finish());
    }
    match theorem {
        CompositionTheorem::Simple => {
            let g = seq.guarantees();
            let mut by_eps: Vec<usize> = (0..k).collect();
            by_eps.sort_by(|&a, &b| g[b].epsilon().total_cmp(&g[a].epsilon()).then(a.cmp(&b)));
            let mut by_delta: Vec<f64> = g.iter().map(|p| p.delta()).collect();
            by_delta.sort_by(|a, b| b.total_cmp(a));
            let top: Vec<usize> = by_eps[..size].iter().copied().sorted().collect();
            let eps: f64 = top.iter().map(|&i| g[i].epsilon()).sum();
            let delta = kahan_sum(by_delta[..size].iter().copied());
            let exact = delta == kahan_sum(top.iter().map(|&i| g[i].delta()));
            Ok(ConstrainedBound {
                guarantee: PrivacyParams::clamped(eps, delta),
                worst_indices: exact.then_some(top),
                heuristic: true,
            })
        }
        _ => {
            if !theorem.is_compatible(seq.guarantees()) {
                return Err(Error::IncompatibleTheorem {
                    theorem: theorem.name(),
                    reason: "index subsets of the sequence are not homogeneous",
                });
            }
            // Homogeneous: every subset of this size composes identically.
            let subset: Vec<usize> = (0..size).collect();
            Ok(ConstrainedBound {
                guarantee: compose(&seq.select(&subset), theorem)?,
                worst_indices: Some(subset),
                heuristic: false,
            })
        }
    }
}

/// Worst case over pattern pairs, composing over each pair's symmetric difference.
fn worst_pattern_pair(
    seq: &MechanismSequence,
    patterns: &BTreeSet<BitVector>,
    mode: NeighborhoodMode,
    theorem: &CompositionTheorem,
) -> Result<ConstrainedBound> {
    let mut worst = WorstCase::default();
    let mut check = |a: &BitVector, b: &BitVector| -> Result<()> {
        let indices = a.xor(b)?.ones_indices();
        worst.offer(compose(&seq.select(&indices), theorem)?, &indices);
        Ok(())
    };
    match mode {
        NeighborhoodMode::Unbounded => {
            let zero = BitVector::zeros(seq.len())?;
            if !patterns.contains(&zero) {
                return Err(Error::InvalidConstraint(
                    "unbounded mode needs the all-zero pattern (record absent everywhere)".into(),
                ));
            }
            for b in patterns.iter().filter(|b| !b.is_zero()) {
                check(&zero, b)?;
            }
        }
        NeighborhoodMode::Bounded => {
            for (a, b) in patterns.iter().tuple_combinations() {
                check(a, b)?;
            }
        }
    }
    Ok(worst.finish())
}

/// Guarantee against adversaries whose hypotheses respect the constraint.
///
/// For a max-ones constraint the worst pair differs in `m` positions
/// (unbounded) or `min(2m, k)` positions (bounded); the bound is the largest
/// composition over any index subset of that size.
pub fn constrained_bound(
    seq: &MechanismSequence,
    c: &MembershipConstraint,
    mode: NeighborhoodMode,
    theorem: &CompositionTheorem,
) -> Result<ConstrainedBound> {
    theorem.validate()?;
    let k = seq.len();
    c.validate(k)?;
    match c {
        MembershipConstraint::PatternSet(patterns) => {
            worst_pattern_pair(seq, patterns, mode, theorem)
        }
        _ => {
            let m = c.max_ones();
            let size = match mode {
                NeighborhoodMode::Unbounded => m,
                NeighborhoodMode::Bounded => (2 * m).min(k),
            };
            worst_subset(seq, size, theorem)
        }
    }
}

/// The three membership patterns of a feature split: shared features
/// `1..=k1`, one group `k1+1..=k2`, the other group `k2+1..=k3`, and the
/// record-absent pattern.
pub fn feature_split_patterns(k1: usize, k2: usize, k3: usize) -> Result<[BitVector; 3]> {
    if !(k1 < k2 && k2 < k3) || k3 > MAX_K {
        return Err(Error::InvalidBoundaries {
            k1,
            k2,
            k3,
            k: k3,
        });
    }
    let first: Vec<usize> = (0..k2).collect();
    let second: Vec<usize> = (0..k1).chain(k2..k3).collect();
    Ok([
        BitVector::from_indices(&first, k3)?,
        BitVector::from_indices(&second, k3)?,
        BitVector::zeros(k3)?,
    ])
}

/// Bound for the feature-split pattern set, via exact symmetric differences.
pub fn example3_bound(
    seq: &MechanismSequence,
    k1: usize,
    k2: usize,
    k3: usize,
    mode: NeighborhoodMode,
    theorem: &CompositionTheorem,
) -> Result<ConstrainedBound> {
    if k3 != seq.len() {
        return Err(Error::InvalidBoundaries {
            k1,
            k2,
            k3,
            k: seq.len(),
        });
    }
    let patterns = MembershipConstraint::patterns(feature_split_patterns(k1, k2, k3)?)?;
    constrained_bound(seq, &patterns, mode, theorem)
}

/// Parallel-composition baseline for pure ε-DP sequences: `m · max ε_i`
/// (unbounded) or `min(2m, k) · max ε_i` (bounded).
pub fn parallel_bound(
    seq: &MechanismSequence,
    m: usize,
    mode: NeighborhoodMode,
) -> Result<PrivacyParams> {
    if m == 0 {
        return Err(Error::InvalidConstraint("parallel bound requires m ≥ 1".into()));
    }
    if let Some((index, g)) = seq.guarantees().iter().enumerate().find(|(_, g)| g.delta() > 0.0) {
        return Err(Error::NonzeroDelta {
            index,
            delta: g.delta(),
        });
    }
    let max_eps = seq.guarantees().iter().map(|g| g.epsilon()).fold(0.0, f64::max);
    let multiplier = match mode {
        NeighborhoodMode::Unbounded => m,
        NeighborhoodMode::Bounded => (2 * m).min(seq.len()),
    };
    Ok(PrivacyParams::clamped(multiplier as f64 * max_eps, 0.0))
}
