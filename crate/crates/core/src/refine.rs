//! Tuple refinement: split the atoms of two hypotheses into equal-weight
//! matched pairs.
//!
//! Each step takes the lexicographically smallest remaining vector on both
//! sides, matches the smaller of the two weights, and returns the leftover
//! weight to its side. A leftover keeps its vector, which was the smallest on
//! that side, so it is taken again next; the procedure is therefore a merge
//! over the two sorted atom lists.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::params::{BitVector, Hypothesis};

/// Residual weights at or below this are discarded.
pub const PRUNE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedTuple {
    pub vector: BitVector,
    pub weight: f64,
}

/// Matched pairs whose two weights are identical.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchedRefinement {
    pairs: Vec<(WeightedTuple, WeightedTuple)>,
}

impl MatchedRefinement {
    pub fn pairs(&self) -> &[(WeightedTuple, WeightedTuple)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Same pairs with the two sides exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            pairs: self.pairs.iter().map(|&(a, b)| (b, a)).collect(),
        }
    }

    /// Total weight per vector on side 0 (`side == 0`) or side 1.
    pub fn side_mass(&self, side: usize) -> BTreeMap<BitVector, f64> {
        let mut mass = BTreeMap::new();
        for (a, b) in &self.pairs {
            let t = if side == 0 { a } else { b };
            *mass.entry(t.vector).or_insert(0.0) += t.weight;
        }
        mass
    }
}

pub fn refine_tuples(p0: &Hypothesis, p1: &Hypothesis) -> Result<MatchedRefinement> {
    if p0.len() != p1.len() {
        return Err(Error::MixedLength {
            expected: p0.len(),
            found: p1.len(),
        });
    }
    let side0: Vec<(BitVector, f64)> = p0.atoms().collect();
    let side1: Vec<(BitVector, f64)> = p1.atoms().collect();
    let mut pairs = Vec::with_capacity(side0.len() + side1.len());

    let (mut i, mut j) = (0, 0);
    let mut w0 = side0.first().map_or(0.0, |a| a.1);
    let mut w1 = side1.first().map_or(0.0, |a| a.1);
    while i < side0.len() && j < side1.len() {
        let (b0, b1) = (side0[i].0, side1[j].0);
        let matched = w0.min(w1);
        pairs.push((
            WeightedTuple {
                vector: b0,
                weight: matched,
            },
            WeightedTuple {
                vector: b1,
                weight: matched,
            },
        ));
        if w0 <= w1 {
            w1 -= w0;
            i += 1;
            w0 = side0.get(i).map_or(0.0, |a| a.1);
            if w1 <= PRUNE_TOLERANCE {
                j += 1;
                w1 = side1.get(j).map_or(0.0, |a| a.1);
            }
        } else {
            w0 -= w1;
            j += 1;
            w1 = side1.get(j).map_or(0.0, |a| a.1);
            if w0 <= PRUNE_TOLERANCE {
                i += 1;
                w0 = side0.get(i).map_or(0.0, |a| a.1);
            }
        }
    }
    Ok(MatchedRefinement { pairs })
}
