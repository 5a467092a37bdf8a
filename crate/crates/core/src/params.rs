//! Domain types shared by every accounting module.
//!
//! All types are immutable once constructed; constructors enforce the
//! invariants, so downstream code never re-validates.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest bit-vector length supported by operations that enumerate `{0,1}^k`.
pub const MAX_K: usize = 63;

/// Tolerance on the total mass of a hypothesis.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

/// An `(ε, δ)` guarantee. ε is measured in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
}

#[derive(Deserialize)]
struct RawParams {
    epsilon: f64,
    delta: f64,
}

impl TryFrom<RawParams> for PrivacyParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        PrivacyParams::new(raw.epsilon, raw.delta)
    }
}

impl PrivacyParams {
    pub const ZERO: PrivacyParams = PrivacyParams {
        epsilon: 0.0,
        delta: 0.0,
    };

    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(Error::NegativeEpsilon(epsilon));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::DeltaOutOfRange(delta));
        }
        Ok(Self { epsilon, delta })
    }

    /// Pure ε-DP guarantee.
    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }

    /// Builds a result guarantee from computed values: δ is clamped into
    /// `[0, 1]` and ε floored at 0 (rounding can push a zero ε below it).
    pub(crate) fn clamped(epsilon: f64, delta: f64) -> Self {
        debug_assert!(!epsilon.is_nan() && !delta.is_nan());
        Self {
            epsilon: epsilon.max(0.0),
            delta: delta.clamp(0.0, 1.0),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Componentwise `≤`, with an absolute slack.
    pub fn dominated_by(&self, other: &PrivacyParams, tol: f64) -> bool {
        self.epsilon <= other.epsilon + tol && self.delta <= other.delta + tol
    }
}

impl fmt::Display for PrivacyParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(ε = {}, δ = {})", self.epsilon, self.delta)
    }
}

/// A length-k binary vector selecting, per iteration, which database the
/// mechanism runs on. Iteration 1 is the leftmost character of the string
/// form and the most significant stored bit, so the derived ordering is
/// lexicographic.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    len: u8,
    word: u64,
}

impl BitVector {
    pub fn zeros(len: usize) -> Result<Self> {
        Self::from_word(0, len)
    }

    pub fn ones(len: usize) -> Result<Self> {
        Self::check_len(len)?;
        Ok(Self {
            len: len as u8,
            word: (1u64 << len) - 1,
        })
    }

    /// Builds a vector from its machine word; bit `len - 1` is iteration 1.
    pub fn from_word(word: u64, len: usize) -> Result<Self> {
        Self::check_len(len)?;
        Ok(Self {
            len: len as u8,
            word: word & ((1u64 << len) - 1),
        })
    }

    /// Builds a vector with ones at the given 0-based iteration indices.
    pub fn from_indices(indices: &[usize], len: usize) -> Result<Self> {
        Self::check_len(len)?;
        let mut word = 0u64;
        for &i in indices {
            if i >= len {
                return Err(Error::InvalidLength(i + 1));
            }
            word |= 1u64 << (len - 1 - i);
        }
        Ok(Self {
            len: len as u8,
            word,
        })
    }

    fn check_len(len: usize) -> Result<()> {
        if len == 0 || len > MAX_K {
            Err(Error::InvalidLength(len))
        } else {
            Ok(())
        }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn word(&self) -> u64 {
        self.word
    }

    /// Bit of the 0-based iteration `i`.
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len(), "bit index {i} out of range");
        (self.word >> (self.len() - 1 - i)) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.word.count_ones() as usize
    }

    pub fn is_zero(&self) -> bool {
        self.word == 0
    }

    /// Inverts every bit.
    pub fn flip(&self) -> Self {
        Self {
            len: self.len,
            word: !self.word & ((1u64 << self.len) - 1),
        }
    }

    /// 0-based iteration indices holding a one.
    pub fn ones_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.get(i)).collect()
    }

    /// Bitwise XOR of two equal-length vectors.
    pub fn xor(&self, other: &BitVector) -> Result<BitVector> {
        if self.len != other.len {
            return Err(Error::MixedLength {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Self {
            len: self.len,
            word: self.word ^ other.word,
        })
    }

    /// Every vector in `{0,1}^len`, in lexicographic order.
    pub fn all(len: usize) -> Result<impl Iterator<Item = BitVector>> {
        Self::check_len(len)?;
        let l = len as u8;
        Ok((0..(1u64 << len)).map(move |word| BitVector { len: l, word }))
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > MAX_K {
            return Err(if s.chars().all(|c| c == '0' || c == '1') {
                Error::InvalidLength(s.len())
            } else {
                Error::InvalidBitString(s.to_owned())
            });
        }
        let mut word = 0u64;
        for c in s.chars() {
            word = (word << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::InvalidBitString(s.to_owned())),
                };
        }
        Self::from_word(word, s.len())
    }
}

impl Serialize for BitVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A composite hypothesis: a finite probability distribution over bit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    atoms: BTreeMap<BitVector, f64>,
    len: usize,
}

impl Hypothesis {
    /// Validates and builds a hypothesis. Repeated atoms have their weights added.
    pub fn new<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BitVector, f64)>,
    {
        let mut map: BTreeMap<BitVector, f64> = BTreeMap::new();
        let mut len = None;
        for (b, w) in atoms {
            match len {
                None => len = Some(b.len()),
                Some(l) if l != b.len() => {
                    return Err(Error::MixedLength {
                        expected: l,
                        found: b.len(),
                    })
                }
                _ => {}
            }
            if w.is_nan() || w <= 0.0 {
                return Err(Error::NonPositiveWeight {
                    atom: b.to_string(),
                    weight: w,
                });
            }
            *map.entry(b).or_insert(0.0) += w;
        }
        let len = len.ok_or(Error::NonNormalized(0.0))?;
        let total = crate::numeric::kahan_sum(map.values().copied());
        if !total.is_finite() || (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::NonNormalized(total));
        }
        Ok(Self { atoms: map, len })
    }

    pub fn point(b: BitVector) -> Self {
        Self {
            len: b.len(),
            atoms: BTreeMap::from([(b, 1.0)]),
        }
    }

    /// Uniform distribution over the given (distinct) vectors.
    pub fn uniform<I: IntoIterator<Item = BitVector>>(support: I) -> Result<Self> {
        let support: Vec<BitVector> = support.into_iter().collect();
        let w = 1.0 / support.len() as f64;
        Self::new(support.into_iter().map(|b| (b, w)))
    }

    /// Point mass on the all-zero vector (the record is in none of the databases).
    pub fn zero(k: usize) -> Result<Self> {
        Ok(Self::point(BitVector::zeros(k)?))
    }

    /// Uniform over all nonzero vectors (the record is in at least one database,
    /// with no further prior knowledge).
    pub fn uniform_nonzero(k: usize) -> Result<Self> {
        Self::uniform(BitVector::all(k)?.filter(|b| !b.is_zero()))
    }

    /// Uniform over all of `{0,1}^k`.
    pub fn uniform_all(k: usize) -> Result<Self> {
        Self::uniform(BitVector::all(k)?)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn weight(&self, b: &BitVector) -> f64 {
        self.atoms.get(b).copied().unwrap_or(0.0)
    }

    /// Atoms in lexicographic order of their vectors.
    pub fn atoms(&self) -> impl Iterator<Item = (BitVector, f64)> + '_ {
        self.atoms.iter().map(|(b, w)| (*b, *w))
    }
}

/// Validates raw atoms without keeping the result.
pub fn validate_hypothesis(atoms: &[(BitVector, f64)]) -> Result<()> {
    Hypothesis::new(atoms.iter().copied()).map(|_| ())
}

/// Per-iteration guarantees of the mechanisms `M_1..M_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismSequence {
    guarantees: Vec<PrivacyParams>,
}

impl MechanismSequence {
    pub fn new(guarantees: Vec<PrivacyParams>) -> Result<Self> {
        if guarantees.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(Self { guarantees })
    }

    /// `k` copies of the same guarantee.
    pub fn homogeneous(params: PrivacyParams, k: usize) -> Result<Self> {
        Self::new(vec![params; k])
    }

    pub fn len(&self) -> usize {
        self.guarantees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.guarantees.is_empty()
    }

    pub fn guarantees(&self) -> &[PrivacyParams] {
        &self.guarantees
    }

    pub fn is_homogeneous(&self) -> bool {
        is_homogeneous(&self.guarantees)
    }

    /// Guarantees at the given 0-based indices, in index order.
    pub fn select(&self, indices: &[usize]) -> Vec<PrivacyParams> {
        indices.iter().map(|&i| self.guarantees[i]).collect()
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if self.len() != len {
            return Err(Error::MixedLength {
                expected: self.len(),
                found: len,
            });
        }
        Ok(())
    }
}

pub(crate) fn is_homogeneous(guarantees: &[PrivacyParams]) -> bool {
    guarantees.windows(2).all(|w| w[0] == w[1])
}

/// A set of hypothesis pairs the guarantee has to cover.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HypothesisPairSet {
    pairs: Vec<(Hypothesis, Hypothesis)>,
}

impl HypothesisPairSet {
    pub fn new(pairs: Vec<(Hypothesis, Hypothesis)>) -> Result<Self> {
        if let Some((first, _)) = pairs.first() {
            let k = first.len();
            for (p0, p1) in &pairs {
                for h in [p0, p1] {
                    if h.len() != k {
                        return Err(Error::MixedLength {
                            expected: k,
                            found: h.len(),
                        });
                    }
                }
            }
        }
        Ok(Self { pairs })
    }

    /// All ordered pairs of point masses over `{0,1}^k`.
    pub fn all_deterministic(k: usize) -> Result<Self> {
        let vectors: Vec<BitVector> = BitVector::all(k)?.collect();
        let pairs = vectors
            .iter()
            .flat_map(|&a| {
                vectors
                    .iter()
                    .map(move |&b| (Hypothesis::point(a), Hypothesis::point(b)))
            })
            .collect();
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(Hypothesis, Hypothesis)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}
