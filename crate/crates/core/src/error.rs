use thiserror::Error;

/// Errors raised by the accounting library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("epsilon ≥ 0 violated (got {0})")]
    NegativeEpsilon(f64),

    #[error("delta ∈ [0, 1] violated (got {0})")]
    DeltaOutOfRange(f64),

    #[error("bit vector length {0} outside 1..={max}", max = crate::params::MAX_K)]
    InvalidLength(usize),

    #[error("invalid bit string {0:?}: expected only '0' and '1'")]
    InvalidBitString(String),

    #[error("MixedLength: expected length {expected}, found {found}")]
    MixedLength { expected: usize, found: usize },

    #[error("NonPositiveWeight: atom {atom} has weight {weight}")]
    NonPositiveWeight { atom: String, weight: f64 },

    #[error("NonNormalized: weights sum to {0}, expected 1 within 1e-9")]
    NonNormalized(f64),

    #[error("mechanism sequence must be non-empty")]
    EmptySequence,

    #[error("HeterogeneousInput: advanced composition requires identical guarantees")]
    HeterogeneousInput,

    #[error("InvalidSlack: delta slack must lie in (0, 1) (got {0})")]
    InvalidSlack(f64),

    #[error("IncompatibleTheorem: {theorem} cannot compose this sequence ({reason})")]
    IncompatibleTheorem {
        theorem: &'static str,
        reason: &'static str,
    },

    #[error("EmptySet: hypothesis pair set is empty")]
    EmptySet,

    #[error("KTooLarge: {0}")]
    KTooLarge(String),

    #[error("InvalidConstraint: {0}")]
    InvalidConstraint(String),

    #[error("InvalidBoundaries: require 0 ≤ k1 < k2 < k3 = k (got k1={k1}, k2={k2}, k3={k3}, k={k})")]
    InvalidBoundaries {
        k1: usize,
        k2: usize,
        k3: usize,
        k: usize,
    },

    #[error("NonzeroDelta: parallel composition covers pure ε-DP only (mechanism {index} has δ = {delta})")]
    NonzeroDelta { index: usize, delta: f64 },

    #[error("InvalidRate: {0}")]
    InvalidRate(String),

    #[error("InvalidMechanism: {0}")]
    InvalidMechanism(String),

    #[error("ViewSpaceTooLarge: {0} views exceed the enumeration limit")]
    ViewSpaceTooLarge(u128),

    #[error("MismatchedSupport: view distributions are defined over different view spaces")]
    MismatchedSupport,

    #[error("InvalidTrials: at least one trial is required")]
    InvalidTrials,
}

pub type Result<T> = std::result::Result<T, Error>;
