//! Privacy accounting under the generalized composition experiment.
//!
//! In the classic composition experiment a single hidden bit decides whether
//! every mechanism sees the database with or without the target record. Here
//! each iteration has its own bit, and the adversary's knowledge is a pair of
//! distributions over the bit vectors. That supports guarantees for composite
//! hypotheses, for publicly known membership constraints, and for adversaries
//! with a uniform prior (through amplification by subsampling).
//!
//! Modules:
//! - [`params`]: guarantees, bit vectors, hypotheses, mechanism sequences
//! - [`compose`]: simple and advanced composition
//! - [`refine`]: splitting two hypotheses into equal-weight matched pairs
//! - [`hdp`]: hypothesis-DP guarantees
//! - [`constraints`]: membership-constraint bounds and the parallel baseline
//! - [`subsample`]: amplification and the uniform-prior bounds
//! - [`oracle`]: exact enumeration and Monte-Carlo simulation
//! - [`scenario`], [`cli`]: the `gce` command-line tool

pub mod cli;
pub mod compose;
pub mod constraints;
pub mod error;
pub mod hdp;
pub mod numeric;
pub mod oracle;
pub mod params;
pub mod refine;
pub mod scenario;
pub mod subsample;

pub use compose::{advanced_compose, best_classic_bound, compose, simple_compose, CompositionTheorem};
pub use constraints::{
    allowed_vectors, constrained_bound, example3_bound, parallel_bound, ConstrainedBound,
    MembershipConstraint, NeighborhoodMode,
};
pub use error::{Error, Result};
pub use hdp::{
    differing_indices, hdp_guarantee, hdp_guarantee_over_set, pair_guarantee,
    uniform_nonzero_closed_form,
};
pub use oracle::{
    mixture_view_distribution, randomized_response, required_delta, simulate_experiment,
    verify_hdp, view_distribution, DiscreteMechanism, VerifyReport, ViewCounts, ViewDistribution,
};
pub use params::{
    validate_hypothesis, BitVector, Hypothesis, HypothesisPairSet, MechanismSequence,
    PrivacyParams, MAX_K,
};
pub use refine::{refine_tuples, MatchedRefinement, WeightedTuple};
pub use subsample::{
    amplify, corollary2_bound, corollary3_closed_form, theorem2_bound, SubsampleRate,
};
