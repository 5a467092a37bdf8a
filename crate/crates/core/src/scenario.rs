//! Scenario files: one JSON document that drives every CLI subcommand.
//!
//! ```json
//! {
//!   "mechanisms": [{"epsilon": 0.1, "delta": 1e-6, "repeat": 3}],
//!   "theorem": "simple",
//!   "mode": "unbounded",
//!   "constraint": {"max_ones": 2},
//!   "hypotheses": {"p0": "zero", "p1": {"011": 0.5, "110": 0.5}},
//!   "oracle": {"rr_q": 0.25, "trials": 100000, "seed": 7}
//! }
//! ```
//!
//! Bit strings are ASCII `0`/`1` with iteration 1 leftmost. `theorem` is
//! `"simple"` or `{"advanced": {"delta_slack": …}}`; `constraint` is
//! `{"max_ones": m}`, `"at_most_one"` or `{"patterns": [...]}`; a hypothesis
//! is an atom map or one of the presets `"zero"`, `"uniform_nonzero"`,
//! `"uniform_all"`. `hypotheses` may also be a list of `{p0, p1}` pairs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compose::CompositionTheorem;
use crate::constraints::{MembershipConstraint, NeighborhoodMode};
use crate::error::Error as CoreError;
use crate::params::{BitVector, Hypothesis, MechanismSequence, PrivacyParams};
use crate::subsample::SubsampleRate;

pub const DEFAULT_RR_Q: f64 = 0.25;
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column} (field `{field}`): {message}")]
    Parse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },

    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self::Validation {
            field: field.into(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMechanism {
    pub epsilon: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawConstraint {
    MaxOnes(usize),
    AtMostOne,
    Patterns(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawHypothesis {
    Preset(String),
    Atoms(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPair {
    pub p0: RawHypothesis,
    pub p1: RawHypothesis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawHypotheses {
    Pair(RawPair),
    Set(Vec<RawPair>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOracle {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rr_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<String>>,
}

/// The scenario exactly as written in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub mechanisms: Vec<RawMechanism>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<CompositionTheorem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<NeighborhoodMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<RawConstraint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<RawHypotheses>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claimed: Option<RawParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<RawOracle>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSettings {
    pub rr_q: f64,
    pub trials: u64,
    pub seed: u64,
    pub vectors: Option<Vec<BitVector>>,
}

/// Hypotheses given either as a single pair or as a set of pairs.
#[derive(Debug, Clone, PartialEq)]
pub enum HypothesisSpec {
    Pair(Hypothesis, Hypothesis),
    Set(Vec<(Hypothesis, Hypothesis)>),
}

impl HypothesisSpec {
    pub fn pairs(&self) -> Vec<(&Hypothesis, &Hypothesis)> {
        match self {
            Self::Pair(a, b) => vec![(a, b)],
            Self::Set(v) => v.iter().map(|(a, b)| (a, b)).collect(),
        }
    }
}

/// A fully validated scenario with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub raw: RawScenario,
    pub mechanisms: MechanismSequence,
    pub theorem: CompositionTheorem,
    pub mode: NeighborhoodMode,
    pub constraint: Option<MembershipConstraint>,
    pub hypotheses: Option<HypothesisSpec>,
    pub subsample_rate: SubsampleRate,
    pub claimed: Option<PrivacyParams>,
    pub oracle: OracleSettings,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawScenario = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError::Parse {
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })?;
    validate(raw)
}

fn parse_hypothesis(raw: &RawHypothesis, k: usize, field: &str) -> Result<Hypothesis, ScenarioError> {
    let built = match raw {
        RawHypothesis::Preset(name) => match name.as_str() {
            "zero" => Hypothesis::zero(k),
            "uniform_nonzero" => Hypothesis::uniform_nonzero(k),
            "uniform_all" => Hypothesis::uniform_all(k),
            other => {
                return Err(ScenarioError::invalid(
                    field,
                    format!("unknown preset {other:?} (expected zero, uniform_nonzero or uniform_all)"),
                ))
            }
        },
        RawHypothesis::Atoms(atoms) => {
            let mut parsed = Vec::with_capacity(atoms.len());
            for (s, &w) in atoms {
                let b: BitVector = s.parse().map_err(|e| ScenarioError::invalid(format!("{field}.{s}"), e))?;
                parsed.push((b, w));
            }
            Hypothesis::new(parsed)
        }
    }
    .map_err(|e| ScenarioError::invalid(field, e))?;
    if built.len() != k {
        return Err(ScenarioError::invalid(
            field,
            CoreError::MixedLength {
                expected: k,
                found: built.len(),
            },
        ));
    }
    Ok(built)
}

fn validate(raw: RawScenario) -> Result<Scenario, ScenarioError> {
    let mut guarantees = Vec::new();
    for (i, m) in raw.mechanisms.iter().enumerate() {
        let g = PrivacyParams::new(m.epsilon, m.delta)
            .map_err(|e| ScenarioError::invalid(format!("mechanisms[{i}]"), e))?;
        let repeat = m.repeat.unwrap_or(1);
        if repeat == 0 {
            return Err(ScenarioError::invalid(format!("mechanisms[{i}].repeat"), "repeat must be ≥ 1"));
        }
        guarantees.extend(std::iter::repeat_n(g, repeat));
    }
    let mechanisms = MechanismSequence::new(guarantees).map_err(|e| ScenarioError::invalid("mechanisms", e))?;
    let k = mechanisms.len();

    let theorem = raw.theorem.unwrap_or(CompositionTheorem::Simple);
    theorem.validate().map_err(|e| ScenarioError::invalid("theorem", e))?;

    let constraint = match &raw.constraint {
        None => None,
        Some(c) => {
            let built = match c {
                RawConstraint::MaxOnes(m) => MembershipConstraint::MaxOnes(*m),
                RawConstraint::AtMostOne => MembershipConstraint::AtMostOne,
                RawConstraint::Patterns(ps) => {
                    let mut vs = Vec::with_capacity(ps.len());
                    for (j, s) in ps.iter().enumerate() {
                        vs.push(s.parse().map_err(|e| ScenarioError::invalid(format!("constraint.patterns[{j}]"), e))?);
                    }
                    MembershipConstraint::patterns(vs).map_err(|e| ScenarioError::invalid("constraint.patterns", e))?
                }
            };
            built.validate(k).map_err(|e| ScenarioError::invalid("constraint", e))?;
            Some(built)
        }
    };

    let hypotheses = match &raw.hypotheses {
        None => None,
        Some(RawHypotheses::Pair(pair)) => Some(HypothesisSpec::Pair(
            parse_hypothesis(&pair.p0, k, "hypotheses.p0")?,
            parse_hypothesis(&pair.p1, k, "hypotheses.p1")?,
        )),
        Some(RawHypotheses::Set(pairs)) => {
            if pairs.is_empty() {
                return Err(ScenarioError::invalid("hypotheses", CoreError::EmptySet));
            }
            let mut out = Vec::with_capacity(pairs.len());
            for (j, pair) in pairs.iter().enumerate() {
                out.push((
                    parse_hypothesis(&pair.p0, k, &format!("hypotheses[{j}].p0"))?,
                    parse_hypothesis(&pair.p1, k, &format!("hypotheses[{j}].p1"))?,
                ));
            }
            Some(HypothesisSpec::Set(out))
        }
    };

    let subsample_rate = SubsampleRate::new(raw.subsample_rate.unwrap_or(0.5))
        .map_err(|e| ScenarioError::invalid("subsample_rate", e))?;

    let claimed = raw
        .claimed
        .as_ref()
        .map(|c| PrivacyParams::new(c.epsilon, c.delta))
        .transpose()
        .map_err(|e| ScenarioError::invalid("claimed", e))?;

    let oracle_raw = raw.oracle.clone().unwrap_or_default();
    let rr_q = oracle_raw.rr_q.unwrap_or(DEFAULT_RR_Q);
    crate::oracle::randomized_response(rr_q).map_err(|e| ScenarioError::invalid("oracle.rr_q", e))?;
    let trials = oracle_raw.trials.unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(ScenarioError::invalid("oracle.trials", CoreError::InvalidTrials));
    }
    let vectors = match &oracle_raw.vectors {
        None => None,
        Some(vs) => {
            let mut out = Vec::with_capacity(vs.len());
            for (j, s) in vs.iter().enumerate() {
                let b: BitVector = s.parse().map_err(|e| ScenarioError::invalid(format!("oracle.vectors[{j}]"), e))?;
                if b.len() != k {
                    return Err(ScenarioError::invalid(
                        format!("oracle.vectors[{j}]"),
                        CoreError::MixedLength { expected: k, found: b.len() },
                    ));
                }
                out.push(b);
            }
            Some(out)
        }
    };

    Ok(Scenario {
        mechanisms,
        theorem,
        mode: raw.mode.unwrap_or_default(),
        constraint,
        hypotheses,
        subsample_rate,
        claimed,
        oracle: OracleSettings {
            rr_q,
            trials,
            seed: oracle_raw.seed.unwrap_or(DEFAULT_SEED),
            vectors,
        },
        raw,
    })
}
