//! Python bindings for `gce-core`.
//!
//! Bit vectors are passed as `"0"`/`"1"` strings with iteration 1 leftmost,
//! hypotheses as `{bitstring: weight}` dicts or one of the presets `"zero"`,
//! `"uniform_nonzero"`, `"uniform_all"` (the presets need `k`, which is taken
//! from the mechanism sequence).

use std::collections::BTreeMap;

use gce_core as core;
use gce_core::oracle::randomized_response_guarantee;
use gce_core::subsample::SubsampleRate;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn to_py(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An `(ε, δ)` guarantee.
#[pyclass(frozen, eq, skip_from_py_object, module = "gce")]
#[derive(Clone, Copy, PartialEq)]
pub struct PrivacyParams(core::PrivacyParams);

#[pymethods]
impl PrivacyParams {
    #[new]
    #[pyo3(signature = (epsilon, delta = 0.0))]
    fn new(epsilon: f64, delta: f64) -> PyResult<Self> {
        core::PrivacyParams::new(epsilon, delta).map(Self).map_err(to_py)
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta()
    }

    fn as_tuple(&self) -> (f64, f64) {
        (self.0.epsilon(), self.0.delta())
    }

    fn __repr__(&self) -> String {
        format!("PrivacyParams(epsilon={:?}, delta={:?})", self.0.epsilon(), self.0.delta())
    }
}

/// A distribution over bit vectors of one length.
#[pyclass(frozen, skip_from_py_object, module = "gce")]
#[derive(Clone)]
pub struct Hypothesis(core::Hypothesis);

#[pymethods]
impl Hypothesis {
    #[new]
    fn new(atoms: BTreeMap<String, f64>) -> PyResult<Self> {
        let parsed = atoms
            .into_iter()
            .map(|(b, w)| Ok((b.parse::<core::BitVector>().map_err(to_py)?, w)))
            .collect::<PyResult<Vec<_>>>()?;
        core::Hypothesis::new(parsed).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn preset(name: &str, k: usize) -> PyResult<Self> {
        let h = match name {
            "zero" => core::Hypothesis::zero(k),
            "uniform_nonzero" => core::Hypothesis::uniform_nonzero(k),
            "uniform_all" => core::Hypothesis::uniform_all(k),
            other => return Err(PyValueError::new_err(format!("unknown preset `{other}`"))),
        };
        h.map(Self).map_err(to_py)
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.len()
    }

    fn atoms(&self) -> BTreeMap<String, f64> {
        self.0.atoms().map(|(b, w)| (b.to_string(), w)).collect()
    }

    fn __len__(&self) -> usize {
        self.0.support_size()
    }

    fn __repr__(&self) -> String {
        format!("Hypothesis({:?})", self.atoms())
    }
}

/// Guarantees of the mechanisms run in iterations 1..k.
#[pyclass(frozen, skip_from_py_object, module = "gce")]
#[derive(Clone)]
pub struct MechanismSequence(core::MechanismSequence);

#[pymethods]
impl MechanismSequence {
    /// Accepts `PrivacyParams` objects or `(epsilon, delta)` tuples.
    #[new]
    fn new(guarantees: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let gs = guarantees.iter().map(extract_params).collect::<PyResult<Vec<_>>>()?;
        core::MechanismSequence::new(gs).map(Self).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (k, epsilon, delta = 0.0))]
    fn homogeneous(k: usize, epsilon: f64, delta: f64) -> PyResult<Self> {
        let g = core::PrivacyParams::new(epsilon, delta).map_err(to_py)?;
        core::MechanismSequence::homogeneous(g, k).map(Self).map_err(to_py)
    }

    fn guarantees(&self) -> Vec<PrivacyParams> {
        self.0.guarantees().iter().copied().map(PrivacyParams).collect()
    }

    fn is_homogeneous(&self) -> bool {
        self.0.is_homogeneous()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

fn extract_params(obj: &Bound<'_, PyAny>) -> PyResult<core::PrivacyParams> {
    if let Ok(p) = obj.cast::<PrivacyParams>() {
        return Ok(p.get().0);
    }
    let (e, d): (f64, f64) = obj.extract()?;
    core::PrivacyParams::new(e, d).map_err(to_py)
}

fn hypothesis_arg(obj: &Bound<'_, PyAny>, k: usize) -> PyResult<core::Hypothesis> {
    if let Ok(h) = obj.cast::<Hypothesis>() {
        return Ok(h.get().0.clone());
    }
    if let Ok(name) = obj.extract::<String>() {
        return Hypothesis::preset(&name, k).map(|h| h.0);
    }
    Hypothesis::new(obj.extract()?).map(|h| h.0)
}

fn theorem_arg(delta_slack: Option<f64>) -> PyResult<core::CompositionTheorem> {
    match delta_slack {
        None => Ok(core::CompositionTheorem::Simple),
        Some(s) => core::CompositionTheorem::advanced(s).map_err(to_py),
    }
}

fn mode_arg(mode: &str) -> PyResult<core::NeighborhoodMode> {
    match mode {
        "unbounded" => Ok(core::NeighborhoodMode::Unbounded),
        "bounded" => Ok(core::NeighborhoodMode::Bounded),
        other => Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    }
}

/// Classic composition; `delta_slack` selects the advanced theorem.
#[pyfunction]
#[pyo3(signature = (seq, delta_slack = None))]
fn compose(seq: &MechanismSequence, delta_slack: Option<f64>) -> PyResult<PrivacyParams> {
    core::compose(seq.0.guarantees(), &theorem_arg(delta_slack)?).map(PrivacyParams).map_err(to_py)
}

/// Guarantee for the hypothesis pair `(p0, p1)`.
#[pyfunction]
#[pyo3(signature = (p0, p1, seq, delta_slack = None))]
fn hdp_guarantee(
    p0: &Bound<'_, PyAny>,
    p1: &Bound<'_, PyAny>,
    seq: &MechanismSequence,
    delta_slack: Option<f64>,
) -> PyResult<PrivacyParams> {
    let k = seq.0.len();
    core::hdp_guarantee(&hypothesis_arg(p0, k)?, &hypothesis_arg(p1, k)?, &seq.0, &theorem_arg(delta_slack)?)
        .map(PrivacyParams)
        .map_err(to_py)
}

/// Matched pairs `(b0, b1, weight)` of the tuple refinement.
#[pyfunction]
fn refine_tuples(p0: &Hypothesis, p1: &Hypothesis) -> PyResult<Vec<(String, String, f64)>> {
    let r = core::refine_tuples(&p0.0, &p1.0).map_err(to_py)?;
    Ok(r.pairs()
        .iter()
        .map(|(a, b)| (a.vector.to_string(), b.vector.to_string(), a.weight))
        .collect())
}

/// Bound under a membership constraint: pass `max_ones` or `patterns`.
/// Returns `(guarantee, worst_iterations, heuristic)`; iterations are 1-based.
#[pyfunction]
#[pyo3(signature = (seq, max_ones = None, patterns = None, mode = "unbounded", delta_slack = None))]
fn constrained_bound(
    seq: &MechanismSequence,
    max_ones: Option<usize>,
    patterns: Option<Vec<String>>,
    mode: &str,
    delta_slack: Option<f64>,
) -> PyResult<(PrivacyParams, Option<Vec<usize>>, bool)> {
    let constraint = match (max_ones, patterns) {
        (Some(m), None) => core::MembershipConstraint::MaxOnes(m),
        (None, Some(ps)) => {
            let vs = ps.iter().map(|p| p.parse().map_err(to_py)).collect::<PyResult<Vec<_>>>()?;
            core::MembershipConstraint::patterns(vs).map_err(to_py)?
        }
        _ => return Err(PyValueError::new_err("pass exactly one of max_ones, patterns")),
    };
    let b = core::constrained_bound(&seq.0, &constraint, mode_arg(mode)?, &theorem_arg(delta_slack)?).map_err(to_py)?;
    let worst = b.worst_indices.map(|v| v.into_iter().map(|i| i + 1).collect());
    Ok((PrivacyParams(b.guarantee), worst, b.heuristic))
}

#[pyfunction]
#[pyo3(signature = (seq, m, mode = "unbounded"))]
fn parallel_bound(seq: &MechanismSequence, m: usize, mode: &str) -> PyResult<PrivacyParams> {
    core::parallel_bound(&seq.0, m, mode_arg(mode)?).map(PrivacyParams).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (g, rate = 0.5))]
fn amplify(g: &Bound<'_, PyAny>, rate: f64) -> PyResult<PrivacyParams> {
    let rate = SubsampleRate::new(rate).map_err(to_py)?;
    Ok(PrivacyParams(core::amplify(extract_params(g)?, rate)))
}

#[pyfunction]
#[pyo3(signature = (seq, delta_slack = None))]
fn theorem2_bound(seq: &MechanismSequence, delta_slack: Option<f64>) -> PyResult<PrivacyParams> {
    core::theorem2_bound(&seq.0, &theorem_arg(delta_slack)?).map(PrivacyParams).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (seq, delta_slack = None))]
fn corollary2_bound(seq: &MechanismSequence, delta_slack: Option<f64>) -> PyResult<PrivacyParams> {
    core::corollary2_bound(&seq.0, &theorem_arg(delta_slack)?).map(PrivacyParams).map_err(to_py)
}

#[pyfunction]
fn corollary3_closed_form(epsilon: f64, delta: f64, k: usize) -> PyResult<PrivacyParams> {
    core::corollary3_closed_form(epsilon, delta, k).map(PrivacyParams).map_err(to_py)
}

#[pyfunction]
fn uniform_nonzero_closed_form(epsilon: f64, delta: f64, k: usize) -> PyResult<PrivacyParams> {
    core::uniform_nonzero_closed_form(epsilon, delta, k).map(PrivacyParams).map_err(to_py)
}

/// `ε = ln((1 − q)/q)` of randomized response with flip probability `q`.
#[pyfunction]
fn randomized_response_epsilon(q: f64) -> PyResult<f64> {
    randomized_response_guarantee(q).map(|g| g.epsilon()).map_err(to_py)
}

/// Exact check of `claimed` for `k` randomized-response mechanisms.
/// Returns `(delta_needed_fwd, delta_needed_rev, sound)`.
#[pyfunction]
fn verify_randomized_response(
    q: f64,
    k: usize,
    p0: &Bound<'_, PyAny>,
    p1: &Bound<'_, PyAny>,
    claimed: &Bound<'_, PyAny>,
) -> PyResult<(f64, f64, bool)> {
    let mechs = vec![core::randomized_response(q).map_err(to_py)?; k];
    let r = core::verify_hdp(&mechs, &hypothesis_arg(p0, k)?, &hypothesis_arg(p1, k)?, &extract_params(claimed)?)
        .map_err(to_py)?;
    Ok((r.delta_needed_fwd, r.delta_needed_rev, r.sound))
}

/// Seeded Monte-Carlo view counts for randomized response with `b` fixed,
/// in mixed-radix order (iteration 1 most significant).
#[pyfunction]
fn simulate_randomized_response(q: f64, b: &str, trials: u64, seed: u64) -> PyResult<Vec<u64>> {
    let b: core::BitVector = b.parse().map_err(to_py)?;
    let mechs = vec![core::randomized_response(q).map_err(to_py)?; b.len()];
    core::simulate_experiment(&mechs, &b, trials, seed)
        .map(|c| c.counts().to_vec())
        .map_err(to_py)
}

#[pymodule]
fn gce(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PrivacyParams>()?;
    m.add_class::<Hypothesis>()?;
    m.add_class::<MechanismSequence>()?;
    m.add_function(wrap_pyfunction!(compose, m)?)?;
    m.add_function(wrap_pyfunction!(hdp_guarantee, m)?)?;
    m.add_function(wrap_pyfunction!(refine_tuples, m)?)?;
    m.add_function(wrap_pyfunction!(constrained_bound, m)?)?;
    m.add_function(wrap_pyfunction!(parallel_bound, m)?)?;
    m.add_function(wrap_pyfunction!(amplify, m)?)?;
    m.add_function(wrap_pyfunction!(theorem2_bound, m)?)?;
    m.add_function(wrap_pyfunction!(corollary2_bound, m)?)?;
    m.add_function(wrap_pyfunction!(corollary3_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_nonzero_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(randomized_response_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(verify_randomized_response, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_randomized_response, m)?)?;
    Ok(())
}
