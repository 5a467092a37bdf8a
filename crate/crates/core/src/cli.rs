//! The `gce` command-line tool.
//!
//! Every subcommand reads a scenario file, writes a JSON machine report to
//! `--out` (or stdout) and a human-readable summary to stderr unless
//! `--quiet` is given.
//!
//! Exit codes: 0 success, 1 bad invocation or scenario file, 2 computation
//! error, 3 verification found an unsound claim.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::compose::{compose, CompositionTheorem};
use crate::constraints::{constrained_bound, parallel_bound, NeighborhoodMode};
use crate::error::Error;
use crate::hdp::{hdp_guarantee, hdp_guarantee_over_set};
use crate::oracle::{randomized_response, simulate_experiment, verify_hdp, view_distribution};
use crate::params::{BitVector, HypothesisPairSet, PrivacyParams};
use crate::refine::refine_tuples;
use crate::scenario::{load_scenario, HypothesisSpec, Scenario};
use crate::subsample::{amplify, corollary2_bound, corollary3_closed_form, theorem2_bound};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAD_INPUT: i32 = 1;
pub const EXIT_COMPUTATION: i32 = 2;
pub const EXIT_UNSOUND: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gce", version, about = "Privacy accounting for the generalized composition experiment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classic composition bound (simple or advanced, per the scenario).
    Compose(CommonArgs),
    /// Hypothesis-DP guarantee for the scenario's hypothesis pair(s).
    Hdp(CommonArgs),
    /// Membership-constraint bound with a parallel-composition comparison.
    Constrain(CommonArgs),
    /// Uniform-prior bounds via amplification by subsampling.
    Subsample(CommonArgs),
    /// Exact oracle check of a claimed guarantee on randomized response.
    Verify(CommonArgs),
    /// Monte-Carlo simulation of the composition experiment.
    Simulate(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Write the machine report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario's oracle seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the human-readable report.
    #[arg(long)]
    quiet: bool,
}

/// Which computation a report comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Compose,
    Hdp,
    Constrain,
    Subsample,
    Verify,
    Simulate,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Compose => "compose",
            Self::Hdp => "hdp",
            Self::Constrain => "constrain",
            Self::Subsample => "subsample",
            Self::Verify => "verify",
            Self::Simulate => "simulate",
        }
    }
}

/// Outcome of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub machine: Value,
    pub human: String,
    pub exit_code: i32,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// The scenario lacks a section this subcommand needs.
    #[error("scenario is missing `{0}`, required by this subcommand")]
    MissingSection(&'static str),
    #[error(transparent)]
    Computation(#[from] Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::MissingSection(_) => EXIT_BAD_INPUT,
            Self::Computation(_) => EXIT_COMPUTATION,
        }
    }
}

/// Formats a number for the human report; the text parses back to the same f64.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn params_json(g: &PrivacyParams) -> Value {
    json!({ "epsilon": g.epsilon(), "delta": g.delta() })
}

fn fmt_params(g: &PrivacyParams) -> String {
    format!("epsilon = {}, delta = {}", fmt_num(g.epsilon()), fmt_num(g.delta()))
}

fn theorem_label(t: &CompositionTheorem) -> String {
    match t {
        CompositionTheorem::Advanced { delta_slack } => {
            format!("advanced composition (delta_slack = {})", fmt_num(*delta_slack))
        }
        other => format!("{} composition", other.name()),
    }
}

fn outcome_json<T>(r: &crate::error::Result<T>, f: impl Fn(&T) -> Value) -> Value {
    match r {
        Ok(v) => f(v),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn outcome_text(r: &crate::error::Result<PrivacyParams>) -> String {
    match r {
        Ok(g) => fmt_params(g),
        Err(e) => format!("n/a ({e})"),
    }
}

fn require_hypotheses(s: &Scenario) -> Result<&HypothesisSpec, RunError> {
    s.hypotheses.as_ref().ok_or(RunError::MissingSection("hypotheses"))
}

/// Runs one subcommand on a loaded scenario.
pub fn run_command(kind: CommandKind, s: &Scenario, seed_override: Option<u64>) -> Result<Report, RunError> {
    let mut m = Map::new();
    m.insert("command".into(), json!(kind.name()));
    m.insert("scenario".into(), serde_json::to_value(&s.raw).expect("scenario serializes"));
    m.insert("k".into(), json!(s.mechanisms.len()));
    let mut h = String::new();
    let k = s.mechanisms.len();
    let seq = &s.mechanisms;
    let mut exit_code = EXIT_OK;

    match kind {
        CommandKind::Compose => {
            let g = compose(seq.guarantees(), &s.theorem)?;
            let method = theorem_label(&s.theorem);
            writeln!(h, "compose: {k} mechanisms, {method}").unwrap();
            writeln!(h, "result: {}", fmt_params(&g)).unwrap();
            m.insert("method".into(), json!(method));
            m.insert("result".into(), params_json(&g));
        }
        CommandKind::Hdp => {
            let spec = require_hypotheses(s)?;
            let classic = compose(seq.guarantees(), &s.theorem);
            let (g, method) = match spec {
                HypothesisSpec::Pair(p0, p1) => {
                    let pairs = refine_tuples(p0, p1)?.len();
                    m.insert("matched_pairs".into(), json!(pairs));
                    writeln!(h, "hdp: {k} mechanisms, {}, {pairs} matched pairs", theorem_label(&s.theorem)).unwrap();
                    (hdp_guarantee(p0, p1, seq, &s.theorem)?, "hdp_guarantee")
                }
                HypothesisSpec::Set(pairs) => {
                    let set = HypothesisPairSet::new(pairs.clone())?;
                    m.insert("hypothesis_pairs".into(), json!(set.len()));
                    writeln!(h, "hdp: {k} mechanisms, {}, {} hypothesis pairs", theorem_label(&s.theorem), set.len()).unwrap();
                    (hdp_guarantee_over_set(&set, seq, &s.theorem)?, "hdp_guarantee_over_set")
                }
            };
            writeln!(h, "result: {}", fmt_params(&g)).unwrap();
            writeln!(h, "classic bound: {}", outcome_text(&classic)).unwrap();
            m.insert("method".into(), json!(format!("{method} with {}", theorem_label(&s.theorem))));
            m.insert("result".into(), params_json(&g));
            m.insert("classic".into(), outcome_json(&classic, params_json));
        }
        CommandKind::Constrain => {
            let c = s.constraint.as_ref().ok_or(RunError::MissingSection("constraint"))?;
            let bound = constrained_bound(seq, c, s.mode, &s.theorem)?;
            let max_ones = c.max_ones();
            let method = format!("constrained_bound ({} mode) with {}", s.mode.name(), theorem_label(&s.theorem));
            writeln!(h, "constrain: {k} mechanisms, {method}").unwrap();
            writeln!(h, "result: {}", fmt_params(&bound.guarantee)).unwrap();
            if bound.heuristic {
                writeln!(h, "warning: subset search too large; delta is a top-m upper bound").unwrap();
            }
            m.insert("method".into(), json!(method));
            m.insert("result".into(), params_json(&bound.guarantee));
            m.insert("heuristic".into(), json!(bound.heuristic));
            m.insert(
                "worst_iterations".into(),
                json!(bound.worst_indices.as_ref().map(|v| v.iter().map(|i| i + 1).collect::<Vec<_>>())),
            );
            m.insert("max_ones".into(), json!(max_ones));

            let classic = compose(seq.guarantees(), &s.theorem);
            writeln!(h, "comparison (m = {max_ones}):").unwrap();
            let mut rows = Vec::new();
            for mode in [NeighborhoodMode::Unbounded, NeighborhoodMode::Bounded] {
                let gce = constrained_bound(seq, c, mode, &s.theorem).map(|b| b.guarantee);
                let par = parallel_bound(seq, max_ones.max(1), mode);
                writeln!(h, "  {:<9} gce: {}", mode.name(), outcome_text(&gce)).unwrap();
                writeln!(h, "  {:<9} parallel: {}", mode.name(), outcome_text(&par)).unwrap();
                rows.push(json!({
                    "mode": mode.name(),
                    "gce": outcome_json(&gce, params_json),
                    "parallel": outcome_json(&par, params_json),
                }));
            }
            writeln!(h, "  classic: {}", outcome_text(&classic)).unwrap();
            m.insert("comparison".into(), Value::Array(rows));
            m.insert("classic".into(), outcome_json(&classic, params_json));
        }
        CommandKind::Subsample => {
            let t2 = theorem2_bound(seq, &s.theorem)?;
            let c2 = corollary2_bound(seq, &s.theorem)?;
            let c3 = if seq.is_homogeneous() {
                let g = seq.guarantees()[0];
                Some(corollary3_closed_form(g.epsilon(), g.delta(), k)?)
            } else {
                None
            };
            let method = format!("theorem2_bound with {}", theorem_label(&s.theorem));
            writeln!(h, "subsample: {k} mechanisms, uniform-nonzero adversary, {}", theorem_label(&s.theorem)).unwrap();
            writeln!(h, "theorem2:   {}", fmt_params(&t2)).unwrap();
            writeln!(h, "corollary2: {}", fmt_params(&c2)).unwrap();
            match &c3 {
                Some(g) => writeln!(h, "corollary3: {}", fmt_params(g)).unwrap(),
                None => writeln!(h, "corollary3: n/a (sequence is not homogeneous)").unwrap(),
            }
            let rate = s.subsample_rate;
            let amplified: Vec<Value> = seq.guarantees().iter().map(|g| params_json(&amplify(*g, rate))).collect();
            writeln!(h, "amplified at rate {}:", fmt_num(rate.get())).unwrap();
            for (i, g) in seq.guarantees().iter().enumerate() {
                writeln!(h, "  M{}: {}", i + 1, fmt_params(&amplify(*g, rate))).unwrap();
            }
            m.insert("method".into(), json!(method));
            m.insert("result".into(), params_json(&t2));
            m.insert("theorem2".into(), params_json(&t2));
            m.insert("corollary2".into(), params_json(&c2));
            m.insert("corollary3".into(), c3.as_ref().map_or(Value::Null, params_json));
            m.insert("subsample_rate".into(), json!(rate.get()));
            m.insert("amplified".into(), Value::Array(amplified));
        }
        CommandKind::Verify => {
            let spec = require_hypotheses(s)?;
            let mech = randomized_response(s.oracle.rr_q)?;
            let mechs = vec![mech.clone(); k];
            writeln!(
                h,
                "verify: {k} x randomized response (q = {}, epsilon = {})",
                fmt_num(s.oracle.rr_q),
                fmt_num(mech.pure_epsilon())
            )
            .unwrap();
            let mut rows = Vec::new();
            let (mut fwd_max, mut rev_max, mut all_sound) = (0.0f64, 0.0f64, true);
            let mut first_claim = None;
            for (i, (p0, p1)) in spec.pairs().into_iter().enumerate() {
                let claimed = match s.claimed {
                    Some(c) => c,
                    None => hdp_guarantee(p0, p1, seq, &s.theorem)?,
                };
                first_claim.get_or_insert(claimed);
                let r = verify_hdp(&mechs, p0, p1, &claimed)?;
                fwd_max = fwd_max.max(r.delta_needed_fwd);
                rev_max = rev_max.max(r.delta_needed_rev);
                all_sound &= r.sound;
                writeln!(
                    h,
                    "pair {}: claimed {}; delta_needed fwd = {}, rev = {}: {}",
                    i + 1,
                    fmt_params(&claimed),
                    fmt_num(r.delta_needed_fwd),
                    fmt_num(r.delta_needed_rev),
                    if r.sound { "SOUND" } else { "UNSOUND" }
                )
                .unwrap();
                rows.push(json!({
                    "claimed": params_json(&claimed),
                    "delta_needed_fwd": r.delta_needed_fwd,
                    "delta_needed_rev": r.delta_needed_rev,
                    "sound": r.sound,
                }));
            }
            writeln!(h, "verdict: {}", if all_sound { "SOUND" } else { "UNSOUND" }).unwrap();
            let claim_source = if s.claimed.is_some() { "scenario" } else { "hdp_guarantee" };
            m.insert("method".into(), json!(format!("exact enumeration, claim from {claim_source}")));
            m.insert("result".into(), first_claim.as_ref().map_or(Value::Null, params_json));
            m.insert("rr_q".into(), json!(s.oracle.rr_q));
            m.insert("delta_needed_fwd".into(), json!(fwd_max));
            m.insert("delta_needed_rev".into(), json!(rev_max));
            m.insert("sound".into(), json!(all_sound));
            m.insert("pairs".into(), Value::Array(rows));
            if !all_sound {
                exit_code = EXIT_UNSOUND;
            }
        }
        CommandKind::Simulate => {
            let seed = seed_override.unwrap_or(s.oracle.seed);
            let trials = s.oracle.trials;
            let mechs = vec![randomized_response(s.oracle.rr_q)?; k];
            let vectors = simulation_vectors(s)?;
            writeln!(
                h,
                "simulate: {k} x randomized response (q = {}), {trials} trials per vector, seed {seed}",
                fmt_num(s.oracle.rr_q)
            )
            .unwrap();
            let mut rows = Vec::new();
            let mut worst_z = 0.0f64;
            for b in &vectors {
                let counts = simulate_experiment(&mechs, b, trials, seed)?;
                let exact = view_distribution(&mechs, b)?;
                let n = trials as f64;
                let mut views = Vec::new();
                let mut max_z = 0.0f64;
                writeln!(h, "vector {b}:").unwrap();
                for (idx, (&c, &p)) in counts.counts().iter().zip(exact.probs()).enumerate() {
                    let freq = c as f64 / n;
                    let sd = (p * (1.0 - p) / n).sqrt();
                    let z = if sd > 0.0 { (freq - p) / sd } else { 0.0 };
                    max_z = max_z.max(z.abs());
                    let label = view_label(&exact.view_of(idx));
                    writeln!(h, "  view {label}: count {c}, frequency {}, exact {}, z {}", fmt_num(freq), fmt_num(p), fmt_num(z)).unwrap();
                    views.push(json!({ "view": label, "count": c, "frequency": freq, "probability": p, "z": z }));
                }
                worst_z = worst_z.max(max_z);
                rows.push(json!({ "vector": b.to_string(), "views": views, "max_abs_z": max_z }));
            }
            writeln!(h, "max |z| = {}", fmt_num(worst_z)).unwrap();
            m.insert("method".into(), json!("monte carlo, ChaCha8 stream per trial"));
            m.insert("seed".into(), json!(seed));
            m.insert("trials".into(), json!(trials));
            m.insert("rr_q".into(), json!(s.oracle.rr_q));
            m.insert("vectors".into(), Value::Array(rows));
            m.insert("max_abs_z".into(), json!(worst_z));
            m.insert("within_4_sigma".into(), json!(worst_z <= 4.0));
        }
    }
    Ok(Report {
        machine: Value::Object(m),
        human: h,
        exit_code,
    })
}

fn view_label(view: &[usize]) -> String {
    view.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("")
}

/// Vectors to simulate: the scenario's list, else the support of the
/// hypotheses, else the all-zero and all-one vectors.
fn simulation_vectors(s: &Scenario) -> Result<Vec<BitVector>, RunError> {
    if let Some(v) = &s.oracle.vectors {
        return Ok(v.clone());
    }
    let k = s.mechanisms.len();
    let mut set = std::collections::BTreeSet::new();
    match &s.hypotheses {
        Some(spec) => {
            for (p0, p1) in spec.pairs() {
                set.extend(p0.atoms().map(|(b, _)| b));
                set.extend(p1.atoms().map(|(b, _)| b));
            }
        }
        None => {
            set.insert(BitVector::zeros(k)?);
            set.insert(BitVector::ones(k)?);
        }
    }
    Ok(set.into_iter().collect())
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
        }
    };
    let (kind, args) = match cli.command {
        Command::Compose(a) => (CommandKind::Compose, a),
        Command::Hdp(a) => (CommandKind::Hdp, a),
        Command::Constrain(a) => (CommandKind::Constrain, a),
        Command::Subsample(a) => (CommandKind::Subsample, a),
        Command::Verify(a) => (CommandKind::Verify, a),
        Command::Simulate(a) => (CommandKind::Simulate, a),
    };
    let scenario = match load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    let report = match run_command(kind, &scenario, args.seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let mut text = serde_json::to_string_pretty(&report.machine).expect("report serializes");
    text.push('\n');
    let written = match &args.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(msg) = written {
        eprintln!("error: {msg}");
        return EXIT_BAD_INPUT;
    }
    if !args.quiet {
        eprint!("{}", report.human);
    }
    report.exit_code
}
