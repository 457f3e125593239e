//! Composite gates built from qubus couplings, photon-number readout and
//! classical feed-forward.
//!
//! Every gate enumerates all readout outcomes above
//! [`GateParams::min_probability`], applies the feed-forward correction for
//! each, and compares the corrected states with one another. The run
//! continues with the reference outcome (the most probable one that left no
//! qubus mode behind), so a deterministic gate reports
//! `success_probability ≈ 1`.

mod basic;
mod merging;
pub mod tables;

use serde::{Deserialize, Serialize};

pub use basic::*;
pub use merging::*;

use crate::detection::{fock_outcomes, qnd_outcomes, BellOutcome, MeasurementKind, QndConfig, QndMode};
use crate::elements::{apply_all, qubus_bs, qubus_phase, xpm, ElementOp};
use crate::error::{Error, Result};
use crate::state::{HybridState, PhotonId, QubusId, C64};
use tables::CouplingTable;

/// How the measured qubus beam is read out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Readout {
    /// Direct projection onto Fock states.
    Ideal,
    /// QND probe with a non-resolving detector.
    Qnd { config: QndConfig, mode: QndMode },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateParams {
    /// Qubus amplitude (real).
    pub alpha: f64,
    /// XPM phase per coupling.
    pub theta: f64,
    pub readout: Readout,
    /// Outcomes at or below this probability are not enumerated.
    pub min_probability: f64,
    /// An outcome counts as a success when its fidelity with the reference is
    /// at least `1 − fidelity_tol`.
    pub fidelity_tol: f64,
}

impl Default for GateParams {
    fn default() -> Self {
        GateParams {
            alpha: 4000f64.sqrt(),
            theta: 0.05,
            readout: Readout::Ideal,
            min_probability: 1e-12,
            fidelity_tol: 1e-8,
        }
    }
}

impl GateParams {
    pub fn new(alpha: f64, theta: f64) -> Self {
        GateParams { alpha, theta, ..Default::default() }
    }

    /// Picks `α` so that the cat amplitude satisfies `|β|² = 2α²sin²θ`.
    pub fn with_beta_sq(theta: f64, beta_sq: f64) -> Self {
        let s = theta.sin();
        Self::new((beta_sq / (2.0 * s * s)).sqrt(), theta)
    }

    /// `|β|² = 2α²sin²θ`.
    pub fn beta_sq(&self) -> f64 {
        let s = self.theta.sin();
        2.0 * self.alpha * self.alpha * s * s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::invalid("alpha must be positive and finite"));
        }
        if !(self.theta.is_finite() && self.theta > 0.0 && self.theta < std::f64::consts::PI) {
            return Err(Error::invalid("theta must lie in (0, π)"));
        }
        if !(self.min_probability >= 0.0 && self.min_probability < 1.0) {
            return Err(Error::invalid("min_probability must lie in [0, 1)"));
        }
        if !(self.fidelity_tol >= 0.0 && self.fidelity_tol < 1.0) {
            return Err(Error::invalid("fidelity_tol must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Feed-forward classes of a photon-number readout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FockClass {
    Zero,
    Odd,
    EvenPositive,
}

impl FockClass {
    pub fn of(n: usize) -> Self {
        match n {
            0 => FockClass::Zero,
            n if n % 2 == 1 => FockClass::Odd,
            _ => FockClass::EvenPositive,
        }
    }
}

/// Key a feed-forward rule is looked up by.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "on", rename_all = "snake_case")]
pub enum OutcomePattern {
    Fock { class: FockClass },
    Presence { path: String, present: bool },
    Bell { pair: usize, outcome: BellOutcome },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedForwardRule {
    pub pattern: OutcomePattern,
    pub ops: Vec<ElementOp>,
}

/// Corrections keyed by measurement outcome. Every enumerated outcome must
/// match exactly one rule; [`FeedForwardPlan::ops_for`] enforces this.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeedForwardPlan {
    pub rules: Vec<FeedForwardRule>,
}

impl FeedForwardPlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rule(mut self, pattern: OutcomePattern, ops: Vec<ElementOp>) -> Self {
        self.rules.push(FeedForwardRule { pattern, ops });
        self
    }

    /// Plan for a qubus readout: nothing on `n = 0`, `odd` on odd `n`,
    /// `even` on even `n ≥ 2`.
    pub fn fock(odd: Vec<ElementOp>, even: Vec<ElementOp>) -> Self {
        Self::new()
            .rule(OutcomePattern::Fock { class: FockClass::Zero }, Vec::new())
            .rule(OutcomePattern::Fock { class: FockClass::Odd }, odd)
            .rule(OutcomePattern::Fock { class: FockClass::EvenPositive }, even)
    }

    pub fn ops_for(&self, pattern: &OutcomePattern) -> Result<&[ElementOp]> {
        let mut hits = self.rules.iter().filter(|r| &r.pattern == pattern);
        match (hits.next(), hits.next()) {
            (Some(r), None) => Ok(&r.ops),
            (None, _) => Err(Error::precondition(format!("no feed-forward rule for {pattern:?}"))),
            (Some(_), Some(_)) => Err(Error::precondition(format!("several feed-forward rules match {pattern:?}"))),
        }
    }

    /// True when every correction is a bare sign flip (σ_z or a π phase).
    pub fn only_sign_flips(&self) -> bool {
        self.rules.iter().flat_map(|r| &r.ops).all(ElementOp::is_sign_flip)
    }
}

/// Resource tally of a gate or pipeline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resources {
    pub xpm_couplings: usize,
    pub qubus_modes: usize,
    pub detections: usize,
    pub ancillas: usize,
    pub cpath_gates: usize,
    pub disentanglers: usize,
    pub entanglers: usize,
    pub merging_gates: usize,
    pub lomis: usize,
}

impl std::ops::AddAssign for Resources {
    fn add_assign(&mut self, o: Self) {
        self.xpm_couplings += o.xpm_couplings;
        self.qubus_modes += o.qubus_modes;
        self.detections += o.detections;
        self.ancillas += o.ancillas;
        self.cpath_gates += o.cpath_gates;
        self.disentanglers += o.disentanglers;
        self.entanglers += o.entanglers;
        self.merging_gates += o.merging_gates;
        self.lomis += o.lomis;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub label: String,
    pub probability: f64,
    /// Fidelity of the corrected state with the reference outcome.
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub gate: String,
    pub success_probability: f64,
    pub mean_fidelity: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<OutcomeSummary>,
    pub resources: Resources,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feed_forward: Option<FeedForwardPlan>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<GateReport>,
}

impl GateReport {
    pub fn is_deterministic(&self, tol: f64) -> bool {
        (self.success_probability - 1.0).abs() <= tol
    }

    /// Depth-first search for stage reports with the given gate name.
    pub fn find(&self, gate: &str) -> Vec<&GateReport> {
        let mut out = Vec::new();
        if self.gate == gate {
            out.push(self);
        }
        for s in &self.stages {
            out.extend(s.find(gate));
        }
        out
    }
}

/// One corrected outcome of an elementary gate.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub label: String,
    pub probability: f64,
    pub state: HybridState,
}

/// Result of running a gate: the continuing state, its report, the corrected
/// outcome states (elementary gates only) and gate-specific output.
#[derive(Clone, Debug)]
pub struct GateRun<T = ()> {
    pub state: HybridState,
    pub report: GateReport,
    pub outcomes: Vec<Outcome>,
    pub out: T,
}

struct Measured {
    label: String,
    pattern: OutcomePattern,
    probability: f64,
    state: HybridState,
}

/// Adds two qubus beams `|α⟩|α⟩`, applies the coupling table, the `−θ`
/// compensation on both beams and the qubus beam splitter. The first beam
/// returned is the one that is read out.
pub fn coupling_block(
    s: &HybridState,
    table: &CouplingTable,
    p: &GateParams,
) -> Result<(HybridState, QubusId, QubusId)> {
    p.validate()?;
    let alpha = C64::new(p.alpha, 0.0);
    let q1 = s.registry().next_qubus_id();
    let mut st = s.tensor(&HybridState::coherent(q1, alpha))?;
    let q2 = st.registry().next_qubus_id();
    st = st.tensor(&HybridState::coherent(q2, alpha))?;
    for sel in &table.beam1 {
        st = xpm(&st, q1, sel, p.theta)?;
    }
    for sel in &table.beam2 {
        st = xpm(&st, q2, sel, p.theta)?;
    }
    st = qubus_phase(&st, q1, -p.theta)?;
    st = qubus_phase(&st, q2, -p.theta)?;
    st = qubus_bs(&st, q1, q2)?;
    Ok((st, q1, q2))
}

fn read_qubus(s: &HybridState, mode: QubusId, p: &GateParams) -> Result<Vec<Measured>> {
    let records = match &p.readout {
        Readout::Ideal => fock_outcomes(s, mode, p.min_probability)?,
        Readout::Qnd { config, mode: qm } => qnd_outcomes(s, mode, config, *qm, p.min_probability)?,
    };
    records
        .into_iter()
        .map(|r| {
            let (label, class) = match r.kind {
                MeasurementKind::Fock { n } => (format!("n={n}"), FockClass::of(n)),
                MeasurementKind::Bin { k, n } => (format!("k={k},n={n}"), FockClass::of(k)),
                ref other => return Err(Error::precondition(format!("unexpected qubus record {other:?}"))),
            };
            Ok(Measured {
                label,
                pattern: OutcomePattern::Fock { class },
                probability: r.probability,
                state: r.collapsed,
            })
        })
        .collect()
}

/// Coupling block, readout of the first beam and feed-forward. The second
/// beam is removed from every outcome in which it factors out.
fn coupling_stage(
    s: &HybridState,
    table: &CouplingTable,
    plan: &FeedForwardPlan,
    p: &GateParams,
) -> Result<Vec<Outcome>> {
    let (st, q1, q2) = coupling_block(s, table, p)?;
    let tol = 1e-9 * (1.0 + p.alpha);
    read_qubus(&st, q1, p)?
        .into_iter()
        .map(|m| {
            let mut state = apply_all(&m.state, plan.ops_for(&m.pattern)?)?;
            if let Some((rest, _)) = state.split_off_qubus(q2, tol)? {
                state = rest.canonical();
            }
            Ok(Outcome { label: m.label, probability: m.probability, state })
        })
        .collect()
}

fn coupling_resources(table: &CouplingTable) -> Resources {
    Resources { xpm_couplings: table.couplings(), qubus_modes: 2, detections: 1, ..Default::default() }
}

/// Picks the reference outcome, scores every outcome against it and builds
/// the report.
pub(crate) fn conclude<T>(
    gate: &str,
    outcomes: Vec<Outcome>,
    resources: Resources,
    plan: FeedForwardPlan,
    p: &GateParams,
    out: T,
) -> Result<GateRun<T>> {
    let reference = outcomes
        .iter()
        .min_by(|a, b| {
            let qa = a.state.registry().qubus_modes().len();
            let qb = b.state.registry().qubus_modes().len();
            qa.cmp(&qb).then(b.probability.total_cmp(&a.probability))
        })
        .ok_or(Error::ImpossibleOutcome(0.0))?
        .state
        .clone();
    let mut summaries = Vec::with_capacity(outcomes.len());
    let (mut success, mut mean) = (0.0, 0.0);
    for o in &outcomes {
        let f = o.state.reduced_fidelity(&reference)?;
        if f >= 1.0 - p.fidelity_tol {
            success += o.probability;
        }
        mean += o.probability * f;
        summaries.push(OutcomeSummary { label: o.label.clone(), probability: o.probability, fidelity: f });
    }
    Ok(GateRun {
        state: reference,
        report: GateReport {
            gate: gate.to_string(),
            success_probability: success,
            mean_fidelity: mean,
            outcomes: summaries,
            resources,
            feed_forward: Some(plan),
            stages: Vec::new(),
        },
        outcomes,
        out,
    })
}

/// Runs a coupling-and-readout gate end to end.
fn run_coupling_gate<T>(
    gate: &str,
    s: &HybridState,
    table: &CouplingTable,
    plan: FeedForwardPlan,
    extra: Resources,
    p: &GateParams,
    out: T,
) -> Result<GateRun<T>> {
    let outcomes = coupling_stage(s, table, &plan, p)?;
    let mut res = coupling_resources(table);
    res += extra;
    conclude(gate, outcomes, res, plan, p, out)
}

/// Sequential composition of gates and plain elements into one report.
pub struct Chain {
    pub state: HybridState,
    stages: Vec<GateReport>,
    extra: Resources,
}

impl Chain {
    pub fn new(state: HybridState) -> Self {
        Chain { state, stages: Vec::new(), extra: Resources::default() }
    }

    /// Runs a gate on the current state and records its report.
    pub fn gate<T, F>(&mut self, f: F) -> Result<T>
    where
        F: FnOnce(&HybridState) -> Result<GateRun<T>>,
    {
        let run = f(&self.state)?;
        self.state = run.state;
        self.stages.push(run.report);
        Ok(run.out)
    }

    /// Replaces the state by a deterministic transformation of it.
    pub fn apply<F>(&mut self, f: F) -> Result<()>
    where
        F: FnOnce(&HybridState) -> Result<HybridState>,
    {
        self.state = f(&self.state)?;
        Ok(())
    }

    pub fn ops(&mut self, ops: &[ElementOp]) -> Result<()> {
        self.state = apply_all(&self.state, ops)?;
        Ok(())
    }

    pub fn add(&mut self, r: Resources) {
        self.extra += r;
    }

    pub fn finish<T>(self, gate: &str, out: T) -> GateRun<T> {
        let mut resources = self.extra;
        let (mut success, mut mean) = (1.0, 1.0);
        for s in &self.stages {
            resources += s.resources;
            success *= s.success_probability;
            mean *= s.mean_fidelity;
        }
        GateRun {
            state: self.state,
            report: GateReport {
                gate: gate.to_string(),
                success_probability: success,
                mean_fidelity: mean,
                outcomes: Vec::new(),
                resources,
                feed_forward: None,
                stages: self.stages,
            },
            outcomes: Vec::new(),
            out,
        }
    }
}

/// The single path `photon` occupies.
pub fn single_path(s: &HybridState, photon: PhotonId) -> Result<String> {
    let paths = s.occupied_paths(photon)?;
    match paths.as_slice() {
        [p] => Ok(p.clone()),
        [] => Err(Error::precondition(format!("photon {photon} carries no amplitude"))),
        _ => Err(Error::MultiPath(photon)),
    }
}

/// A path name derived from `stem` that is not yet registered.
pub fn fresh_name(s: &HybridState, stem: &str) -> String {
    let mut name = stem.to_string();
    while s.registry().path(&name).is_some() {
        name.push('\'');
    }
    name
}

/// Adds `photon` in `|+⟩` on a fresh path.
pub fn prepare_plus(s: &HybridState, photon: PhotonId) -> Result<(HybridState, String)> {
    let path = fresh_name(s, &format!("a{}", photon.0));
    let st = s.tensor(&HybridState::plus(photon, &path)?)?;
    Ok((st, path))
}

/// Checks that `photon` is a single-path `|+⟩` in product with the rest and
/// returns its path.
pub fn require_plus(s: &HybridState, photon: PhotonId) -> Result<String> {
    let path = single_path(s, photon)?;
    let (_, single) =
        s.factor_out_photon(photon, 1e-9).map_err(|_| Error::precondition(format!("ancilla {photon} is entangled")))?;
    let amps = single.polarization_amplitudes(&[photon])?;
    let overlap = (amps[0] + amps[1]).norm_sqr() / 2.0;
    if overlap < 1.0 - 1e-9 {
        return Err(Error::precondition(format!("ancilla {photon} is not in |+⟩")));
    }
    Ok(path)
}

fn pi_phase_on_paths(photon: PhotonId, paths: &[String]) -> Vec<ElementOp> {
    paths
        .iter()
        .map(|p| ElementOp::Phase {
            selector: crate::elements::Selector::path(photon, p.clone()),
            phi: std::f64::consts::PI,
        })
        .collect()
}

fn switch_pairs(photon: PhotonId, first: &[String], second: &[String]) -> Vec<ElementOp> {
    first.iter().zip(second).map(|(a, b)| ElementOp::PathSwitch { photon, a: a.clone(), b: b.clone() }).collect()
}
