use serde::{Deserialize, Serialize};

use super::tables::{self, ControlRails};
use super::{
    conclude, coupling_resources, coupling_stage, fresh_name, pi_phase_on_paths, run_coupling_gate, single_path,
    switch_pairs, FeedForwardPlan, GateParams, GateRun, Outcome, OutcomePattern, Resources,
};
use crate::detection::qnd_presence;
use crate::elements::{apply_all, pbs, pbs_pm, pbs_pm_merge, photon_bs, wave_plate_x, ElementOp};
use crate::error::{Error, Result};
use crate::state::{HybridState, PhotonId};

/// Paths produced by a parity gate: the odd-parity component of photon 2
/// stays on `odd`, the even-parity component moves to `even`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityOut {
    pub odd: String,
    pub even: String,
}

/// Target rails after a C-path-family gate: the target sits on `first[j]`
/// when the control selects `H` and on `second[j]` when it selects `V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CPathOut {
    pub first: Vec<String>,
    pub second: Vec<String>,
}

fn require_power_of_two(n: usize, what: &str) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::invalid(format!("{what} must be a power of two, got {n}")));
    }
    Ok(())
}

/// Parity gate on two single-path polarization qubits.
///
/// Photon 2 is split by a beam splitter; after the readout the even-parity
/// part of photon 2 is on the new path and the odd-parity part on its
/// original path.
pub fn parity_gate(s: &HybridState, p1: PhotonId, p2: PhotonId, p: &GateParams) -> Result<GateRun<ParityOut>> {
    single_path(s, p1)?;
    let odd = single_path(s, p2)?;
    let even = fresh_name(s, &odd);
    let split = photon_bs(s, p2, &odd, &even)?;
    let table = tables::parity(p1, p2, &odd, &even);
    let switch = ElementOp::PathSwitch { photon: p2, a: odd.clone(), b: even.clone() };
    let plan =
        FeedForwardPlan::fock(vec![ElementOp::WavePlateZ { photon: p1, path: None }, switch.clone()], vec![switch]);
    run_coupling_gate("parity", &split, &table, plan, Resources::default(), p, ParityOut { odd, even })
}

/// Splits each target path with a beam splitter and returns the new second
/// members.
fn split_target(s: &HybridState, target: PhotonId, first: &[String]) -> Result<(HybridState, Vec<String>)> {
    let mut st = s.clone();
    let mut second = Vec::with_capacity(first.len());
    for f in first {
        let name = fresh_name(&st, f);
        st = photon_bs(&st, target, f, &name)?;
        second.push(name);
    }
    Ok((st, second))
}

fn split_plan(target: PhotonId, first: &[String], second: &[String]) -> FeedForwardPlan {
    let mut odd = pi_phase_on_paths(target, first);
    odd.extend(switch_pairs(target, first, second));
    FeedForwardPlan::fock(odd, switch_pairs(target, first, second))
}

fn check_target_paths(s: &HybridState, target: PhotonId, paths: &[String]) -> Result<()> {
    require_power_of_two(paths.len(), "number of target paths")?;
    for occ in s.occupied_paths(target)? {
        if !paths.contains(&occ) {
            return Err(Error::precondition(format!(
                "target {target} occupies `{occ}`, which is not among the listed paths"
            )));
        }
    }
    Ok(())
}

fn cpath_resources() -> Resources {
    Resources { cpath_gates: 1, ..Default::default() }
}

/// C-path gate: routes a single-path target to its original path when the
/// control is `H` and to a new path when it is `V`.
pub fn c_path(s: &HybridState, control: PhotonId, target: PhotonId, p: &GateParams) -> Result<GateRun<CPathOut>> {
    single_path(s, control)?;
    let first = vec![single_path(s, target)?];
    let (split, second) = split_target(s, target, &first)?;
    let table = tables::c_path(control, target, &first, &second);
    let plan = split_plan(target, &first, &second);
    run_coupling_gate("c-path", &split, &table, plan, cpath_resources(), p, CPathOut { first, second })
}

/// C-path-2 gate: like [`c_path`] for a target spread over `paths`; the path
/// count doubles.
pub fn c_path2(
    s: &HybridState,
    control: PhotonId,
    target: PhotonId,
    paths: &[String],
    p: &GateParams,
) -> Result<GateRun<CPathOut>> {
    single_path(s, control)?;
    check_target_paths(s, target, paths)?;
    let first = paths.to_vec();
    let (split, second) = split_target(s, target, &first)?;
    let table = tables::c_path(control, target, &first, &second);
    let plan = split_plan(target, &first, &second);
    run_coupling_gate("c-path-2", &split, &table, plan, cpath_resources(), p, CPathOut { first, second })
}

/// Coupling layouts of the C-path-3 gate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CPath3Layout {
    /// PBS on the control's first rail, σ_x on its `V` output; six couplings
    /// for a single-path target.
    #[default]
    SplitRail,
    /// The control's first rail is coupled as one spatial mode; five
    /// couplings.
    WholeRail,
}

/// C-path-3 gate: the control photon is spread over `rails = (first,
/// second)`; the target is sent to its second members only when the control
/// is `V` on `second`.
pub fn c_path3(
    s: &HybridState,
    control: PhotonId,
    rails: (&str, &str),
    layout: CPath3Layout,
    target: PhotonId,
    target_paths: &[String],
    p: &GateParams,
) -> Result<GateRun<CPathOut>> {
    let (cf, cs) = rails;
    for occ in s.occupied_paths(control)? {
        if occ != cf && occ != cs {
            return Err(Error::precondition(format!(
                "control {control} occupies `{occ}` outside its rails `{cf}`/`{cs}`"
            )));
        }
    }
    check_target_paths(s, target, target_paths)?;
    let first = target_paths.to_vec();
    let (mut st, second) = split_target(s, target, &first)?;
    let (rails_desc, undo) = match layout {
        CPath3Layout::SplitRail => {
            let h = fresh_name(&st, &format!("{cf}h"));
            let v = fresh_name(&st, &format!("{cf}v"));
            st = pbs(&st, control, cf, &h, &v)?;
            st = wave_plate_x(&st, control, Some(&v))?;
            let undo = vec![
                ElementOp::WavePlateX { photon: control, path: Some(v.clone()) },
                ElementOp::PbsMerge { photon: control, in_h: h.clone(), in_v: v.clone(), output: cf.to_string() },
            ];
            (ControlRails::Split { h, v, second: cs.to_string() }, undo)
        }
        CPath3Layout::WholeRail => (ControlRails::Whole { first: cf.to_string(), second: cs.to_string() }, Vec::new()),
    };
    let table = tables::c_path3(control, &rails_desc, target, &first, &second);
    let plan = split_plan(target, &first, &second);
    let outcomes = coupling_stage(&st, &table, &plan, p)?
        .into_iter()
        .map(|o| Ok(Outcome { state: apply_all(&o.state, &undo)?, ..o }))
        .collect::<Result<Vec<_>>>()?;
    let mut res = coupling_resources(&table);
    res += cpath_resources();
    conclude("c-path-3", outcomes, res, plan, p, CPathOut { first, second })
}

/// Disentangler: projects the single-path `control` onto `|±⟩` with a QND
/// presence test and restores `|+⟩`. `v_group` are the target paths that
/// carry the control's `V` component.
pub fn disentangler(
    s: &HybridState,
    control: PhotonId,
    target: PhotonId,
    v_group: &[String],
    p: &GateParams,
) -> Result<GateRun<()>> {
    p.validate()?;
    let c = single_path(s, control)?;
    let plus = fresh_name(s, &format!("{c}+"));
    let minus = fresh_name(s, &format!("{c}-"));
    let st = pbs_pm(s, control, &c, &plus, &minus)?;
    let mut minus_ops = vec![ElementOp::WavePlateZ { photon: control, path: None }];
    minus_ops.extend(pi_phase_on_paths(target, v_group));
    let plan = FeedForwardPlan::new()
        .rule(OutcomePattern::Presence { path: plus.clone(), present: true }, Vec::new())
        .rule(OutcomePattern::Presence { path: plus.clone(), present: false }, minus_ops);
    let mut outcomes = Vec::new();
    for rec in qnd_presence(&st, control, &[&plus])? {
        if rec.probability <= p.min_probability {
            continue;
        }
        let present = matches!(rec.kind, crate::detection::MeasurementKind::Presence { present: true, .. });
        let merged = pbs_pm_merge(&rec.collapsed, control, &plus, &minus, &c)?;
        let pattern = OutcomePattern::Presence { path: plus.clone(), present };
        outcomes.push(Outcome {
            label: if present { "+".into() } else { "-".into() },
            probability: rec.probability,
            state: apply_all(&merged, plan.ops_for(&pattern)?)?,
        });
    }
    let res = Resources { detections: 1, disentanglers: 1, ..Default::default() };
    conclude("disentangler", outcomes, res, plan, p, ())
}

fn entangler_resources() -> Resources {
    Resources { entanglers: 1, ..Default::default() }
}

fn flip_plan(photon: PhotonId) -> FeedForwardPlan {
    let x = ElementOp::WavePlateX { photon, path: None };
    let z = ElementOp::WavePlateZ { photon, path: None };
    FeedForwardPlan::fock(vec![x.clone(), z], vec![x])
}

fn merging_entangler(
    name: &str,
    s: &HybridState,
    ancilla: PhotonId,
    x: PhotonId,
    paths: &[String],
    p: &GateParams,
) -> Result<GateRun<()>> {
    single_path(s, ancilla)?;
    check_target_paths(s, x, paths)?;
    let table = tables::merging_entangler(ancilla, x, paths);
    run_coupling_gate(name, s, &table, flip_plan(ancilla), entangler_resources(), p, ())
}

/// Entangler-1 (the Entangler of the Merging gate): the ancilla's
/// polarization is made equal to that of `x`, which occupies two paths.
pub fn entangler1(
    s: &HybridState,
    ancilla: PhotonId,
    x: PhotonId,
    paths: &[String],
    p: &GateParams,
) -> Result<GateRun<()>> {
    if paths.len() != 2 {
        return Err(Error::invalid(format!("entangler-1 needs 2 paths, got {}", paths.len())));
    }
    merging_entangler("entangler-1", s, ancilla, x, paths, p)
}

/// Entangler-4: Entangler-1 with `x` spread over `2^m` paths.
pub fn entangler4(
    s: &HybridState,
    ancilla: PhotonId,
    x: PhotonId,
    paths: &[String],
    p: &GateParams,
) -> Result<GateRun<()>> {
    if paths.len() < 2 {
        return Err(Error::invalid("entangler-4 needs at least 2 paths"));
    }
    merging_entangler("entangler-4", s, ancilla, x, paths, p)
}

fn group_entangler(
    name: &str,
    s: &HybridState,
    control: PhotonId,
    x: PhotonId,
    h_group: &[String],
    v_group: &[String],
    p: &GateParams,
) -> Result<GateRun<()>> {
    single_path(s, control)?;
    let mut all = h_group.to_vec();
    all.extend_from_slice(v_group);
    check_target_paths(s, x, &all)?;
    let table = tables::group_entangler(control, x, h_group, v_group);
    run_coupling_gate(name, s, &table, flip_plan(control), entangler_resources(), p, ())
}

/// Entangler-2: the control (in `|+⟩`) ends up `H` when `x` is on `h_path`
/// and `V` when it is on `v_path`.
pub fn entangler2(
    s: &HybridState,
    control: PhotonId,
    x: PhotonId,
    h_path: &str,
    v_path: &str,
    p: &GateParams,
) -> Result<GateRun<()>> {
    group_entangler("entangler-2", s, control, x, &[h_path.to_string()], &[v_path.to_string()], p)
}

/// Entangler-3: Entangler-2 with each group made of several paths.
pub fn entangler3(
    s: &HybridState,
    control: PhotonId,
    x: PhotonId,
    h_group: &[String],
    v_group: &[String],
    p: &GateParams,
) -> Result<GateRun<()>> {
    if h_group.len() != v_group.len() || h_group.is_empty() {
        return Err(Error::invalid("entangler-3 needs two non-empty groups of equal size"));
    }
    group_entangler("entangler-3", s, control, x, h_group, v_group, p)
}
