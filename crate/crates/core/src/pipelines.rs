//! End-to-end procedures: multi-photon → single-photon-qudit transforms, their
//! inverse, and the logic gates built on them.
//!
//! Basis order is lexicographic with `H < V` and the first photon most
//! significant. A qudit photon on paths `P` carries amplitude index
//! `2·j + pol` on path `P[j]`.

use serde::{Deserialize, Serialize};

use crate::detection::{bell_measure, BellOutcome, MeasurementKind};
use crate::elements::{apply_all, pbs, pbs_merge, wave_plate_x, ElementOp, Selector};
use crate::error::{Error, Result};
use crate::gates::{
    c_path, c_path2, c_path3, conclude, disentangler, entangler2, entangler3, fresh_name, merging, merging_n,
    prepare_plus, require_plus, single_path, CPath3Layout, CPathOut, Chain, FeedForwardPlan, GateParams, GateRun,
    Outcome, OutcomePattern, Resources,
};
use crate::state::{HybridState, PhotonId, Pol, C64};
use crate::synthesis::{mesh_apply, reck_decompose, require_unitary, CMatrix};

/// Largest number of photons folded into one qudit.
pub const MAX_QUDIT_PHOTONS: usize = 4;

/// A single-photon qudit together with the `|+⟩` companions left behind by
/// the transform. Companion `i` holds bit `i` (most significant first) of the
/// path index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Qudit {
    pub photon: PhotonId,
    pub paths: Vec<String>,
    pub companions: Vec<PhotonId>,
}

fn check_photons(s: &HybridState, photons: &[PhotonId], what: &str) -> Result<()> {
    if photons.len() < 2 {
        return Err(Error::invalid(format!("{what} needs at least 2 photons, got {}", photons.len())));
    }
    if photons.len() > MAX_QUDIT_PHOTONS {
        return Err(Error::invalid(format!("{what} is limited to {MAX_QUDIT_PHOTONS} photons, got {}", photons.len())));
    }
    check_distinct(photons)?;
    for &ph in photons {
        single_path(s, ph)?;
    }
    Ok(())
}

fn check_distinct(photons: &[PhotonId]) -> Result<()> {
    for (i, a) in photons.iter().enumerate() {
        if photons[i + 1..].contains(a) {
            return Err(Error::invalid(format!("photon {a} listed twice")));
        }
    }
    Ok(())
}

fn joined(out: CPathOut) -> Vec<String> {
    let mut paths = out.first;
    paths.extend(out.second);
    paths
}

/// Circuit-based transform: photons `1..n−1` end in `|+⟩` and photon `n`
/// carries all `2ⁿ` coefficients over `2ⁿ⁻¹` paths.
pub fn to_qudit_circuit(s: &HybridState, photons: &[PhotonId], p: &GateParams) -> Result<GateRun<Qudit>> {
    check_photons(s, photons, "to-qudit")?;
    let n = photons.len();
    let last = photons[n - 1];
    let mut chain = Chain::new(s.clone());
    let mut paths = vec![single_path(s, last)?];
    for (step, &ctrl) in photons[..n - 1].iter().rev().enumerate() {
        let out = if step == 0 {
            chain.gate(|st| c_path(st, ctrl, last, p))?
        } else {
            chain.gate(|st| c_path2(st, ctrl, last, &paths, p))?
        };
        chain.gate(|st| disentangler(st, ctrl, last, &out.second, p))?;
        paths = joined(out);
    }
    let q = Qudit { photon: last, paths, companions: photons[..n - 1].to_vec() };
    Ok(chain.finish("to-qudit", q))
}

/// Ancilla inventory of the teleportation-based transform: a `|Φ⁺⟩` pair
/// and one `|+⟩` photon per input photon but the last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeleportAncillas {
    pub bell: (PhotonId, PhotonId),
    pub plus: Vec<PhotonId>,
}

/// Adds the ancillas needed to teleport `n` photons into a qudit.
pub fn teleport_ancillas(s: &HybridState, n: usize) -> Result<(HybridState, TeleportAncillas)> {
    if n < 2 {
        return Err(Error::invalid("teleportation needs at least 2 input photons"));
    }
    let b1 = s.registry().next_photon_id();
    let b2 = PhotonId(b1.0 + 1);
    let (n1, n2) = (fresh_name(s, &format!("b{}", b1.0)), fresh_name(s, &format!("b{}", b2.0)));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let pair = HybridState::polarization_state(&[(b1, &n1), (b2, &n2)], &[C64::new(h, 0.0), z, z, C64::new(h, 0.0)])?;
    let mut st = s.tensor(&pair)?;
    let mut plus = Vec::with_capacity(n - 1);
    for _ in 0..n - 1 {
        let id = st.registry().next_photon_id();
        st = prepare_plus(&st, id)?.0;
        plus.push(id);
    }
    Ok((st, TeleportAncillas { bell: (b1, b2), plus }))
}

fn check_bell_pair(s: &HybridState, a: PhotonId, b: PhotonId) -> Result<()> {
    let phi_plus = bell_measure(s, a, b)?
        .into_iter()
        .find(|r| matches!(r.kind, MeasurementKind::Bell { outcome: BellOutcome::PhiPlus }))
        .map_or(0.0, |r| r.probability);
    if phi_plus < 1.0 - 1e-9 {
        return Err(Error::precondition(format!("photons {a} and {b} are not a |Φ⁺⟩ pair")));
    }
    Ok(())
}

/// Pauli corrections on one bit of a path index: `X` switches the paths that
/// differ in the bit, `Z` adds `π` on the paths where it is 1.
fn path_bit_ops(photon: PhotonId, paths: &[String], bit: usize, x: bool, z: bool) -> Vec<ElementOp> {
    let mut ops = Vec::new();
    let mask = 1 << bit;
    if x {
        for (j, a) in paths.iter().enumerate() {
            if j & mask == 0 {
                ops.push(ElementOp::PathSwitch { photon, a: a.clone(), b: paths[j | mask].clone() });
            }
        }
    }
    if z {
        for (j, a) in paths.iter().enumerate() {
            if j & mask != 0 {
                ops.push(ElementOp::Phase { selector: Selector::path(photon, a.clone()), phi: std::f64::consts::PI });
            }
        }
    }
    ops
}

fn pauli_flags(o: BellOutcome) -> (bool, bool) {
    match o {
        BellOutcome::PhiPlus => (false, false),
        BellOutcome::PhiMinus => (false, true),
        BellOutcome::PsiPlus => (true, false),
        BellOutcome::PsiMinus => (true, true),
    }
}

fn bell_symbol(o: BellOutcome) -> &'static str {
    match o {
        BellOutcome::PhiPlus => "Φ+",
        BellOutcome::PhiMinus => "Φ-",
        BellOutcome::PsiPlus => "Ψ+",
        BellOutcome::PsiMinus => "Ψ-",
    }
}

/// Teleportation-based transform. The first Bell photon is routed by the
/// `|+⟩` ancillas onto `2ⁿ⁻¹` paths; Bell measurements on every
/// (input, ancilla) pair and Pauli feed-forward leave it carrying the input
/// coefficients. All `4ⁿ` outcome combinations are enumerated.
pub fn to_qudit_teleport(
    s: &HybridState,
    photons: &[PhotonId],
    anc: &TeleportAncillas,
    p: &GateParams,
) -> Result<GateRun<Qudit>> {
    check_photons(s, photons, "teleport")?;
    let n = photons.len();
    if anc.plus.len() != n - 1 {
        return Err(Error::invalid(format!(
            "teleporting {n} photons needs {} |+⟩ ancillas, got {}",
            n - 1,
            anc.plus.len()
        )));
    }
    let (b1, b2) = anc.bell;
    let mut all = photons.to_vec();
    all.extend([b1, b2]);
    all.extend(&anc.plus);
    check_distinct(&all)?;
    check_bell_pair(s, b1, b2)?;
    for &a in &anc.plus {
        require_plus(s, a)?;
    }

    let mut chain = Chain::new(s.clone());
    chain.add(Resources { ancillas: n + 1, ..Default::default() });
    let mut paths = vec![single_path(s, b1)?];
    for (step, &ctrl) in anc.plus.iter().rev().enumerate() {
        let out = if step == 0 {
            chain.gate(|st| c_path(st, ctrl, b1, p))?
        } else {
            chain.gate(|st| c_path2(st, ctrl, b1, &paths, p))?
        };
        paths = joined(out);
    }

    let mut plan = FeedForwardPlan::new();
    for i in 0..n - 1 {
        let bit = n - 2 - i;
        for o in BellOutcome::ALL {
            let (x, z) = pauli_flags(o);
            plan = plan.rule(OutcomePattern::Bell { pair: i, outcome: o }, path_bit_ops(b1, &paths, bit, x, z));
        }
    }
    for o in BellOutcome::ALL {
        let (x, z) = pauli_flags(o);
        let mut ops = Vec::new();
        if x {
            ops.push(ElementOp::WavePlateX { photon: b1, path: None });
        }
        if z {
            ops.push(ElementOp::WavePlateZ { photon: b1, path: None });
        }
        plan = plan.rule(OutcomePattern::Bell { pair: n - 1, outcome: o }, ops);
    }

    let mut pairs: Vec<(PhotonId, PhotonId)> = photons[..n - 1].iter().copied().zip(anc.plus.iter().copied()).collect();
    pairs.push((photons[n - 1], b2));
    let mut leaves = vec![Outcome { label: String::new(), probability: 1.0, state: chain.state.clone() }];
    for (i, &(a, b)) in pairs.iter().enumerate() {
        let mut next = Vec::with_capacity(leaves.len() * 4);
        for leaf in &leaves {
            for rec in bell_measure(&leaf.state, a, b)? {
                let MeasurementKind::Bell { outcome } = rec.kind else {
                    return Err(Error::precondition("unexpected Bell record"));
                };
                let probability = leaf.probability * rec.probability;
                if probability <= p.min_probability {
                    continue;
                }
                let ops = plan.ops_for(&OutcomePattern::Bell { pair: i, outcome })?;
                let sep = if leaf.label.is_empty() { "" } else { "," };
                next.push(Outcome {
                    label: format!("{}{sep}{}", leaf.label, bell_symbol(outcome)),
                    probability,
                    state: apply_all(&rec.collapsed, ops)?,
                });
            }
        }
        leaves = next;
    }
    let res = Resources { detections: n, ..Default::default() };
    let readout = conclude("bell-readout", leaves, res, plan, p, ())?;
    chain.gate(|_| Ok(readout))?;
    Ok(chain.finish("teleport", Qudit { photon: b1, paths, companions: Vec::new() }))
}

/// Splits `paths` by bit `bit` of the path index.
fn bit_groups(paths: &[String], bit: usize) -> (Vec<String>, Vec<String>) {
    let (mut h, mut v) = (Vec::new(), Vec::new());
    for (j, path) in paths.iter().enumerate() {
        if j >> bit & 1 == 0 {
            h.push(path.clone());
        } else {
            v.push(path.clone());
        }
    }
    (h, v)
}

/// Copies every companion's bit (the low bits, most significant companion
/// first) of the path index into its polarization.
fn entangle_companions(
    chain: &mut Chain,
    x: PhotonId,
    paths: &[String],
    companions: &[PhotonId],
    p: &GateParams,
) -> Result<()> {
    let k = companions.len();
    for (i, &c) in companions.iter().enumerate() {
        let (h, v) = bit_groups(paths, k - 1 - i);
        if h.len() == 1 {
            chain.gate(|st| entangler2(st, c, x, &h[0], &v[0], p))?;
        } else {
            chain.gate(|st| entangler3(st, c, x, &h, &v, p))?;
        }
    }
    Ok(())
}

/// Merges `x` spread over `paths` into a fresh ancilla and gives the carrier
/// the id of `x`.
fn merge_into(
    chain: &mut Chain,
    x: PhotonId,
    paths: &[String],
    indicators: &[Selector],
    interference: Option<&CMatrix>,
    recycled: bool,
    p: &GateParams,
) -> Result<()> {
    let ancilla = if recycled {
        let id = chain.state.registry().next_photon_id();
        chain.apply(|st| Ok(prepare_plus(st, id)?.0))?;
        Some(id)
    } else {
        None
    };
    let out = if paths.len() == 2 && interference.is_none() {
        chain.gate(|st| merging(st, x, paths, ancilla, indicators[0].clone(), p))?
    } else {
        chain.gate(|st| merging_n(st, x, paths, ancilla, indicators, interference, p))?
    };
    chain.apply(|st| st.relabel_photon(out.carrier, x))
}

/// Inverse transform: the companions' polarizations are re-entangled with
/// the path index and the qudit is merged back into a single-path photon,
/// which keeps the qudit's photon id.
pub fn from_qudit(
    s: &HybridState,
    q: &Qudit,
    interference: Option<&CMatrix>,
    p: &GateParams,
) -> Result<GateRun<Vec<PhotonId>>> {
    let k = q.companions.len();
    if k == 0 || q.paths.len() != 1 << k {
        return Err(Error::invalid(format!("{} companions cannot address {} paths", k, q.paths.len())));
    }
    check_distinct(&[q.companions.clone(), vec![q.photon]].concat())?;
    for &c in &q.companions {
        require_plus(s, c)?;
    }
    let mut chain = Chain::new(s.clone());
    entangle_companions(&mut chain, q.photon, &q.paths, &q.companions, p)?;
    let indicators: Vec<Selector> = q.companions.iter().map(|&c| Selector::pol(c, Pol::V)).collect();
    merge_into(&mut chain, q.photon, &q.paths, &indicators, interference, false, p)?;
    let mut order = q.companions.clone();
    order.push(q.photon);
    Ok(chain.finish("from-qudit", order))
}

/// Applies `u` to the `2·|paths|` (path, polarization) amplitudes of
/// `photon`: each path is split by a PBS, the `V` rail flipped to `H`, the
/// mesh run across the rails, and the split undone.
pub fn apply_qudit_unitary(s: &HybridState, photon: PhotonId, paths: &[String], u: &CMatrix) -> Result<HybridState> {
    if u.nrows() != 2 * paths.len() {
        return Err(Error::invalid(format!("{}×{0} unitary does not act on {} rails", u.nrows(), 2 * paths.len())));
    }
    let mesh = reck_decompose(u)?;
    let mut st = s.clone();
    let mut rails = Vec::with_capacity(2 * paths.len());
    for path in paths {
        let h = fresh_name(&st, &format!("{path}h"));
        let v = fresh_name(&st, &format!("{path}v"));
        st = pbs(&st, photon, path, &h, &v)?;
        st = wave_plate_x(&st, photon, Some(&v))?;
        rails.push(h);
        rails.push(v);
    }
    st = mesh_apply(&st, photon, &rails, &mesh)?;
    for (path, pair) in paths.iter().zip(rails.chunks(2)) {
        st = wave_plate_x(&st, photon, Some(&pair[1]))?;
        st = pbs_merge(&st, photon, &pair[0], &pair[1], path)?;
    }
    Ok(st)
}

fn require_dim(u: &CMatrix, n: usize) -> Result<()> {
    require_unitary(u)?;
    if u.nrows() != 1 << n {
        return Err(Error::invalid(format!("{}×{0} matrix cannot act on {n} qubits", u.nrows())));
    }
    Ok(())
}

/// `U(2ⁿ)` on `n ≤ 4` polarization qubits via the qudit transform, a mesh on
/// the qudit rails and the inverse transform. `interference` replaces the
/// QFT of the final Merging-n gate.
pub fn multi_qubit_gate_with(
    s: &HybridState,
    photons: &[PhotonId],
    u: &CMatrix,
    interference: Option<&CMatrix>,
    p: &GateParams,
) -> Result<GateRun<()>> {
    check_photons(s, photons, "multi-qubit gate")?;
    require_dim(u, photons.len())?;
    let mut chain = Chain::new(s.clone());
    let q = chain.gate(|st| to_qudit_circuit(st, photons, p))?;
    chain.apply(|st| apply_qudit_unitary(st, q.photon, &q.paths, u))?;
    chain.add(Resources { lomis: 1, ..Default::default() });
    chain.gate(|st| from_qudit(st, &q, interference, p))?;
    let name = if photons.len() == 2 { "two-qubit" } else { "multi-qubit" };
    Ok(chain.finish(name, ()))
}

pub fn multi_qubit_gate(s: &HybridState, photons: &[PhotonId], u: &CMatrix, p: &GateParams) -> Result<GateRun<()>> {
    multi_qubit_gate_with(s, photons, u, None, p)
}

pub fn two_qubit_gate(s: &HybridState, p1: PhotonId, p2: PhotonId, u: &CMatrix, p: &GateParams) -> Result<GateRun<()>> {
    if u.nrows() != 4 {
        return Err(Error::invalid(format!("two-qubit gate needs a 4×4 matrix, got {}×{0}", u.nrows())));
    }
    multi_qubit_gate(s, &[p1, p2], u, p)
}

/// Routes `photons[1..]` so that the last of them sits on its second rail
/// exactly when every photon is `V`. Returns the rails of `photons[1..]`.
fn control_chain(
    chain: &mut Chain,
    photons: &[PhotonId],
    layout: CPath3Layout,
    p: &GateParams,
) -> Result<Vec<(String, String)>> {
    let mut rails: Vec<(String, String)> = Vec::new();
    for w in photons.windows(2) {
        let (ctrl, target) = (w[0], w[1]);
        let out = match rails.last() {
            None => chain.gate(|st| c_path(st, ctrl, target, p))?,
            Some((f, sec)) => {
                let tp = vec![single_path(&chain.state, target)?];
                chain.gate(|st| c_path3(st, ctrl, (f, sec), layout, target, &tp, p))?
            }
        };
        rails.push((out.first[0].clone(), out.second[0].clone()));
    }
    Ok(rails)
}

/// Selector occupied exactly when every control is `V`.
fn all_v_indicator(controls: &[PhotonId], rails: &[(String, String)]) -> Selector {
    match rails.last() {
        None => Selector::pol(controls[0], Pol::V),
        Some((_, second)) => Selector::slot(controls[controls.len() - 1], second.clone(), Pol::V),
    }
}

/// Merges the controls `2..n` back to single paths, last first, reusing one
/// recycled ancilla.
fn unwind_controls(chain: &mut Chain, controls: &[PhotonId], rails: &[(String, String)], p: &GateParams) -> Result<()> {
    for i in (1..controls.len()).rev() {
        let (f, sec) = &rails[i - 1];
        let indicator = all_v_indicator(&controls[..i], &rails[..i - 1]);
        merge_into(chain, controls[i], &[f.clone(), sec.clone()], &[indicator], None, true, p)?;
    }
    Ok(())
}

fn check_controls(s: &HybridState, controls: &[PhotonId], targets: &[PhotonId]) -> Result<()> {
    if controls.is_empty() || targets.is_empty() {
        return Err(Error::invalid("controlled gate needs at least one control and one target"));
    }
    check_distinct(&[controls, targets].concat())?;
    for &ph in controls.iter().chain(targets) {
        single_path(s, ph)?;
    }
    Ok(())
}

fn to_pol_matrix(u: &CMatrix) -> Result<[[C64; 2]; 2]> {
    require_dim(u, 1)?;
    Ok([[u[(0, 0)], u[(0, 1)]], [u[(1, 0)], u[(1, 1)]]])
}

/// `Cⁿ(U₁)`: `u1` acts on the target only when every control is `V`.
pub fn cn_u1(
    s: &HybridState,
    controls: &[PhotonId],
    target: PhotonId,
    u1: &CMatrix,
    layout: CPath3Layout,
    p: &GateParams,
) -> Result<GateRun<()>> {
    check_controls(s, controls, &[target])?;
    let m = to_pol_matrix(u1)?;
    let mut seq = controls.to_vec();
    seq.push(target);
    let mut chain = Chain::new(s.clone());
    let rails = control_chain(&mut chain, &seq, layout, p)?;
    let (tf, ts) = rails.last().cloned().expect("at least one link");
    chain.ops(&[ElementOp::PolUnitary { photon: target, path: Some(ts.clone()), matrix: m }])?;
    let indicator = all_v_indicator(controls, &rails[..rails.len() - 1]);
    merge_into(&mut chain, target, &[tf, ts], &[indicator], None, false, p)?;
    unwind_controls(&mut chain, controls, &rails[..rails.len() - 1], p)?;
    Ok(chain.finish("cn-u1", ()))
}

/// Toffoli-type gate: `σ_x` on the target when every control is `V`.
pub fn toffoli(
    s: &HybridState,
    controls: &[PhotonId],
    target: PhotonId,
    layout: CPath3Layout,
    p: &GateParams,
) -> Result<GateRun<()>> {
    let x = CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    );
    let mut run = cn_u1(s, controls, target, &x, layout, p)?;
    run.report.gate = "toffoli".into();
    Ok(run)
}

/// `Cⁿ(U_k)`: `uk` acts on the `k` targets when every control is `V`. The
/// targets are folded into one qudit, which the controls route as a whole.
pub fn cn_uk(
    s: &HybridState,
    controls: &[PhotonId],
    targets: &[PhotonId],
    uk: &CMatrix,
    layout: CPath3Layout,
    p: &GateParams,
) -> Result<GateRun<()>> {
    check_controls(s, controls, targets)?;
    let k = targets.len();
    if k == 1 {
        let mut run = cn_u1(s, controls, targets[0], uk, layout, p)?;
        run.report.gate = "cn-uk".into();
        return Ok(run);
    }
    if k > MAX_QUDIT_PHOTONS {
        return Err(Error::invalid(format!("at most {MAX_QUDIT_PHOTONS} targets, got {k}")));
    }
    require_dim(uk, k)?;
    let mut chain = Chain::new(s.clone());
    let q = chain.gate(|st| to_qudit_circuit(st, targets, p))?;
    let x = q.photon;
    let rails = control_chain(&mut chain, controls, layout, p)?;
    let routed = match rails.last() {
        None => chain.gate(|st| c_path2(st, controls[0], x, &q.paths, p))?,
        Some((f, sec)) => {
            let last = controls[controls.len() - 1];
            chain.gate(|st| c_path3(st, last, (f, sec), layout, x, &q.paths, p))?
        }
    };
    chain.apply(|st| apply_qudit_unitary(st, x, &routed.second, uk))?;
    chain.add(Resources { lomis: 1, ..Default::default() });
    let all = joined(routed);
    entangle_companions(&mut chain, x, &all, &q.companions, p)?;
    let mut indicators = vec![all_v_indicator(controls, &rails)];
    indicators.extend(q.companions.iter().map(|&c| Selector::pol(c, Pol::V)));
    merge_into(&mut chain, x, &all, &indicators, None, false, p)?;
    unwind_controls(&mut chain, controls, &rails, p)?;
    Ok(chain.finish("cn-uk", ()))
}
