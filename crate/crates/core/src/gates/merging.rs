use serde::{Deserialize, Serialize};

use super::{
    conclude, entangler1, entangler4, fresh_name, prepare_plus, require_plus, Chain, FeedForwardPlan, GateParams,
    GateRun, Outcome, OutcomePattern, Resources,
};
use crate::detection::{which_path, MeasurementKind};
use crate::elements::{apply_all, pbs_pm, photon_bs, ElementOp, Selector};
use crate::error::{Error, Result};
use crate::state::{HybridState, PhotonId, Pol, C64};
use crate::synthesis::{qft_matrix, reck_decompose, require_unitary, CMatrix};

/// Result of a merge: the qubit of the merged photon now lives on `carrier`
/// at `carrier_path`. `recycled` is the detected photon, split off the
/// output in a `|±⟩` state on one of the detector paths.
#[derive(Clone, Debug)]
pub struct MergeOut {
    pub carrier: PhotonId,
    pub carrier_path: String,
    pub recycled: HybridState,
}

/// Per-bit phase factors of a flat interference matrix:
/// `F[k][j] = F[k][0] · Π_{bit b of j} g[b][k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSeparation {
    /// `g[b][k]`, `b` counted from the least significant bit.
    pub factors: Vec<Vec<C64>>,
}

/// Checks that `f` has entries of modulus `1/√N` and phases that factor over
/// the bits of the column index.
pub fn phase_separation(f: &CMatrix) -> Result<PhaseSeparation> {
    require_unitary(f)?;
    let n = f.nrows();
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::invalid(format!("interference size {n} is not a power of two ≥ 2")));
    }
    let flat = 1.0 / (n as f64).sqrt();
    if f.iter().any(|z| (z.norm() - flat).abs() > 1e-9) {
        return Err(Error::invalid("interference matrix entries must all have modulus 1/√N"));
    }
    let bits = n.trailing_zeros() as usize;
    let factors: Vec<Vec<C64>> = (0..bits).map(|b| (0..n).map(|k| f[(k, 1 << b)] / f[(k, 0)]).collect()).collect();
    for k in 0..n {
        for j in 0..n {
            let mut pred = f[(k, 0)];
            for (b, g) in factors.iter().enumerate() {
                if j >> b & 1 == 1 {
                    pred *= g[k];
                }
            }
            if (pred - f[(k, j)]).norm() > 1e-9 {
                return Err(Error::invalid(format!("interference phases do not factor over index bits at ({k}, {j})")));
            }
        }
    }
    Ok(PhaseSeparation { factors })
}

fn beam_splitter_matrix() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)])
}

fn is_whole_photon_v(sel: &Selector) -> bool {
    sel.path.is_none() && sel.pol == Some(Pol::V)
}

/// Corrections after detecting the merged photon at output `k` of the
/// interference.
fn phase_corrections(sep: &PhaseSeparation, indicators: &[Selector], k: usize) -> Vec<ElementOp> {
    let bits = indicators.len();
    let mut ops = Vec::new();
    for (b, g) in sep.factors.iter().enumerate() {
        let g = g[k];
        if (g - C64::new(1.0, 0.0)).norm() < 1e-12 {
            continue;
        }
        let ind = &indicators[bits - 1 - b];
        if (g + C64::new(1.0, 0.0)).norm() < 1e-12 && is_whole_photon_v(ind) {
            ops.push(ElementOp::WavePlateZ { photon: ind.photon, path: None });
        } else {
            ops.push(ElementOp::Phase { selector: ind.clone(), phi: -g.arg() });
        }
    }
    ops
}

/// Merging gate: merges photon `x` on two paths into the ancilla.
/// `indicator` selects the branches in which `x` is on `paths[1]`.
pub fn merging(
    s: &HybridState,
    x: PhotonId,
    paths: &[String],
    ancilla: Option<PhotonId>,
    indicator: Selector,
    p: &GateParams,
) -> Result<GateRun<MergeOut>> {
    if paths.len() != 2 {
        return Err(Error::invalid(format!("merging needs 2 paths, got {}", paths.len())));
    }
    merge_impl("merging", s, x, paths, ancilla, &[indicator], None, p)
}

/// Merging-n gate: merges photon `x` spread over `N = 2^m` paths into the
/// ancilla. Path `j` is encoded by the indicator selectors, most significant
/// bit first: bit `i` of `j` is 1 exactly in the branches where
/// `indicators[i]` is occupied.
///
/// `interference` defaults to a 50:50 beam splitter for `N = 2` and the QFT
/// otherwise; any flat matrix with bit-separable phases is accepted.
pub fn merging_n(
    s: &HybridState,
    x: PhotonId,
    paths: &[String],
    ancilla: Option<PhotonId>,
    indicators: &[Selector],
    interference: Option<&CMatrix>,
    p: &GateParams,
) -> Result<GateRun<MergeOut>> {
    merge_impl("merging-n", s, x, paths, ancilla, indicators, interference, p)
}

#[allow(clippy::too_many_arguments)]
fn merge_impl(
    name: &str,
    s: &HybridState,
    x: PhotonId,
    paths: &[String],
    ancilla: Option<PhotonId>,
    indicators: &[Selector],
    interference: Option<&CMatrix>,
    p: &GateParams,
) -> Result<GateRun<MergeOut>> {
    p.validate()?;
    let n = paths.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::invalid(format!("merging needs a power-of-two path count ≥ 2, got {n}")));
    }
    if 1usize << indicators.len() != n {
        return Err(Error::invalid(format!("{} indicators cannot address {n} paths", indicators.len())));
    }
    let f = match interference {
        Some(m) => m.clone(),
        None if n == 2 => beam_splitter_matrix(),
        None => qft_matrix(n),
    };
    if f.nrows() != n {
        return Err(Error::invalid(format!("interference is {}×{0}, expected {n}×{n}", f.nrows())));
    }
    let sep = phase_separation(&f)?;

    let mut chain = Chain::new(s.clone());
    let (anc, anc_path) = match ancilla {
        Some(a) => (a, require_plus(s, a)?),
        None => {
            let a = s.registry().next_photon_id();
            let (st, path) = prepare_plus(s, a)?;
            chain.state = st;
            chain.add(Resources { ancillas: 1, ..Default::default() });
            (a, path)
        }
    };
    if n == 2 {
        chain.gate(|st| entangler1(st, anc, x, paths, p))?;
    } else {
        chain.gate(|st| entangler4(st, anc, x, paths, p))?;
    }

    let mut st = if n == 2 && interference.is_none() {
        photon_bs(&chain.state, x, &paths[0], &paths[1])?
    } else {
        let mesh = reck_decompose(&f)?;
        chain.add(Resources { lomis: 1, ..Default::default() });
        apply_all(&chain.state, &mesh.to_ops(x, paths)?)?
    };
    let mut detectors = Vec::with_capacity(2 * n);
    let mut plan = FeedForwardPlan::new();
    for (k, path) in paths.iter().enumerate() {
        let plus = fresh_name(&st, &format!("{path}+"));
        let minus = fresh_name(&st, &format!("{path}-"));
        st = pbs_pm(&st, x, path, &plus, &minus)?;
        let ops = phase_corrections(&sep, indicators, k);
        let mut minus_ops = ops.clone();
        minus_ops.push(ElementOp::WavePlateZ { photon: anc, path: None });
        plan = plan
            .rule(OutcomePattern::Presence { path: plus.clone(), present: true }, ops)
            .rule(OutcomePattern::Presence { path: minus.clone(), present: true }, minus_ops);
        detectors.push(plus);
        detectors.push(minus);
    }

    let mut outcomes = Vec::new();
    let mut recycled = None;
    for rec in which_path(&st, x, &detectors)? {
        if rec.probability <= p.min_probability {
            continue;
        }
        let MeasurementKind::Presence { path, present } = rec.kind else {
            return Err(Error::precondition("unexpected which-path record"));
        };
        let pattern = OutcomePattern::Presence { path: path.clone(), present };
        let corrected = apply_all(&rec.collapsed, plan.ops_for(&pattern)?)?;
        let (rest, single) = corrected.factor_out_photon(x, 1e-9)?;
        if recycled.is_none() {
            recycled = Some(single);
        }
        outcomes.push(Outcome { label: path, probability: rec.probability, state: rest });
    }
    let recycled = recycled.ok_or(Error::ImpossibleOutcome(0.0))?;
    let res = Resources { detections: 2 * n, ..Default::default() };
    let out = MergeOut { carrier: anc, carrier_path: anc_path, recycled };
    let readout = conclude(&format!("{name}-readout"), outcomes, res, plan, p, ())?;
    chain.gate(|_| Ok(readout))?;
    chain.add(Resources { merging_gates: 1, ..Default::default() });
    Ok(chain.finish(name, out))
}
