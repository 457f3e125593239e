//! Primitive unitary elements: single-photon linear optics, qubus linear
//! optics and cross-phase-modulation couplings.
//!
//! Every function returns a new state; inputs are never mutated. Elements that
//! route a photon onto a new path register that path for the photon on the
//! fly, failing with [`Error::PathCollision`] if another photon owns it.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Branch, HybridState, ModeRegistry, PathId, PhotonId, PhotonLabel, Pol, QubusId, C64};

/// Names a photonic slot. `path: None` matches every path of the photon,
/// `pol: None` matches both polarizations.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Selector {
    pub photon: PhotonId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pol: Option<Pol>,
}

impl Selector {
    pub fn pol(photon: PhotonId, pol: Pol) -> Self {
        Selector { photon, path: None, pol: Some(pol) }
    }

    pub fn path(photon: PhotonId, path: impl Into<String>) -> Self {
        Selector { photon, path: Some(path.into()), pol: None }
    }

    pub fn slot(photon: PhotonId, path: impl Into<String>, pol: Pol) -> Self {
        Selector { photon, path: Some(path.into()), pol: Some(pol) }
    }

    pub(crate) fn resolve(&self, reg: &ModeRegistry) -> Result<Resolved> {
        let idx = reg.photon_index(self.photon)?;
        let path = match &self.path {
            Some(p) => Some(reg.path_of(self.photon, p)?),
            None => None,
        };
        Ok(Resolved { idx, path, pol: self.pol })
    }
}

impl std::fmt::Display for Selector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.pol {
            Some(p) => write!(f, "{p:?}")?,
            None => write!(f, "H/V")?,
        }
        write!(f, "{}", self.photon)?;
        if let Some(p) = &self.path {
            write!(f, "[{p}]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Resolved {
    pub idx: usize,
    pub path: Option<PathId>,
    pub pol: Option<Pol>,
}

impl Resolved {
    pub fn matches(&self, b: &Branch) -> bool {
        let l = b.photons[self.idx];
        self.path.is_none_or(|p| p == l.path) && self.pol.is_none_or(|p| p == l.pol)
    }
}

/// Serializable description of one element, as used in circuit programs and
/// feed-forward plans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ElementOp {
    PhotonBs {
        photon: PhotonId,
        a: String,
        b: String,
    },
    PathRotation {
        photon: PhotonId,
        a: String,
        b: String,
        theta: f64,
        phi: f64,
    },
    Pbs {
        photon: PhotonId,
        input: String,
        out_h: String,
        out_v: String,
    },
    PbsMerge {
        photon: PhotonId,
        in_h: String,
        in_v: String,
        output: String,
    },
    PbsPm {
        photon: PhotonId,
        input: String,
        out_plus: String,
        out_minus: String,
    },
    PbsPmMerge {
        photon: PhotonId,
        in_plus: String,
        in_minus: String,
        output: String,
    },
    WavePlateX {
        photon: PhotonId,
        #[serde(default)]
        path: Option<String>,
    },
    WavePlateZ {
        photon: PhotonId,
        #[serde(default)]
        path: Option<String>,
    },
    PolUnitary {
        photon: PhotonId,
        #[serde(default)]
        path: Option<String>,
        matrix: [[C64; 2]; 2],
    },
    Phase {
        selector: Selector,
        phi: f64,
    },
    PathSwitch {
        photon: PhotonId,
        a: String,
        b: String,
    },
    Xpm {
        mode: QubusId,
        selector: Selector,
        theta: f64,
    },
    QubusPhase {
        mode: QubusId,
        phi: f64,
    },
    QubusBs {
        a: QubusId,
        b: QubusId,
    },
}

impl ElementOp {
    /// True for a bare sign flip: σ_z or a π phase shifter.
    pub fn is_sign_flip(&self) -> bool {
        match self {
            ElementOp::WavePlateZ { .. } => true,
            ElementOp::Phase { phi, .. } => {
                let r = phi.rem_euclid(2.0 * std::f64::consts::PI);
                (r - std::f64::consts::PI).abs() < 1e-12
            }
            _ => false,
        }
    }
}

pub fn apply_element(s: &HybridState, op: &ElementOp) -> Result<HybridState> {
    match op {
        ElementOp::PhotonBs { photon, a, b } => photon_bs(s, *photon, a, b),
        ElementOp::PathRotation { photon, a, b, theta, phi } => path_rotation(s, *photon, a, b, *theta, *phi),
        ElementOp::Pbs { photon, input, out_h, out_v } => pbs(s, *photon, input, out_h, out_v),
        ElementOp::PbsMerge { photon, in_h, in_v, output } => pbs_merge(s, *photon, in_h, in_v, output),
        ElementOp::PbsPm { photon, input, out_plus, out_minus } => pbs_pm(s, *photon, input, out_plus, out_minus),
        ElementOp::PbsPmMerge { photon, in_plus, in_minus, output } => {
            pbs_pm_merge(s, *photon, in_plus, in_minus, output)
        }
        ElementOp::WavePlateX { photon, path } => wave_plate_x(s, *photon, path.as_deref()),
        ElementOp::WavePlateZ { photon, path } => wave_plate_z(s, *photon, path.as_deref()),
        ElementOp::PolUnitary { photon, path, matrix } => pol_unitary(s, *photon, path.as_deref(), *matrix),
        ElementOp::Phase { selector, phi } => phase(s, selector, *phi),
        ElementOp::PathSwitch { photon, a, b } => path_switch(s, *photon, a, b),
        ElementOp::Xpm { mode, selector, theta } => xpm(s, *mode, selector, *theta),
        ElementOp::QubusPhase { mode, phi } => qubus_phase(s, *mode, *phi),
        ElementOp::QubusBs { a, b } => qubus_bs(s, *a, *b),
    }
}

pub fn apply_all(s: &HybridState, ops: &[ElementOp]) -> Result<HybridState> {
    let mut out = s.clone();
    for op in ops {
        out = apply_element(&out, op)?;
    }
    Ok(out)
}

fn check_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be finite")))
    }
}

/// Resolves `name` for `photon`, registering it when `create` is set.
fn path_for(reg: &mut ModeRegistry, photon: PhotonId, name: &str, create: bool) -> Result<PathId> {
    if create && reg.path(name).is_none() {
        return reg.register_path(photon, name);
    }
    reg.path_of(photon, name)
}

/// Applies a per-branch linear map on one photon's label. `f` returns the
/// image of a label as (amplitude, label) pairs; `None` leaves the branch
/// untouched.
fn map_photon<F>(s: &HybridState, reg: ModeRegistry, idx: usize, f: F) -> HybridState
where
    F: Fn(PhotonLabel) -> Option<Vec<(C64, PhotonLabel)>>,
{
    let mut out = Vec::with_capacity(s.num_branches() * 2);
    for b in s.branches() {
        match f(b.photons[idx]) {
            None => out.push(b.clone()),
            Some(images) => {
                for (amp, label) in images {
                    let mut photons = b.photons.clone();
                    photons[idx] = label;
                    out.push(Branch { amplitude: b.amplitude * amp, photons, qubus: b.qubus.clone() });
                }
            }
        }
    }
    HybridState::with_registry(reg, out).canonical()
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// 50:50 beam splitter on one photon:
/// `|x⟩_A → (|x⟩_A + |x⟩_B)/√2`, `|x⟩_B → (|x⟩_A − |x⟩_B)/√2`.
pub fn photon_bs(s: &HybridState, photon: PhotonId, a: &str, b: &str) -> Result<HybridState> {
    let mut reg = s.registry().clone();
    let idx = reg.photon_index(photon)?;
    let pa = path_for(&mut reg, photon, a, false)?;
    let pb = path_for(&mut reg, photon, b, true)?;
    if pa == pb {
        return Err(Error::invalid("beam splitter ports must differ"));
    }
    let h = FRAC_1_SQRT_2;
    Ok(map_photon(s, reg, idx, |l| {
        let at = |p| PhotonLabel { path: p, pol: l.pol };
        if l.path == pa {
            Some(vec![(r(h), at(pa)), (r(h), at(pb))])
        } else if l.path == pb {
            Some(vec![(r(h), at(pa)), (r(-h), at(pb))])
        } else {
            None
        }
    }))
}

/// Two-path rotation used by interferometer meshes:
/// `x_a → e^{iφ}cosθ·x_a + e^{iφ}sinθ·x_b`, `x_b → −sinθ·x_a + cosθ·x_b`
/// (columns of `[[e^{iφ}c, −s], [e^{iφ}s, c]]`).
pub fn path_rotation(s: &HybridState, photon: PhotonId, a: &str, b: &str, theta: f64, phi: f64) -> Result<HybridState> {
    check_finite(theta, "rotation angle")?;
    check_finite(phi, "rotation phase")?;
    let mut reg = s.registry().clone();
    let idx = reg.photon_index(photon)?;
    let pa = path_for(&mut reg, photon, a, false)?;
    let pb = path_for(&mut reg, photon, b, true)?;
    let (sn, cs) = theta.sin_cos();
    let e = C64::from_polar(1.0, phi);
    Ok(map_photon(s, reg, idx, |l| {
        let at = |p| PhotonLabel { path: p, pol: l.pol };
        if l.path == pa {
            Some(vec![(e * cs, at(pa)), (e * sn, at(pb))])
        } else if l.path == pb {
            Some(vec![(r(-sn), at(pa)), (r(cs), at(pb))])
        } else {
            None
        }
    }))
}

fn require_free(s: &HybridState, idx: usize, paths: &[PathId], reg: &ModeRegistry) -> Result<()> {
    for b in s.branches() {
        if paths.contains(&b.photons[idx].path) {
            return Err(Error::precondition(format!(
                "output path `{}` is already occupied",
                reg.path_name(b.photons[idx].path)
            )));
        }
    }
    Ok(())
}

/// Polarizing beam splitter: H on `input` goes to `out_h`, V to `out_v`.
/// Output paths other than `input` must be unoccupied.
pub fn pbs(s: &HybridState, photon: PhotonId, input: &str, out_h: &str, out_v: &str) -> Result<HybridState> {
    let mut reg = s.registry().clone();
    let idx = reg.photon_index(photon)?;
    let pin = path_for(&mut reg, photon, input, false)?;
    let ph = path_for(&mut reg, photon, out_h, true)?;
    let pv = path_for(&mut reg, photon, out_v, true)?;
    if ph == pv {
        return Err(Error::invalid("PBS outputs must differ"));
    }
    let busy: Vec<PathId> = [ph, pv].into_iter().filter(|p| *p != pin).collect();
    require_free(s, idx, &busy, &reg)?;
    Ok(map_photon(s, reg, idx, |l| {
        (l.path == pin).then(|| {
            let path = if l.pol == Pol::H { ph } else { pv };
            vec![(r(1.0), PhotonLabel { path, pol: l.pol })]
        })
    }))
}

/// Inverse of [`pbs`]: H from `in_h` and V from `in_v` recombine on `output`.
pub fn pbs_merge(s: &HybridState, photon: PhotonId, in_h: &str, in_v: &str, output: &str) -> Result<HybridState> {
    let mut reg = s.registry().clone();
    let idx = reg.photon_index(photon)?;
    let ph = path_for(&mut reg, photon, in_h, false)?;
    let pv = path_for(&mut reg, photon, in_v, false)?;
    let pout = path_for(&mut reg, photon, output, true)?;
    let busy: Vec<PathId> = [pout].into_iter().filter(|p| *p != ph && *p != pv).collect();
    require_free(s, idx, &busy, &reg)?;
    for b in s.branches() {
        let l = b.photons[idx];
        if (l.path == ph && l.pol == Pol::V) || (l.path == pv && l.pol == Pol::H) {
            return Err(Error::precondition("PBS recombination needs H on the H port and V on the V port"));
        }
    }
    Ok(map_photon(s, reg, idx, |l| {
        (l.path == ph || l.path == pv).then(|| vec![(r(1.0), PhotonLabel { path: pout, pol: l.pol })])
    }))
}

/// `|±⟩`-basis PBS: `|+⟩` on `input` goes to `out_plus`, `|−⟩` to `out_minus`.
pub fn pbs_pm(s: &HybridState, photon: PhotonId, input: &str, out_plus: &str, out_minus: &str) -> Result<HybridState> {
    let mut reg = s.registry().clone();
    let idx = reg.photon_index(photon)?;
    let pin = path_for(&mut reg, photon, input, false)?;
    let pp = path_for(&mut reg, photon, out_plus, true)?;
    let pm = path_for(&mut reg, photon, out_minus, true)?;
    if pp == pm {
        return Err(Error::invalid("PBS outputs must differ"));
    }
    let busy: Vec<PathId> = [pp, pm].into_iter().filter(|p| *p != pin).collect();
    require_free(s, idx, &busy, &reg)?;
    Ok(map_photon(s, reg, idx, |l| {
        (l.path == pin).then(|| {
            // |H⟩ = (|+⟩ + |−⟩)/√2, |V⟩ = (|+⟩ − |−⟩)/√2
            let sign = if l.pol == Pol::H { 0.5 } else { -0.5 };
            vec![
                (r(0.5), PhotonLabel { path: pp, pol: Pol::H }),
                (r(0.5), PhotonLabel { path: pp, pol: Pol::V }),
                (r(sign), PhotonLabel { path: pm, pol: Pol::H }),
                (r(-sign), PhotonLabel { path: pm, pol: Pol::V }),
            ]
        })
    }))
}

/// Inverse of [`pbs_pm`]. The `in_plus` port must carry only `|+⟩` and the
/// `in_minus` port only `|−⟩`.
pub fn pbs_pm_merge(
    s: &HybridState,
    photon: PhotonId,
    in_plus: &str,
    in_minus: &str,
    output: &str,
) -> Result<HybridState> {
    let reg0 = s.registry();
    let idx = reg0.photon_index(photon)?;
    let pp = reg0.path_of(photon, in_plus)?;
    let pm = reg0.path_of(photon, in_minus)?;
    // Rotate both ports into the ± basis first; the wrong-sign components
    // must vanish.
    let rot = map_photon(s, reg0.clone(), idx, |l| {
        (l.path == pp || l.path == pm).then(|| {
            let h = FRAC_1_SQRT_2;
            // store + as H, − as V
            let sign = if l.pol == Pol::H { h } else { -h };
            vec![
                (r(h), PhotonLabel { path: l.path, pol: Pol::H }),
                (r(sign), PhotonLabel { path: l.path, pol: Pol::V }),
            ]
        })
    });
    for b in rot.branches() {
        let l = b.photons[idx];
        if (l.path == pp && l.pol == Pol::V) || (l.path == pm && l.pol == Pol::H) {
            return Err(Error::precondition("PBS± recombination needs |+⟩ on the + port and |−⟩ on the − port"));
        }
    }
    let mut reg = reg0.clone();
    let pout = path_for(&mut reg, photon, output, true)?;
    let busy: Vec<PathId> = [pout].into_iter().filter(|p| *p != pp && *p != pm).collect();
    require_free(s, idx, &busy, &reg)?;
    Ok(map_photon(&rot, reg, idx, |l| {
        (l.path == pp || l.path == pm).then(|| {
            let h = FRAC_1_SQRT_2;
            let sign = if l.pol == Pol::H { h } else { -h };
            vec![(r(h), PhotonLabel { path: pout, pol: Pol::H }), (r(sign), PhotonLabel { path: pout, pol: Pol::V })]
        })
    }))
}

fn path_filter(reg: &ModeRegistry, photon: PhotonId, path: Option<&str>) -> Result<Option<PathId>> {
    path.map(|p| reg.path_of(photon, p)).transpose()
}

/// Arbitrary 2×2 unitary on the polarization of `photon` (on one path, or on
/// every path when `path` is `None`), in the `(H, V)` basis.
pub fn pol_unitary(s: &HybridState, photon: PhotonId, path: Option<&str>, m: [[C64; 2]; 2]) -> Result<HybridState> {
    let dev = {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let acc: C64 = m.iter().map(|row| row[i].conj() * row[j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                d = d.max((acc - target).norm());
            }
        }
        d
    };
    if dev > 1e-10 {
        return Err(Error::NotUnitary(dev));
    }
    let reg = s.registry().clone();
    let idx = reg.photon_index(photon)?;
    let pf = path_filter(&reg, photon, path)?;
    Ok(map_photon(s, reg, idx, |l| {
        pf.is_none_or(|p| p == l.path).then(|| {
            let col = l.pol.bit();
            vec![
                (m[0][col], PhotonLabel { path: l.path, pol: Pol::H }),
                (m[1][col], PhotonLabel { path: l.path, pol: Pol::V }),
            ]
        })
    }))
}

/// σ_x: swaps H and V.
pub fn wave_plate_x(s: &HybridState, photon: PhotonId, path: Option<&str>) -> Result<HybridState> {
    let reg = s.registry().clone();
    let idx = reg.photon_index(photon)?;
    let pf = path_filter(&reg, photon, path)?;
    Ok(map_photon(s, reg, idx, |l| {
        pf.is_none_or(|p| p == l.path).then(|| vec![(r(1.0), PhotonLabel { path: l.path, pol: l.pol.flipped() })])
    }))
}

/// σ_z: `|V⟩ → −|V⟩`.
pub fn wave_plate_z(s: &HybridState, photon: PhotonId, path: Option<&str>) -> Result<HybridState> {
    phase(s, &Selector { photon, path: path.map(str::to_string), pol: Some(Pol::V) }, std::f64::consts::PI)
}

/// Multiplies every branch in which `selector` is occupied by `e^{iφ}`.
/// With `pol: Some(V)` this is a polarization phase; with `pol: None` it is a
/// phase shifter on a whole path.
pub fn phase(s: &HybridState, selector: &Selector, phi: f64) -> Result<HybridState> {
    check_finite(phi, "phase")?;
    let sel = selector.resolve(s.registry())?;
    let e = C64::from_polar(1.0, phi);
    let branches = s
        .branches()
        .iter()
        .map(|b| {
            let mut b = b.clone();
            if sel.matches(&b) {
                b.amplitude *= e;
            }
            b
        })
        .collect();
    Ok(s.with_branches(branches))
}

/// Relabels paths `a` ↔ `b` of one photon.
pub fn path_switch(s: &HybridState, photon: PhotonId, a: &str, b: &str) -> Result<HybridState> {
    let mut reg = s.registry().clone();
    let idx = reg.photon_index(photon)?;
    let pa = path_for(&mut reg, photon, a, false)?;
    let pb = path_for(&mut reg, photon, b, true)?;
    Ok(map_photon(s, reg, idx, |l| {
        if l.path == pa {
            Some(vec![(r(1.0), PhotonLabel { path: pb, pol: l.pol })])
        } else if l.path == pb {
            Some(vec![(r(1.0), PhotonLabel { path: pa, pol: l.pol })])
        } else {
            None
        }
    }))
}

/// Cross-phase modulation: the coherent amplitude of `mode` picks up `e^{iθ}`
/// in every branch where `selector` is occupied.
pub fn xpm(s: &HybridState, mode: QubusId, selector: &Selector, theta: f64) -> Result<HybridState> {
    check_finite(theta, "XPM angle")?;
    let qi = s.registry().qubus_index(mode)?;
    let sel = selector.resolve(s.registry())?;
    let e = C64::from_polar(1.0, theta);
    let branches = s
        .branches()
        .iter()
        .map(|b| {
            let mut b = b.clone();
            if sel.matches(&b) {
                b.qubus[qi] *= e;
            }
            b
        })
        .collect();
    Ok(s.with_branches(branches))
}

/// Phase shifter on a qubus beam: `α → α e^{iφ}` in every branch.
pub fn qubus_phase(s: &HybridState, mode: QubusId, phi: f64) -> Result<HybridState> {
    check_finite(phi, "phase")?;
    let qi = s.registry().qubus_index(mode)?;
    let e = C64::from_polar(1.0, phi);
    let branches = s
        .branches()
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.qubus[qi] *= e;
            b
        })
        .collect();
    Ok(s.with_branches(branches))
}

/// Qubus beam splitter: `(α₁, α₂) → ((α₁ − α₂)/√2, (α₁ + α₂)/√2)`.
pub fn qubus_bs(s: &HybridState, a: QubusId, b: QubusId) -> Result<HybridState> {
    let ia = s.registry().qubus_index(a)?;
    let ib = s.registry().qubus_index(b)?;
    if ia == ib {
        return Err(Error::invalid("qubus beam splitter ports must differ"));
    }
    let branches = s
        .branches()
        .iter()
        .map(|br| {
            let mut br = br.clone();
            let (x, y) = (br.qubus[ia], br.qubus[ib]);
            br.qubus[ia] = (x - y) * FRAC_1_SQRT_2;
            br.qubus[ib] = (x + y) * FRAC_1_SQRT_2;
            br
        })
        .collect();
    Ok(s.with_branches(branches))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pol(id: u32, path: &str, h: f64, v: f64) -> HybridState {
        HybridState::single_photon(PhotonId(id), path, c(h, 0.0), c(v, 0.0)).unwrap()
    }

    fn p1() -> PhotonId {
        PhotonId(1)
    }

    #[test]
    fn beam_splitter_convention() {
        let s = pol(1, "A", 1.0, 0.0);
        let out = photon_bs(&s, p1(), "A", "B").unwrap();
        assert_eq!(out.num_branches(), 2);
        for b in out.branches() {
            assert!((b.amplitude - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        }
        let back = photon_bs(&out, p1(), "A", "B").unwrap();
        assert!((back.fidelity(&s).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(back.num_branches(), 1);
    }

    #[test]
    fn beam_splitter_on_second_port_gives_minus_sign() {
        let mut reg = ModeRegistry::new();
        reg.add_photon(p1(), &["2", "3"]).unwrap();
        let minus = HybridState::from_snapshot(&crate::state::StateSnapshot {
            photons: vec![crate::state::PhotonDecl { id: p1(), paths: vec!["2".into(), "3".into()] }],
            qubus_modes: vec![],
            branches: vec![crate::state::BranchSnapshot {
                amplitude: [1.0, 0.0],
                photons: vec![crate::state::PhotonSlot { id: p1(), path: "3".into(), pol: Pol::H }],
                qubus: vec![],
            }],
        })
        .unwrap();
        let out = photon_bs(&minus, p1(), "2", "3").unwrap();
        let amps = out.path_amplitudes(p1(), &["2".into(), "3".into()]).unwrap();
        assert!((amps[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((amps[2] - c(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pbs_routes_by_polarization() {
        let s = pol(1, "1", 0.6, 0.8);
        let out = pbs(&s, p1(), "1", "1H", "1V").unwrap();
        let amps = out.path_amplitudes(p1(), &["1H".into(), "1V".into()]).unwrap();
        assert!((amps[0] - c(0.6, 0.0)).norm() < 1e-15);
        assert!((amps[3] - c(0.8, 0.0)).norm() < 1e-15);
        let back = pbs_merge(&out, p1(), "1H", "1V", "1").unwrap();
        assert!((back.fidelity(&s).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pbs_pm_routes_plus_entirely() {
        let s = HybridState::plus(p1(), "in").unwrap();
        let out = pbs_pm(&s, p1(), "in", "p", "m").unwrap();
        assert_eq!(out.occupied_paths(p1()).unwrap(), vec!["p".to_string()]);
        let back = pbs_pm_merge(&out, p1(), "p", "m", "in").unwrap();
        assert!((back.fidelity(&s).unwrap() - 1.0).abs() < 1e-14);

        let h = pol(1, "in", 1.0, 0.0);
        let split = pbs_pm(&h, p1(), "in", "p", "m").unwrap();
        assert!((split.norm() - 1.0).abs() < 1e-14);
        let back = pbs_pm_merge(&split, p1(), "p", "m", "in").unwrap();
        assert!((back.fidelity(&h).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pbs_into_occupied_path_fails() {
        let s = pol(1, "a", 1.0, 0.0);
        let s = photon_bs(&s, p1(), "a", "b").unwrap();
        assert!(pbs(&s, p1(), "a", "x", "b").is_err());
    }

    #[test]
    fn path_collision_with_other_photon() {
        let s = pol(1, "a", 1.0, 0.0).tensor(&pol(2, "b", 1.0, 0.0)).unwrap();
        assert!(matches!(photon_bs(&s, p1(), "a", "b"), Err(Error::PathCollision { .. })));
    }

    #[test]
    fn wave_plates() {
        let s = pol(1, "a", 0.6, 0.8);
        let x = wave_plate_x(&s, p1(), None).unwrap();
        let amps = x.polarization_amplitudes(&[p1()]).unwrap();
        assert!((amps[0] - c(0.8, 0.0)).norm() < 1e-15);
        let zz = wave_plate_z(&wave_plate_z(&s, p1(), None).unwrap(), p1(), None).unwrap();
        assert!((zz.inner_product(&s).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn xpm_phases() {
        let alpha = c(3.0, 0.0);
        let s = pol(1, "a", 1.0, 0.0).tensor(&HybridState::coherent(QubusId(0), alpha)).unwrap();
        let sel = Selector::pol(p1(), Pol::H);
        let once = xpm(&s, QubusId(0), &sel, 0.1).unwrap();
        let twice = xpm(&once, QubusId(0), &Selector::path(p1(), "a"), 0.1).unwrap();
        assert!((twice.branches()[0].qubus[0] - alpha * C64::from_polar(1.0, 0.2)).norm() < 1e-14);
        let none = xpm(&s, QubusId(0), &Selector::pol(p1(), Pol::V), 0.1).unwrap();
        assert_eq!(none.branches()[0].qubus[0], alpha);
        let zero = xpm(&s, QubusId(0), &sel, 0.0).unwrap();
        assert_eq!(zero.branches()[0].qubus[0], alpha);
    }

    #[test]
    fn qubus_beam_splitter_displays() {
        let alpha = 5.0;
        let theta = 0.05;
        let s = HybridState::coherent(QubusId(1), C64::from_polar(alpha, theta))
            .tensor(&HybridState::coherent(QubusId(2), C64::from_polar(alpha, -theta)))
            .unwrap();
        let out = qubus_bs(&s, QubusId(1), QubusId(2)).unwrap();
        let q = &out.branches()[0].qubus;
        let s2 = 2f64.sqrt();
        assert!((q[0] - c(0.0, s2 * alpha * theta.sin())).norm() < 1e-12);
        assert!((q[1] - c(s2 * alpha * theta.cos(), 0.0)).norm() < 1e-12);

        let eq = HybridState::coherent(QubusId(1), c(alpha, 0.0))
            .tensor(&HybridState::coherent(QubusId(2), c(alpha, 0.0)))
            .unwrap();
        let q = qubus_bs(&eq, QubusId(1), QubusId(2)).unwrap().branches()[0].qubus.clone();
        assert!(q[0].norm() < 1e-15);
        assert!((q[1] - c(s2 * alpha, 0.0)).norm() < 1e-12);

        let back = qubus_phase(&qubus_phase(&s, QubusId(1), 0.3).unwrap(), QubusId(1), -0.3).unwrap();
        assert!((back.branches()[0].qubus[0] - s.branches()[0].qubus[0]).norm() < 1e-15);
    }

    #[test]
    fn element_ops_round_trip_json() {
        let op = ElementOp::Xpm { mode: QubusId(3), selector: Selector::slot(p1(), "2'", Pol::V), theta: 0.05 };
        let json = serde_json::to_string(&op).unwrap();
        assert!(json.contains("\"op\":\"xpm\""));
        let back: ElementOp = serde_json::from_str(&json).unwrap();
        assert_eq!(back, op);
    }

    #[test]
    fn pol_unitary_rejects_non_unitary() {
        let s = pol(1, "a", 1.0, 0.0);
        let m = [[c(1.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        assert!(matches!(pol_unitary(&s, p1(), None, m), Err(Error::NotUnitary(_))));
    }
}
