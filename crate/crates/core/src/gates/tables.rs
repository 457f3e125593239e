//! XPM coupling patterns. `beam1` lists the slots coupled to the measured
//! qubus beam, `beam2` those coupled to the second beam.

use serde::{Deserialize, Serialize};

use crate::elements::Selector;
use crate::state::{PhotonId, Pol};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingTable {
    pub beam1: Vec<Selector>,
    pub beam2: Vec<Selector>,
}

impl CouplingTable {
    pub fn couplings(&self) -> usize {
        self.beam1.len() + self.beam2.len()
    }
}

/// Parity gate: photon 2 split onto `a` and `b`.
pub fn parity(p1: PhotonId, p2: PhotonId, a: &str, b: &str) -> CouplingTable {
    CouplingTable {
        beam1: vec![Selector::pol(p1, Pol::H), Selector::slot(p2, a, Pol::H), Selector::slot(p2, b, Pol::V)],
        beam2: vec![Selector::pol(p1, Pol::V), Selector::slot(p2, a, Pol::V), Selector::slot(p2, b, Pol::H)],
    }
}

/// C-path and C-path-2: `v_class` are the control slots that send the target
/// to the `second` members, `h_class` the slots that keep it on `first`.
pub fn controlled_split(
    v_class: &[Selector],
    h_class: &[Selector],
    target: PhotonId,
    first: &[String],
    second: &[String],
) -> CouplingTable {
    let mut beam1 = v_class.to_vec();
    beam1.extend(first.iter().map(|p| Selector::path(target, p.clone())));
    let mut beam2 = h_class.to_vec();
    beam2.extend(second.iter().map(|p| Selector::path(target, p.clone())));
    CouplingTable { beam1, beam2 }
}

pub fn c_path(control: PhotonId, target: PhotonId, first: &[String], second: &[String]) -> CouplingTable {
    controlled_split(&[Selector::pol(control, Pol::V)], &[Selector::pol(control, Pol::H)], target, first, second)
}

/// Layout of the control photon's first rail in a C-path-3 gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum ControlRails {
    /// First rail separated by a PBS into `h` and `v`, with `v` bit-flipped so
    /// both carry `H`; every control mode is coupled individually.
    Split { h: String, v: String, second: String },
    /// First rail coupled as a whole spatial mode, saving one coupling.
    Whole { first: String, second: String },
}

pub fn c_path3(
    control: PhotonId,
    rails: &ControlRails,
    target: PhotonId,
    first: &[String],
    second: &[String],
) -> CouplingTable {
    let (second_rail, mut h_class) = match rails {
        ControlRails::Split { h, v, second } => {
            (second, vec![Selector::slot(control, h.clone(), Pol::H), Selector::slot(control, v.clone(), Pol::H)])
        }
        ControlRails::Whole { first, second } => (second, vec![Selector::path(control, first.clone())]),
    };
    h_class.insert(0, Selector::slot(control, second_rail.clone(), Pol::H));
    controlled_split(&[Selector::slot(control, second_rail.clone(), Pol::V)], &h_class, target, first, second)
}

/// Entangler of the Merging gates: the ancilla copies the polarization of `x`.
pub fn merging_entangler(ancilla: PhotonId, x: PhotonId, paths: &[String]) -> CouplingTable {
    let mut beam1 = vec![Selector::pol(ancilla, Pol::H)];
    beam1.extend(paths.iter().map(|p| Selector::slot(x, p.clone(), Pol::V)));
    let mut beam2 = vec![Selector::pol(ancilla, Pol::V)];
    beam2.extend(paths.iter().map(|p| Selector::slot(x, p.clone(), Pol::H)));
    CouplingTable { beam1, beam2 }
}

/// Entangler-2 and Entangler-3: the control's polarization becomes `V`
/// exactly when `x` sits in `v_group`.
pub fn group_entangler(control: PhotonId, x: PhotonId, h_group: &[String], v_group: &[String]) -> CouplingTable {
    let mut beam1 = vec![Selector::pol(control, Pol::H)];
    beam1.extend(v_group.iter().map(|p| Selector::path(x, p.clone())));
    let mut beam2 = vec![Selector::pol(control, Pol::V)];
    beam2.extend(h_group.iter().map(|p| Selector::path(x, p.clone())));
    CouplingTable { beam1, beam2 }
}
