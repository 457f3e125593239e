//! C-path gate followed by a merging gate: the target photon is routed by
//! the control and then recombined onto a single path.
//!
//!     cargo run --example cpath_merging

use qubus::elements::Selector;
use qubus::gates::{c_path, merging, GateParams};
use qubus::state::{HybridState, PhotonId, Pol};
use qubus::synthesis::random_state_vector;

pub fn run() -> qubus::error::Result<()> {
    let (c, t) = (PhotonId(1), PhotonId(2));
    let a = random_state_vector(4, 3);
    let s = HybridState::polarization_state(&[(c, "c"), (t, "t")], &a)?;
    let p = GateParams::default();

    let cp = c_path(&s, c, t, &p)?;
    println!("c-path: target on {:?} (control H) and {:?} (control V)", cp.out.first, cp.out.second);
    println!("  resources {:?}", cp.report.resources);

    let paths = vec![cp.out.first[0].clone(), cp.out.second[0].clone()];
    let m = merging(&cp.state, t, &paths, None, Selector::pol(c, Pol::V), &p)?;
    let got = m.state.polarization_amplitudes(&[c, m.out.carrier])?;
    let f: f64 = got.iter().zip(&a).map(|(x, y)| x.conj() * y).sum::<qubus::state::C64>().norm_sqr();
    println!("merging: carrier {} on {}", m.out.carrier, m.out.carrier_path);
    println!("  fidelity with the input {f:.14}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> qubus::error::Result<()> {
    run()
}
