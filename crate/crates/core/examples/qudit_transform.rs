//! Moves a three-photon polarization state onto the paths of a single
//! photon and back again.
//!
//!     cargo run --example qudit_transform

use qubus::gates::GateParams;
use qubus::pipelines::{from_qudit, to_qudit_circuit};
use qubus::state::{HybridState, PhotonId};
use qubus::synthesis::random_state_vector;

pub fn run() -> qubus::error::Result<()> {
    let ids = [PhotonId(1), PhotonId(2), PhotonId(3)];
    let a = random_state_vector(8, 21);
    let s = HybridState::polarization_state(&[(ids[0], "p1"), (ids[1], "p2"), (ids[2], "p3")], &a)?;
    let p = GateParams::default();

    let q = to_qudit_circuit(&s, &ids, &p)?;
    println!("qudit photon {} on {:?}", q.out.photon, q.out.paths);
    println!("companions left in |+>: {:?}", q.out.companions);
    let r = q.report.resources;
    println!("c-path gates {}, disentanglers {}, couplings {}", r.cpath_gates, r.disentanglers, r.xpm_couplings);

    let back = from_qudit(&q.state, &q.out, None, &p)?;
    let got = back.state.polarization_amplitudes(&ids)?;
    let f = got.iter().zip(&a).map(|(x, y)| x.conj() * y).sum::<qubus::state::C64>().norm_sqr();
    println!("round trip fidelity {f:.14}, success {:.12}", back.report.success_probability);
    Ok(())
}

#[allow(dead_code)]
fn main() -> qubus::error::Result<()> {
    run()
}
