//! Qudit encoding by teleportation: Bell measurements on every input
//! photon, all 4^n outcomes enumerated and corrected.
//!
//!     cargo run --example teleport

use qubus::gates::GateParams;
use qubus::pipelines::{teleport_ancillas, to_qudit_teleport};
use qubus::state::{HybridState, PhotonId, C64};
use qubus::synthesis::random_state_vector;

pub fn run() -> qubus::error::Result<()> {
    let ids = [PhotonId(1), PhotonId(2)];
    let a = random_state_vector(4, 5);
    let s = HybridState::polarization_state(&[(ids[0], "p1"), (ids[1], "p2")], &a)?;
    let (s, anc) = teleport_ancillas(&s, ids.len())?;
    println!("bell pair {:?}, |+> ancillas {:?}", anc.bell, anc.plus);

    let run = to_qudit_teleport(&s, &ids, &anc, &GateParams::default())?;
    let readout = &run.report.find("bell-readout")[0];
    for o in readout.outcomes.iter().take(4) {
        println!("  {:<10} p = {:.4}  fidelity = {:.12}", o.label, o.probability, o.fidelity);
    }
    println!("  ... {} outcomes in total", readout.outcomes.len());
    println!("qudit photon {} on {:?}", run.out.photon, run.out.paths);
    let amps = run.state.path_amplitudes(run.out.photon, &run.out.paths)?;
    let ip: C64 = amps.iter().zip(&a).map(|(x, y)| x.conj() * y).sum();
    let phase = ip / ip.norm();
    for (j, z) in amps.iter().enumerate().filter(|(_, z)| z.norm() > 1e-12) {
        println!("  slot {j}: {:.6}   input {:.6}", z * phase, a[j]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qubus::error::Result<()> {
    run()
}
