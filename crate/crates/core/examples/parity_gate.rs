//! Parity gate on a random two-photon state, with every qubus outcome
//! listed next to its corrected fidelity.
//!
//!     cargo run --example parity_gate

use qubus::gates::{parity_gate, GateParams};
use qubus::state::{HybridState, PhotonId};
use qubus::synthesis::random_state_vector;

pub fn run() -> qubus::error::Result<()> {
    let a = random_state_vector(4, 11);
    let s = HybridState::polarization_state(&[(PhotonId(1), "p1"), (PhotonId(2), "p2")], &a)?;
    let p = GateParams::with_beta_sq(0.05, 20.0);
    let run = parity_gate(&s, PhotonId(1), PhotonId(2), &p)?;

    println!("alpha = {:.3}, theta = {}, |beta|^2 = {:.2}", p.alpha, p.theta, p.beta_sq());
    println!("even parity on {}, odd parity on {}", run.out.even, run.out.odd);
    for o in run.report.outcomes.iter().filter(|o| o.probability > 1e-3) {
        println!("  {:>6}  p = {:.5}  fidelity = {:.12}", o.label, o.probability, o.fidelity);
    }
    println!("{} outcomes, success probability {:.12}", run.report.outcomes.len(), run.report.success_probability);
    Ok(())
}

#[allow(dead_code)]
fn main() -> qubus::error::Result<()> {
    run()
}
