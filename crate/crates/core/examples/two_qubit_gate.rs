//! Arbitrary two-qubit unitary: CNOT truth table, then a Haar-random U(4).
//!
//!     cargo run --example two_qubit_gate

use qubus::gates::GateParams;
use qubus::pipelines::two_qubit_gate;
use qubus::program::named_matrix;
use qubus::state::{HybridState, PhotonId, C64};
use qubus::synthesis::{random_haar_unitary, random_state_vector};

fn input(a: &[C64]) -> qubus::error::Result<HybridState> {
    HybridState::polarization_state(&[(PhotonId(1), "p1"), (PhotonId(2), "p2")], a)
}

pub fn run() -> qubus::error::Result<()> {
    let p = GateParams::default();
    let ids = [PhotonId(1), PhotonId(2)];
    let cnot = named_matrix("cnot")?;
    for (k, name) in ["HH", "HV", "VH", "VV"].iter().enumerate() {
        let mut a = vec![C64::new(0.0, 0.0); 4];
        a[k] = C64::new(1.0, 0.0);
        let run = two_qubit_gate(&input(&a)?, ids[0], ids[1], &cnot, &p)?;
        let out = run.state.polarization_amplitudes(&ids)?;
        let j = (0..4).max_by(|&x, &y| out[x].norm().total_cmp(&out[y].norm())).unwrap();
        println!("CNOT {name} -> {}", ["HH", "HV", "VH", "VV"][j]);
    }

    let u = random_haar_unitary(4, 9);
    let a = random_state_vector(4, 10);
    let run = two_qubit_gate(&input(&a)?, ids[0], ids[1], &u, &p)?;
    let got = run.state.polarization_amplitudes(&ids)?;
    let want: Vec<C64> = (0..4).map(|i| (0..4).map(|j| u[(i, j)] * a[j]).sum()).collect();
    let f = got.iter().zip(&want).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr();
    println!("Haar U(4): fidelity {f:.14}");
    println!("resources {:?}", run.report.resources);
    Ok(())
}

#[allow(dead_code)]
fn main() -> qubus::error::Result<()> {
    run()
}
