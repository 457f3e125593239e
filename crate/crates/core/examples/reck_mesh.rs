//! Beam-splitter mesh for a Haar-random unitary, applied to a photon
//! spread over eight paths.
//!
//!     cargo run --example reck_mesh

use qubus::state::{BranchSnapshot, HybridState, PhotonDecl, PhotonId, PhotonSlot, Pol, StateSnapshot, C64};
use qubus::synthesis::{frobenius_distance, mesh_apply, random_haar_unitary, random_state_vector, reck_decompose};

pub fn run() -> qubus::error::Result<()> {
    let n = 8;
    let u = random_haar_unitary(n, 2024);
    let mesh = reck_decompose(&u)?;
    println!("{} beam splitters, {} output phases", mesh.rotations.len(), mesh.phases.len());
    for r in mesh.rotations.iter().take(3) {
        println!("  modes ({}, {}): theta = {:.4}, phi = {:.4}", r.a, r.b, r.theta, r.phi);
    }
    println!("reconstruction error {:.2e}", frobenius_distance(&mesh.matrix(), &u));

    let x = PhotonId(1);
    let paths: Vec<String> = (0..n).map(|j| format!("m{j}")).collect();
    let a = random_state_vector(n, 1);
    let snap = StateSnapshot {
        photons: vec![PhotonDecl { id: x, paths: paths.clone() }],
        qubus_modes: vec![],
        branches: (0..n)
            .map(|j| BranchSnapshot {
                amplitude: [a[j].re, a[j].im],
                photons: vec![PhotonSlot { id: x, path: paths[j].clone(), pol: Pol::H }],
                qubus: vec![],
            })
            .collect(),
    };
    let s = HybridState::from_snapshot(&snap)?;
    let out = mesh_apply(&s, x, &paths, &mesh)?;
    let amps = out.path_amplitudes(x, &paths)?;
    let err = (0..n)
        .map(|i| {
            let want: C64 = (0..n).map(|j| u[(i, j)] * a[j]).sum();
            (amps[2 * i] - want).norm()
        })
        .fold(0.0, f64::max);
    println!("mesh_apply vs dense U|a>: max error {err:.2e}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> qubus::error::Result<()> {
    run()
}
