//! Runs a JSON circuit program: a C-path gate, a Hadamard-like wave plate
//! and a two-qubit gate given as a named matrix.
//!
//!     cargo run --example circuit_program

use qubus::program::{run_program, CircuitProgram};

const PROGRAM: &str = r#"{
  "input": {"spec": "haar:4", "photons": 2},
  "steps": [
    {"gate": "two-qubit", "p1": 1, "p2": 2, "matrix": "cz"},
    {"gate": "element", "element": {"op": "wave_plate_x", "photon": 2}},
    {"gate": "toffoli", "controls": [1], "target": 2}
  ]
}"#;

pub fn run() -> qubus::error::Result<()> {
    let prog: CircuitProgram = serde_json::from_str(PROGRAM)?;
    let out = run_program(&prog)?;
    println!("success probability {:.12}", out.report.success_probability);
    println!("resources {:?}", out.report.resources);
    for (i, o) in out.outputs.iter().enumerate() {
        println!("step {i}: {o}");
    }
    if let Some(a) = &out.amplitudes {
        for (k, z) in a.iter().enumerate() {
            println!("  |{k:02b}>  {:+.6} {:+.6}i", z[0], z[1]);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qubus::error::Result<()> {
    run()
}
