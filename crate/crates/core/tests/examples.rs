//! Runs every example in-process.

#[path = "../examples/parity_gate.rs"]
mod parity_gate;

#[path = "../examples/cpath_merging.rs"]
mod cpath_merging;

#[path = "../examples/qudit_transform.rs"]
mod qudit_transform;

#[path = "../examples/teleport.rs"]
mod teleport;

#[path = "../examples/two_qubit_gate.rs"]
mod two_qubit_gate;

#[path = "../examples/toffoli.rs"]
mod toffoli;

#[path = "../examples/qnd_detector.rs"]
mod qnd_detector;

#[path = "../examples/reck_mesh.rs"]
mod reck_mesh;

#[path = "../examples/error_probability_sweep.rs"]
mod error_probability_sweep;

#[path = "../examples/fig2_data.rs"]
mod fig2_data;

#[path = "../examples/circuit_program.rs"]
mod circuit_program;

#[test]
fn parity_gate_runs() {
    parity_gate::run().unwrap();
}

#[test]
fn cpath_merging_runs() {
    cpath_merging::run().unwrap();
}

#[test]
fn qudit_transform_runs() {
    qudit_transform::run().unwrap();
}

#[test]
fn teleport_runs() {
    teleport::run().unwrap();
}

#[test]
fn two_qubit_gate_runs() {
    two_qubit_gate::run().unwrap();
}

#[test]
fn toffoli_runs() {
    toffoli::run().unwrap();
}

#[test]
fn qnd_detector_runs() {
    qnd_detector::run().unwrap();
}

#[test]
fn reck_mesh_runs() {
    reck_mesh::run().unwrap();
}

#[test]
fn error_probability_sweep_runs() {
    error_probability_sweep::run().unwrap();
}

#[test]
fn fig2_data_runs() {
    let dir = tempfile::tempdir().unwrap();
    fig2_data::run(Some(dir.path())).unwrap();
    assert!(dir.path().join("fig2a.csv").exists());
}

#[test]
fn circuit_program_runs() {
    circuit_program::run().unwrap();
}
