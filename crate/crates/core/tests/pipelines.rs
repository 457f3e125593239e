mod common;

use common::*;
use qubus::gates::{CPath3Layout, GateParams};
use qubus::pipelines::*;
use qubus::state::C64;
use qubus::synthesis::{random_haar_unitary, sign_interference4, CMatrix};

fn params() -> GateParams {
    GateParams::with_beta_sq(0.05, 20.0)
}

fn factors(n: usize, seed: u64) -> Vec<Vec<C64>> {
    (0..n as u64).map(|i| amplitudes(1, 100 * seed + i)).collect()
}

fn permutation(n: usize, f: impl Fn(usize) -> usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for j in 0..n {
        m[(f(j), j)] = c(1.0, 0.0);
    }
    m
}

#[test]
fn to_qudit_matches_kronecker() {
    let p = params();
    for n in 2..=4 {
        let f = factors(n, n as u64);
        let (s, ids) = product_input(&f);
        let run = to_qudit_circuit(&s, &ids, &p).unwrap();
        assert!(run.report.is_deterministic(1e-9));
        let q = &run.out;
        assert_eq!(q.paths.len(), 1 << (n - 1));
        let got = qudit_amplitudes(&run.state, q.photon, &q.paths, &q.companions);
        let d = phase_aligned_distance(&kron(&f), &got);
        assert!(d < 1e-10, "n = {n}: distance {d}");
        assert_eq!(run.report.resources.cpath_gates, n - 1);
        assert_eq!(run.report.resources.disentanglers, n - 1);
    }
}

#[test]
fn to_qudit_is_linear_on_entangled_inputs() {
    let p = params();
    let amps = amplitudes(3, 77);
    let (s, ids) = joint_input(&amps);
    let run = to_qudit_circuit(&s, &ids, &p).unwrap();
    let q = &run.out;
    let got = qudit_amplitudes(&run.state, q.photon, &q.paths, &q.companions);
    assert!(phase_aligned_distance(&amps, &got) < 1e-10);
}

#[test]
fn teleport_matches_circuit() {
    let p = params();
    for n in 2..=3 {
        let f = factors(n, 40 + n as u64);
        let (s, ids) = product_input(&f);
        let (sa, anc) = teleport_ancillas(&s, n).unwrap();
        let run = to_qudit_teleport(&sa, &ids, &anc, &p).unwrap();
        assert!(run.report.is_deterministic(1e-9), "{:?}", run.report.success_probability);
        let readout = &run.report.find("bell-readout")[0];
        assert_eq!(readout.outcomes.len(), 1 << (2 * n));
        let got = qudit_amplitudes(&run.state, run.out.photon, &run.out.paths, &[]);
        assert!(phase_aligned_distance(&kron(&f), &got) < 1e-10, "n = {n}");
    }
}

#[test]
fn teleport_basis_case() {
    let p = params();
    let (s, ids) = product_input(&[vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]);
    let (sa, anc) = teleport_ancillas(&s, 2).unwrap();
    let run = to_qudit_teleport(&sa, &ids, &anc, &p).unwrap();
    let got = qudit_amplitudes(&run.state, run.out.photon, &run.out.paths, &[]);
    assert!((got[0].norm() - 1.0).abs() < 1e-12);
}

#[test]
fn teleport_rejects_wrong_inventory() {
    let (s, ids) = product_input(&factors(3, 1));
    let (sa, mut anc) = teleport_ancillas(&s, 3).unwrap();
    anc.plus.pop();
    assert!(to_qudit_teleport(&sa, &ids, &anc, &params()).is_err());
}

#[test]
fn round_trip_is_identity() {
    let p = params();
    for n in 2..=3 {
        let amps = amplitudes(n, 5 + n as u64);
        let (s, ids) = joint_input(&amps);
        let q = to_qudit_circuit(&s, &ids, &p).unwrap();
        let back = from_qudit(&q.state, &q.out, None, &p).unwrap();
        assert!(back.report.is_deterministic(1e-9));
        let got = back.state.polarization_amplitudes(&ids).unwrap();
        assert!(overlap(&amps, &got) > 1.0 - 1e-9, "n = {n}");
    }
}

#[test]
fn cnot_truth_table() {
    let p = params();
    let cnot = permutation(4, |j| if j >= 2 { j ^ 1 } else { j });
    for k in 0..4 {
        let mut a = vec![c(0.0, 0.0); 4];
        a[k] = c(1.0, 0.0);
        let (s, ids) = joint_input(&a);
        let run = two_qubit_gate(&s, ids[0], ids[1], &cnot, &p).unwrap();
        let got = run.state.polarization_amplitudes(&ids).unwrap();
        let want = if k >= 2 { k ^ 1 } else { k };
        assert!((got[want].norm() - 1.0).abs() < 1e-9, "input {k}: {got:?}");
    }
}

#[test]
fn two_qubit_haar() {
    let p = params();
    for seed in 0..5 {
        let u = random_haar_unitary(4, seed);
        let amps = amplitudes(2, 1000 + seed);
        let (s, ids) = joint_input(&amps);
        let run = two_qubit_gate(&s, ids[0], ids[1], &u, &p).unwrap();
        assert!(run.report.is_deterministic(1e-9));
        let got = run.state.polarization_amplitudes(&ids).unwrap();
        assert!(overlap(&mat_vec(&u, &amps), &got) > 1.0 - 1e-8, "seed {seed}");
        let r = run.report.resources;
        assert_eq!((r.cpath_gates, r.disentanglers, r.entanglers, r.ancillas), (1, 1, 2, 1));
    }
}

#[test]
fn three_qubit_haar_and_sign_interference() {
    let p = params();
    let u = random_haar_unitary(8, 3);
    let amps = amplitudes(3, 31);
    let (s, ids) = joint_input(&amps);
    let run = multi_qubit_gate(&s, &ids, &u, &p).unwrap();
    assert!(run.report.is_deterministic(1e-9));
    let got = run.state.polarization_amplitudes(&ids).unwrap();
    assert!(overlap(&mat_vec(&u, &amps), &got) > 1.0 - 1e-8);
    let r = run.report.resources;
    assert_eq!((r.cpath_gates, r.disentanglers, r.entanglers, r.ancillas, r.lomis), (2, 2, 3, 1, 2));

    let h = sign_interference4();
    let run = multi_qubit_gate_with(&s, &ids, &u, Some(&h), &p).unwrap();
    let got = run.state.polarization_amplitudes(&ids).unwrap();
    assert!(overlap(&mat_vec(&u, &amps), &got) > 1.0 - 1e-8);
    let ff = run.report.find("merging-n-readout")[0].feed_forward.as_ref().unwrap();
    assert!(ff.only_sign_flips());
}

#[test]
fn identity_gate() {
    let p = params();
    let amps = amplitudes(3, 8);
    let (s, ids) = joint_input(&amps);
    let run = multi_qubit_gate(&s, &ids, &CMatrix::identity(8, 8), &p).unwrap();
    let got = run.state.polarization_amplitudes(&ids).unwrap();
    assert!(overlap(&amps, &got) > 1.0 - 1e-10);
}

fn controlled_flip_table(n_controls: usize, layout: CPath3Layout) -> usize {
    let p = params();
    let n = n_controls + 1;
    let dim = 1 << n;
    let all_v = dim - 2;
    let mut couplings = 0;
    for k in 0..dim {
        let mut a = vec![c(0.0, 0.0); dim];
        a[k] = c(1.0, 0.0);
        let (s, ids) = joint_input(&a);
        let run = toffoli(&s, &ids[..n_controls], ids[n_controls], layout, &p).unwrap();
        assert!(run.report.is_deterministic(1e-9));
        let got = run.state.polarization_amplitudes(&ids).unwrap();
        let want = if k >= all_v { k ^ 1 } else { k };
        assert!((got[want].norm() - 1.0).abs() < 1e-9, "{layout:?} input {k}");
        couplings = run.report.resources.xpm_couplings;
    }
    couplings
}

#[test]
fn toffoli_truth_tables() {
    let split = controlled_flip_table(2, CPath3Layout::SplitRail);
    let whole = controlled_flip_table(2, CPath3Layout::WholeRail);
    assert_eq!(split, whole + 1);
    controlled_flip_table(3, CPath3Layout::WholeRail);
    controlled_flip_table(1, CPath3Layout::WholeRail);
}

#[test]
fn toffoli_layouts_agree_on_superpositions() {
    let p = params();
    let amps = amplitudes(3, 90);
    let (s, ids) = joint_input(&amps);
    let a = toffoli(&s, &ids[..2], ids[2], CPath3Layout::SplitRail, &p).unwrap();
    let b = toffoli(&s, &ids[..2], ids[2], CPath3Layout::WholeRail, &p).unwrap();
    let ga = a.state.polarization_amplitudes(&ids).unwrap();
    let gb = b.state.polarization_amplitudes(&ids).unwrap();
    let want = mat_vec(&permutation(8, |j| if j >= 6 { j ^ 1 } else { j }), &amps);
    assert!(overlap(&want, &ga) > 1.0 - 1e-8);
    assert!(overlap(&ga, &gb) > 1.0 - 1e-10);
    let r = a.report.resources;
    assert_eq!((r.cpath_gates, r.merging_gates, r.ancillas), (2, 2, 1));
}

fn controlled(u: &CMatrix, n_controls: usize) -> CMatrix {
    let k = u.nrows();
    let dim = k << n_controls;
    let mut m = CMatrix::identity(dim, dim);
    let off = dim - k;
    for i in 0..k {
        for j in 0..k {
            m[(off + i, off + j)] = u[(i, j)];
        }
    }
    m
}

#[test]
fn cn_uk_matches_dense_oracle() {
    let p = params();
    for (n_controls, k, seed) in [(1, 2, 1), (2, 2, 2)] {
        let u = random_haar_unitary(1 << k, seed);
        let amps = amplitudes(n_controls + k, 60 + seed);
        let (s, ids) = joint_input(&amps);
        let run = cn_uk(&s, &ids[..n_controls], &ids[n_controls..], &u, CPath3Layout::WholeRail, &p).unwrap();
        assert!(run.report.is_deterministic(1e-9));
        let got = run.state.polarization_amplitudes(&ids).unwrap();
        let want = mat_vec(&controlled(&u, n_controls), &amps);
        assert!(overlap(&want, &got) > 1.0 - 1e-8, "controls {n_controls}, targets {k}");
    }
}

#[test]
fn cn_u1_haar() {
    let p = params();
    let u = random_haar_unitary(2, 12);
    let amps = amplitudes(3, 13);
    let (s, ids) = joint_input(&amps);
    let run = cn_u1(&s, &ids[..2], ids[2], &u, CPath3Layout::SplitRail, &p).unwrap();
    let got = run.state.polarization_amplitudes(&ids).unwrap();
    assert!(overlap(&mat_vec(&controlled(&u, 2), &amps), &got) > 1.0 - 1e-8);
}

#[test]
fn errors() {
    let p = params();
    let (s, ids) = joint_input(&amplitudes(2, 1));
    assert!(to_qudit_circuit(&s, &ids[..1], &p).is_err());
    let mut bad = CMatrix::identity(4, 4);
    bad[(0, 0)] = c(2.0, 0.0);
    assert!(two_qubit_gate(&s, ids[0], ids[1], &bad, &p).is_err());
    let (s5, ids5) = joint_input(&amplitudes(5, 1));
    assert!(to_qudit_circuit(&s5, &ids5, &p).is_err());
}
