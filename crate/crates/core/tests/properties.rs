mod common;

use common::*;
use proptest::prelude::*;
use qubus::analysis::{error_probability_direct, error_probability_formula, fig2_data};
use qubus::gates::{c_path, parity_gate, GateParams};
use qubus::program::parse_state_spec;
use qubus::state::{HybridState, PhotonId};
use qubus::synthesis::{frobenius_distance, random_haar_unitary, reck_decompose, unitarity_deviation};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn error_probabilities_are_probabilities(
        alpha in 1.0f64..200.0,
        theta in 0.0f64..0.3,
        gamma in 1.0f64..200.0,
        eta in 0.0f64..=1.0,
        tp in 0.001f64..0.2,
    ) {
        let d = error_probability_direct(alpha, theta, gamma, eta, tp, None).unwrap();
        let f = error_probability_formula(alpha, theta, gamma, eta, tp).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn fig2_pmfs_are_normalized(gamma in 10.0f64..150.0, tp in 0.01f64..0.1, beta_sq in 1.0f64..40.0) {
        let data = fig2_data(gamma, tp, beta_sq, 3).unwrap();
        prop_assert!((data.qubus_pmf.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for pk in &data.peaks {
            prop_assert!((pk.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn reck_reconstructs(n in 2usize..10, seed in any::<u64>()) {
        let u = random_haar_unitary(n, seed);
        prop_assert!(unitarity_deviation(&u) < 1e-12);
        let mesh = reck_decompose(&u).unwrap();
        prop_assert!(frobenius_distance(&mesh.matrix(), &u) < 1e-10);
    }

    #[test]
    fn snapshot_round_trip(seed in any::<u64>(), n in 1usize..4) {
        let (s, _) = joint_input(&amplitudes(n, seed));
        let back = HybridState::from_snapshot(&s.to_snapshot()).unwrap();
        prop_assert!((back.fidelity(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_specs_are_one_hot(bits in proptest::collection::vec(any::<bool>(), 1..6)) {
        let spec: String = bits.iter().map(|&b| if b { 'V' } else { 'H' }).collect();
        let a = parse_state_spec(&spec, 0).unwrap();
        let k = bits.iter().fold(0usize, |k, &b| (k << 1) | usize::from(b));
        prop_assert_eq!(a.len(), 1 << bits.len());
        prop_assert!((a[k].norm() - 1.0).abs() < 1e-15);
        prop_assert!((a.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn coupling_gate_infidelity_is_bounded_by_cat_overlap(
        seed in any::<u64>(),
        beta_sq in 8.0f64..40.0,
        theta in 0.01f64..0.2,
    ) {
        let p = GateParams::with_beta_sq(theta, beta_sq);
        let bound = (-beta_sq).exp() + 1e-10;
        let (s, ids) = joint_input(&amplitudes(2, seed));
        let run = parity_gate(&s, ids[0], ids[1], &p).unwrap();
        let total: f64 = run.report.outcomes.iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(1.0 - run.report.mean_fidelity <= bound, "{}", run.report.mean_fidelity);
        let run = c_path(&s, PhotonId(1), PhotonId(2), &p).unwrap();
        prop_assert!(1.0 - run.report.mean_fidelity <= bound, "{}", run.report.mean_fidelity);
    }
}
