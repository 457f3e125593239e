//! QND photon-number readout of a coherent beam through a probe beam and a
//! non-resolving detector, plus a parity gate read out this way.
//!
//!     cargo run --example qnd_detector

use qubus::detection::{
    bin_distribution, fock_distribution, qnd_outcomes, sample, MeasurementKind, QndConfig, QndMode,
};
use qubus::gates::{parity_gate, GateParams, Readout};
use qubus::state::{HybridState, PhotonId, QubusId, C64};
use qubus::synthesis::random_state_vector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run() -> qubus::error::Result<()> {
    let (gamma, tp, eta) = (100.0, 0.05, 0.95);
    let beam = HybridState::coherent(QubusId(1), C64::new(20f64.sqrt(), 0.0));
    let pmf = fock_distribution(&beam, QubusId(1), None)?;
    let cfg = QndConfig::covering(gamma, tp, eta, 20.0)?;
    let binned = bin_distribution(&pmf, &cfg);
    println!("{} bins; peak means:", cfg.bins.len());
    for b in cfg.bins.iter().skip(1).take(4) {
        println!("  k = {}  mu = {:.4}  counts [{:.1}, {:.1})", b.k, b.mean, b.lo, b.hi);
    }
    for n in [15, 20, 25] {
        println!("  n = {n}: P(n) = {:.6}, P(bin {n}) = {:.6}", pmf[n], binned[n]);
    }

    let records = qnd_outcomes(&beam, QubusId(1), &cfg, QndMode::Binned, 1e-12)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut draws = Vec::new();
    for _ in 0..8 {
        if let MeasurementKind::Bin { k, n } = sample(records.clone(), &mut rng)?.kind {
            draws.push(format!("{k}/{n}"));
        }
    }
    println!("sampled bin/photons: {}", draws.join(" "));

    let mut p = GateParams::with_beta_sq(0.05, 20.0);
    p.readout = Readout::Qnd { config: QndConfig::covering(gamma, tp, eta, 4.0 * 20.0)?, mode: QndMode::Binned };
    let a = random_state_vector(4, 1);
    let s = HybridState::polarization_state(&[(PhotonId(1), "p1"), (PhotonId(2), "p2")], &a)?;
    let run = parity_gate(&s, PhotonId(1), PhotonId(2), &p)?;
    println!(
        "parity gate with binned readout: {} records, mean fidelity {:.10}",
        run.report.outcomes.len(),
        run.report.mean_fidelity
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> qubus::error::Result<()> {
    run()
}
