//! Dense two-beam Fock-space simulation of a coupling block, used as an
//! oracle for the closed-form coherent branch representation.

use std::collections::BTreeMap;

use qubus::elements::Selector;
use qubus::state::{PhotonSlot, StateSnapshot, C64};

fn ln_fact_table(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for k in 1..=n {
        t[k] = t[k - 1] + (k as f64).ln();
    }
    t
}

fn hits(sel: &Selector, slots: &[PhotonSlot]) -> bool {
    slots.iter().any(|s| {
        s.id == sel.photon && sel.path.as_ref().is_none_or(|p| *p == s.path) && sel.pol.is_none_or(|p| p == s.pol)
    })
}

/// Two-mode Fock amplitudes `psi[n1][n2]`, truncated at `cutoff` per mode.
type Modes = Vec<Vec<C64>>;

fn coherent_pair(alpha: f64, cutoff: usize) -> Modes {
    let lf = ln_fact_table(cutoff);
    let amp = |n: usize| (-alpha * alpha / 2.0 + n as f64 * alpha.ln() - 0.5 * lf[n]).exp();
    (0..=cutoff).map(|a| (0..=cutoff).map(|b| C64::new(amp(a) * amp(b), 0.0)).collect()).collect()
}

/// `e^{i n φ}` on each beam.
fn phases(psi: &mut Modes, phi1: f64, phi2: f64) {
    for (a, row) in psi.iter_mut().enumerate() {
        for (b, z) in row.iter_mut().enumerate() {
            *z *= C64::from_polar(1.0, a as f64 * phi1 + b as f64 * phi2);
        }
    }
}

/// Beam splitter with `a₁† → (a₁† + a₂†)/√2`, `a₂† → (a₂† − a₁†)/√2`,
/// expanded binomially on each input Fock state.
fn beam_splitter(psi: &Modes, cutoff: usize) -> Modes {
    let lf = ln_fact_table(2 * cutoff);
    let ln_fact = |n: usize| lf[n];
    let binom = |n: usize, k: usize| (lf[n] - lf[k] - lf[n - k]).exp();
    let mut out = vec![vec![C64::new(0.0, 0.0); cutoff + 1]; cutoff + 1];
    for (n1, row) in psi.iter().enumerate() {
        for (n2, &z) in row.iter().enumerate() {
            if z.norm_sqr() == 0.0 {
                continue;
            }
            let total = n1 + n2;
            let norm = (-(total as f64) * 0.5 * 2f64.ln() - 0.5 * (ln_fact(n1) + ln_fact(n2))).exp();
            for i in 0..=n1 {
                for j in 0..=n2 {
                    let p = i + j;
                    let q = total - p;
                    if p > cutoff || q > cutoff {
                        continue;
                    }
                    let sign = if j % 2 == 1 { -1.0 } else { 1.0 };
                    let w = sign * binom(n1, i) * binom(n2, j) * norm * (0.5 * (ln_fact(p) + ln_fact(q))).exp();
                    out[p][q] += z * w;
                }
            }
        }
    }
    out
}

/// Photon-number distribution of the first beam after the coupling block:
/// two beams `|α⟩|α⟩`, `e^{iθ}` on beam `k` for every occupied selector of
/// `beam_k`, `e^{−iθ}` on both, then the beam splitter.
pub fn coupling_pmf(
    photons: &StateSnapshot,
    beam1: &[Selector],
    beam2: &[Selector],
    alpha: f64,
    theta: f64,
    cutoff: usize,
) -> Vec<f64> {
    let mut configs: BTreeMap<String, (C64, Vec<PhotonSlot>)> = BTreeMap::new();
    for b in &photons.branches {
        let key = format!("{:?}", b.photons);
        let e = configs.entry(key).or_insert((C64::new(0.0, 0.0), b.photons.clone()));
        e.0 += C64::new(b.amplitude[0], b.amplitude[1]);
    }
    // Configurations with the same coupling counts share one beam state.
    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (amp, slots) in configs.values() {
        let k1 = beam1.iter().filter(|s| hits(s, slots)).count();
        let k2 = beam2.iter().filter(|s| hits(s, slots)).count();
        *weights.entry((k1, k2)).or_default() += amp.norm_sqr();
    }
    let vacuum = coherent_pair(alpha, cutoff);
    let mut pmf = vec![0.0; cutoff + 1];
    for (&(k1, k2), w) in &weights {
        let mut psi = vacuum.clone();
        phases(&mut psi, (k1 as f64 - 1.0) * theta, (k2 as f64 - 1.0) * theta);
        let out = beam_splitter(&psi, cutoff);
        for (n, row) in out.iter().enumerate() {
            pmf[n] += w * row.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
    }
    pmf
}
