#![allow(dead_code)]

pub mod fock_oracle;

use qubus::state::{BranchSnapshot, HybridState, PhotonDecl, PhotonId, PhotonSlot, Pol, StateSnapshot, C64};

/// `(amplitude, [(photon, path, pol)])`.
pub type BranchSpec<'a> = (C64, Vec<(u32, &'a str, Pol)>);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Builds a photon-only state from `(amplitude, [(photon, path, pol)])`
/// branches; every path mentioned is registered for its photon.
pub fn build(branches: &[BranchSpec]) -> HybridState {
    build_with(branches, &[])
}

/// [`build`] with additional registered but unoccupied paths.
pub fn build_with(branches: &[BranchSpec], extra: &[(u32, &str)]) -> HybridState {
    let mut photons: Vec<PhotonDecl> = Vec::new();
    let mentioned = branches.iter().flat_map(|(_, slots)| slots.iter().map(|(id, path, _)| (*id, *path)));
    for (id, path) in mentioned.chain(extra.iter().copied()) {
        {
            let id = PhotonId(id);
            match photons.iter_mut().find(|d| d.id == id) {
                Some(d) => {
                    if !d.paths.iter().any(|p| p == path) {
                        d.paths.push(path.to_string());
                    }
                }
                None => photons.push(PhotonDecl { id, paths: vec![path.to_string()] }),
            }
        }
    }
    let norm: f64 = branches.iter().map(|(a, _)| a.norm_sqr()).sum::<f64>().sqrt();
    let snap = StateSnapshot {
        photons,
        qubus_modes: Vec::new(),
        branches: branches
            .iter()
            .map(|(a, slots)| BranchSnapshot {
                amplitude: [a.re / norm, a.im / norm],
                photons: slots
                    .iter()
                    .map(|(id, path, pol)| PhotonSlot { id: PhotonId(*id), path: path.to_string(), pol: *pol })
                    .collect(),
                qubus: Vec::new(),
            })
            .collect(),
    };
    HybridState::from_snapshot(&snap).unwrap()
}

/// Haar-ish test amplitudes for `n` polarization qubits.
pub fn amplitudes(n: usize, seed: u64) -> Vec<C64> {
    qubus::synthesis::random_state_vector(1 << n, seed)
}

/// Dense Kronecker product of single-qubit amplitude pairs, first factor most
/// significant.
pub fn kron(factors: &[Vec<C64>]) -> Vec<C64> {
    let mut out = vec![c(1.0, 0.0)];
    for f in factors {
        out = out.iter().flat_map(|a| f.iter().map(move |b| a * b)).collect();
    }
    out
}

pub fn mat_vec(u: &qubus::synthesis::CMatrix, v: &[C64]) -> Vec<C64> {
    (0..u.nrows()).map(|i| (0..u.ncols()).map(|j| u[(i, j)] * v[j]).sum()).collect()
}

/// `|⟨a|b⟩|²` for unit vectors.
pub fn overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()
}

/// Max-norm distance after removing the global phase of `b` relative to `a`.
pub fn phase_aligned_distance(a: &[C64], b: &[C64]) -> f64 {
    let ip: C64 = b.iter().zip(a).map(|(x, y)| x.conj() * y).sum();
    let ph = if ip.norm() > 0.0 { ip / ip.norm() } else { c(1.0, 0.0) };
    a.iter().zip(b).map(|(x, y)| (x - y * ph).norm()).fold(0.0, f64::max)
}

/// Product of single-photon polarization qubits on paths `p1, p2, …`.
pub fn product_input(factors: &[Vec<C64>]) -> (HybridState, Vec<PhotonId>) {
    let ids: Vec<PhotonId> = (1..=factors.len() as u32).map(PhotonId).collect();
    let names: Vec<String> = ids.iter().map(|p| format!("p{}", p.0)).collect();
    let photons: Vec<(PhotonId, &str)> = ids.iter().zip(&names).map(|(p, n)| (*p, n.as_str())).collect();
    (HybridState::polarization_state(&photons, &kron(factors)).unwrap(), ids)
}

/// Photons `1..=n` on paths `p1..pn` carrying the joint amplitudes `amps`.
pub fn joint_input(amps: &[C64]) -> (HybridState, Vec<PhotonId>) {
    let n = amps.len().trailing_zeros();
    let ids: Vec<PhotonId> = (1..=n).map(PhotonId).collect();
    let names: Vec<String> = ids.iter().map(|p| format!("p{}", p.0)).collect();
    let photons: Vec<(PhotonId, &str)> = ids.iter().zip(&names).map(|(p, n)| (*p, n.as_str())).collect();
    (HybridState::polarization_state(&photons, amps).unwrap(), ids)
}

/// Removes `companions` after checking each is exactly `|+⟩`, then returns
/// the qudit's `2·j + pol` amplitudes.
pub fn qudit_amplitudes(s: &HybridState, photon: PhotonId, paths: &[String], companions: &[PhotonId]) -> Vec<C64> {
    let mut rest = s.clone();
    for &cp in companions {
        let (r, single) = rest.factor_out_photon(cp, 1e-9).unwrap();
        let a = single.polarization_amplitudes(&[cp]).unwrap();
        assert!(((a[0] + a[1]).norm_sqr() / 2.0 - 1.0).abs() < 1e-10, "companion {cp} not |+⟩");
        rest = r;
    }
    rest.path_amplitudes(photon, paths).unwrap()
}
