//! Hybrid photon/coherent-state algebra.
//!
//! A [`HybridState`] is a finite superposition of [`Branch`]es. Each branch
//! places every registered photon in exactly one `(path, polarization)` slot
//! and every registered qubus mode in a coherent state. Branches with
//! different coherent amplitudes are not orthogonal, so all norms and overlaps
//! go through the closed-form coherent overlap.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coherent::overlap;
use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default merge / drop tolerance used by [`HybridState::canonical`].
pub const CANON_TOL: f64 = 1e-12;

/// Norm deviation accepted by operations that require a normalized input.
pub const NORM_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhotonId(pub u32);

impl fmt::Display for PhotonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QubusId(pub u32);

impl fmt::Display for QubusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// Registry-local handle for a named spatial path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathId(u32);

impl PathId {
    fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub fn flipped(self) -> Pol {
        match self {
            Pol::H => Pol::V,
            Pol::V => Pol::H,
        }
    }

    pub fn bit(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }

    pub fn from_bit(bit: usize) -> Pol {
        if bit == 0 {
            Pol::H
        } else {
            Pol::V
        }
    }
}

/// Slot occupied by one photon in one branch. The photon is implied by the
/// position of the label inside [`Branch::photons`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhotonLabel {
    pub path: PathId,
    pub pol: Pol,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub amplitude: C64,
    pub photons: Vec<PhotonLabel>,
    pub qubus: Vec<C64>,
}

#[derive(Clone, Debug)]
struct PhotonEntry {
    id: PhotonId,
    paths: Vec<PathId>,
}

#[derive(Clone, Debug)]
struct PathEntry {
    name: String,
    owner: PhotonId,
}

/// Declares photons, the paths each photon may occupy, and the qubus modes.
///
/// Path names are unique across the registry, so a path belongs to exactly
/// one photon. Paths can be added as a circuit creates new rails.
#[derive(Clone, Debug, Default)]
pub struct ModeRegistry {
    photons: Vec<PhotonEntry>,
    paths: Vec<PathEntry>,
    by_name: HashMap<String, PathId>,
    qubus: Vec<QubusId>,
}

impl ModeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_photons(&self) -> usize {
        self.photons.len()
    }

    pub fn photon_ids(&self) -> Vec<PhotonId> {
        self.photons.iter().map(|p| p.id).collect()
    }

    pub fn contains_photon(&self, id: PhotonId) -> bool {
        self.photons.iter().any(|p| p.id == id)
    }

    pub fn photon_index(&self, id: PhotonId) -> Result<usize> {
        self.photons.iter().position(|p| p.id == id).ok_or(Error::UnknownPhoton(id))
    }

    pub fn add_photon(&mut self, id: PhotonId, paths: &[&str]) -> Result<usize> {
        if self.contains_photon(id) {
            return Err(Error::DuplicatePhoton(id));
        }
        self.photons.push(PhotonEntry { id, paths: Vec::new() });
        for p in paths {
            self.register_path(id, p)?;
        }
        Ok(self.photons.len() - 1)
    }

    /// Registers `name` for `photon`. Registering a path the photon already
    /// owns is a no-op.
    pub fn register_path(&mut self, photon: PhotonId, name: &str) -> Result<PathId> {
        let idx = self.photon_index(photon)?;
        if let Some(&pid) = self.by_name.get(name) {
            let owner = self.paths[pid.index()].owner;
            if owner == photon {
                return Ok(pid);
            }
            return Err(Error::PathCollision { path: name.to_string(), owner });
        }
        let pid = PathId(self.paths.len() as u32);
        self.paths.push(PathEntry { name: name.to_string(), owner: photon });
        self.by_name.insert(name.to_string(), pid);
        self.photons[idx].paths.push(pid);
        Ok(pid)
    }

    /// Registers a new path for `photon`, priming `stem` until the name is free.
    pub fn fresh_path(&mut self, photon: PhotonId, stem: &str) -> Result<PathId> {
        let mut name = stem.to_string();
        while self.by_name.contains_key(&name) {
            name.push('\'');
        }
        self.register_path(photon, &name)
    }

    pub fn path(&self, name: &str) -> Option<PathId> {
        self.by_name.get(name).copied()
    }

    /// Resolves `name` and checks that it belongs to `photon`.
    pub fn path_of(&self, photon: PhotonId, name: &str) -> Result<PathId> {
        match self.by_name.get(name) {
            Some(&pid) if self.paths[pid.index()].owner == photon => Ok(pid),
            Some(&pid) => Err(Error::PathCollision { path: name.to_string(), owner: self.paths[pid.index()].owner }),
            None => Err(Error::UnregisteredPath { photon, path: name.to_string() }),
        }
    }

    pub fn path_name(&self, path: PathId) -> &str {
        &self.paths[path.index()].name
    }

    pub fn path_owner(&self, path: PathId) -> PhotonId {
        self.paths[path.index()].owner
    }

    pub fn paths_of(&self, photon: PhotonId) -> Result<Vec<String>> {
        let idx = self.photon_index(photon)?;
        Ok(self.photons[idx].paths.iter().map(|p| self.path_name(*p).to_string()).collect())
    }

    pub fn qubus_modes(&self) -> &[QubusId] {
        &self.qubus
    }

    pub fn qubus_index(&self, id: QubusId) -> Result<usize> {
        self.qubus.iter().position(|q| *q == id).ok_or(Error::UnknownQubus(id))
    }

    pub fn add_qubus(&mut self, id: QubusId) -> Result<usize> {
        if self.qubus.contains(&id) {
            return Err(Error::DuplicateQubus(id));
        }
        self.qubus.push(id);
        Ok(self.qubus.len() - 1)
    }

    /// Smallest qubus id greater than every registered one.
    pub fn next_qubus_id(&self) -> QubusId {
        QubusId(self.qubus.iter().map(|q| q.0 + 1).max().unwrap_or(0))
    }

    /// Smallest photon id greater than every registered one.
    pub fn next_photon_id(&self) -> PhotonId {
        PhotonId(self.photons.iter().map(|p| p.id.0 + 1).max().unwrap_or(0))
    }

    fn remove_photon_at(&mut self, idx: usize) {
        let entry = self.photons.remove(idx);
        // Path handles are indices; keep the table and only drop the names so
        // the paths can be re-registered by another photon.
        for pid in entry.paths {
            self.by_name.remove(&self.paths[pid.index()].name);
        }
    }

    fn relabel_photon(&mut self, from: PhotonId, to: PhotonId) -> Result<()> {
        if from == to {
            return Ok(());
        }
        if self.contains_photon(to) {
            return Err(Error::DuplicatePhoton(to));
        }
        let idx = self.photon_index(from)?;
        self.photons[idx].id = to;
        for pid in self.photons[idx].paths.clone() {
            self.paths[pid.index()].owner = to;
        }
        Ok(())
    }

    fn remove_qubus_at(&mut self, idx: usize) {
        self.qubus.remove(idx);
    }
}

/// Maps labels of another registry into this registry's index space.
struct Alignment {
    /// For each photon of `other`, its index in `self` (or `None` if absent).
    photon: Vec<Option<usize>>,
    /// For each path of `other`, the same-named path in `self`.
    path: Vec<Option<PathId>>,
    /// For each qubus mode of `other`, its index in `self`.
    qubus: Vec<Option<usize>>,
}

impl Alignment {
    fn new(this: &ModeRegistry, other: &ModeRegistry) -> Self {
        let photon = other.photons.iter().map(|p| this.photon_index(p.id).ok()).collect();
        let path =
            other.paths.iter().map(|p| this.path(&p.name).filter(|pid| this.path_owner(*pid) == p.owner)).collect();
        let qubus = other.qubus.iter().map(|q| this.qubus_index(*q).ok()).collect();
        Alignment { photon, path, qubus }
    }

    /// Re-expresses `labels` (from `other`) as a label vector of `this`
    /// restricted to the photons in `kept` (indices in `this`).
    fn translate(&self, labels: &[PhotonLabel], n_this: usize) -> Option<Vec<PhotonLabel>> {
        let mut out = vec![None; n_this];
        for (i, l) in labels.iter().enumerate() {
            let dst = self.photon[i]?;
            let path = self.path[l.path.index()]?;
            out[dst] = Some(PhotonLabel { path, pol: l.pol });
        }
        out.into_iter().collect()
    }
}

/// An immutable normalized (or explicitly unnormalized) hybrid state.
#[derive(Clone, Debug)]
pub struct HybridState {
    registry: Arc<ModeRegistry>,
    branches: Vec<Branch>,
}

impl HybridState {
    /// The state with no photons and no qubus modes (amplitude 1).
    pub fn vacuum() -> Self {
        HybridState {
            registry: Arc::new(ModeRegistry::new()),
            branches: vec![Branch { amplitude: C64::new(1.0, 0.0), photons: Vec::new(), qubus: Vec::new() }],
        }
    }

    /// Builds a state from raw parts, validating branch shapes and labels.
    pub fn from_parts(registry: ModeRegistry, branches: Vec<Branch>) -> Result<Self> {
        for b in &branches {
            if b.photons.len() != registry.num_photons() {
                return Err(Error::RegistryMismatch(format!(
                    "branch has {} photons, registry declares {}",
                    b.photons.len(),
                    registry.num_photons()
                )));
            }
            if b.qubus.len() != registry.qubus.len() {
                return Err(Error::RegistryMismatch(format!(
                    "branch has {} qubus amplitudes, registry declares {}",
                    b.qubus.len(),
                    registry.qubus.len()
                )));
            }
            if !b.amplitude.is_finite() || b.qubus.iter().any(|q| !q.is_finite()) {
                return Err(Error::invalid("non-finite amplitude"));
            }
            for (i, l) in b.photons.iter().enumerate() {
                if l.path.index() >= registry.paths.len() || registry.path_owner(l.path) != registry.photons[i].id {
                    return Err(Error::RegistryMismatch(format!(
                        "photon {} placed on a path it does not own",
                        registry.photons[i].id
                    )));
                }
            }
        }
        Ok(HybridState { registry: Arc::new(registry), branches })
    }

    pub(crate) fn with_branches(&self, branches: Vec<Branch>) -> Self {
        HybridState { registry: Arc::clone(&self.registry), branches }
    }

    pub(crate) fn with_registry(registry: ModeRegistry, branches: Vec<Branch>) -> Self {
        HybridState { registry: Arc::new(registry), branches }
    }

    /// One photon on `path` in `h|H⟩ + v|V⟩` (normalized on construction).
    pub fn single_photon(id: PhotonId, path: &str, h: C64, v: C64) -> Result<Self> {
        Self::polarization_state(&[(id, path)], &[h, v])
    }

    /// `|+⟩ = (|H⟩ + |V⟩)/√2` on `path`.
    pub fn plus(id: PhotonId, path: &str) -> Result<Self> {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::single_photon(id, path, s, s)
    }

    /// Polarization-encoded qubits, one photon per path, with amplitudes in
    /// lexicographic order (first photon most significant, `H < V`).
    /// The result is normalized.
    pub fn polarization_state(photons: &[(PhotonId, &str)], amplitudes: &[C64]) -> Result<Self> {
        let n = photons.len();
        if amplitudes.len() != 1 << n {
            return Err(Error::invalid(format!("{} amplitudes supplied for {} photons", amplitudes.len(), n)));
        }
        let mut reg = ModeRegistry::new();
        let mut path_ids = Vec::with_capacity(n);
        for (id, path) in photons {
            reg.add_photon(*id, &[path])?;
            path_ids.push(reg.path_of(*id, path)?);
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("amplitude vector has zero norm"));
        }
        let branches = amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(idx, a)| Branch {
                amplitude: a / norm,
                photons: (0..n)
                    .map(|k| PhotonLabel { path: path_ids[k], pol: Pol::from_bit((idx >> (n - 1 - k)) & 1) })
                    .collect(),
                qubus: Vec::new(),
            })
            .collect();
        Ok(Self::with_registry(reg, branches))
    }

    /// A single coherent mode `|α⟩`.
    pub fn coherent(mode: QubusId, alpha: C64) -> Self {
        let mut reg = ModeRegistry::new();
        reg.qubus.push(mode);
        Self::with_registry(
            reg,
            vec![Branch { amplitude: C64::new(1.0, 0.0), photons: Vec::new(), qubus: vec![alpha] }],
        )
    }

    pub fn registry(&self) -> &ModeRegistry {
        &self.registry
    }

    /// Gives photon `from` the unused id `to`; its paths keep their names.
    pub fn relabel_photon(&self, from: PhotonId, to: PhotonId) -> Result<Self> {
        let mut reg = (*self.registry).clone();
        reg.relabel_photon(from, to)?;
        Ok(HybridState { registry: Arc::new(reg), branches: self.branches.clone() })
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn num_branches(&self) -> usize {
        self.branches.len()
    }

    /// Paths of `photon` that carry amplitude in at least one branch.
    pub fn occupied_paths(&self, photon: PhotonId) -> Result<Vec<String>> {
        let idx = self.registry.photon_index(photon)?;
        let set: BTreeSet<PathId> = self.branches.iter().map(|b| b.photons[idx].path).collect();
        Ok(set.into_iter().map(|p| self.registry.path_name(p).to_string()).collect())
    }

    /// ⟨self|other⟩.
    pub fn inner_product(&self, other: &HybridState) -> Result<C64> {
        let mut a_ids = self.registry.photon_ids();
        let mut b_ids = other.registry.photon_ids();
        a_ids.sort();
        b_ids.sort();
        let mut a_q = self.registry.qubus.clone();
        let mut b_q = other.registry.qubus.clone();
        a_q.sort();
        b_q.sort();
        if a_ids != b_ids || a_q != b_q {
            return Err(Error::RegistryMismatch("states declare different photons or qubus modes".into()));
        }
        let align = Alignment::new(&self.registry, &other.registry);
        let mut groups: HashMap<&[PhotonLabel], Vec<usize>> = HashMap::new();
        for (i, b) in self.branches.iter().enumerate() {
            groups.entry(b.photons.as_slice()).or_default().push(i);
        }
        let qmap: Vec<usize> = align.qubus.iter().map(|q| q.expect("checked")).collect();
        let mut sum = C64::new(0.0, 0.0);
        for ob in &other.branches {
            let Some(key) = align.translate(&ob.photons, self.registry.num_photons()) else {
                continue;
            };
            if let Some(list) = groups.get(key.as_slice()) {
                for &i in list {
                    let sb = &self.branches[i];
                    let mut term = sb.amplitude.conj() * ob.amplitude;
                    for (j, &oq) in ob.qubus.iter().enumerate() {
                        term *= overlap(sb.qubus[qmap[j]], oq);
                    }
                    sum += term;
                }
            }
        }
        Ok(sum)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner_product(self).map(|c| c.re).unwrap_or(f64::NAN)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().max(0.0).sqrt()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, factor: C64) -> Self {
        self.with_branches(
            self.branches.iter().map(|b| Branch { amplitude: b.amplitude * factor, ..b.clone() }).collect(),
        )
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOL
    }

    fn require_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }

    /// `|⟨self|other⟩|²` for normalized states.
    pub fn fidelity(&self, other: &HybridState) -> Result<f64> {
        self.require_normalized()?;
        other.require_normalized()?;
        Ok(self.inner_product(other)?.norm_sqr().min(1.0))
    }

    /// `⟨target| Tr_rest(|self⟩⟨self|) |target⟩`: overlap with a pure target
    /// that declares a subset of this state's photons and qubus modes. Every
    /// photon and qubus mode not present in `target` is traced out.
    pub fn reduced_fidelity(&self, target: &HybridState) -> Result<f64> {
        self.require_normalized()?;
        target.require_normalized()?;
        let reg = &self.registry;
        let align = Alignment::new(reg, &target.registry);
        if align.photon.iter().any(Option::is_none) || align.qubus.iter().any(Option::is_none) {
            return Err(Error::RegistryMismatch("target declares photons or qubus modes absent from the state".into()));
        }
        let kept_ph: Vec<usize> = align.photon.iter().map(|p| p.unwrap()).collect();
        let kept_q: Vec<usize> = align.qubus.iter().map(|q| q.unwrap()).collect();
        let traced_ph: Vec<usize> = (0..reg.num_photons()).filter(|i| !kept_ph.contains(i)).collect();
        let traced_q: Vec<usize> = (0..reg.qubus.len()).filter(|i| !kept_q.contains(i)).collect();

        // Target labels expressed in this registry's path space, ordered like
        // `kept_ph`.
        let mut tgt: HashMap<Vec<PhotonLabel>, Vec<usize>> = HashMap::new();
        for (t, tb) in target.branches.iter().enumerate() {
            let mut key = Vec::with_capacity(tb.photons.len());
            let mut ok = true;
            for l in &tb.photons {
                match align.path[l.path.index()] {
                    Some(p) => key.push(PhotonLabel { path: p, pol: l.pol }),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                tgt.entry(key).or_default().push(t);
            }
        }

        let mut groups: HashMap<Vec<PhotonLabel>, Vec<(usize, C64)>> = HashMap::new();
        for (bi, b) in self.branches.iter().enumerate() {
            let key: Vec<PhotonLabel> = kept_ph.iter().map(|&i| b.photons[i]).collect();
            let Some(list) = tgt.get(&key) else { continue };
            let mut c = C64::new(0.0, 0.0);
            for &t in list {
                let tb = &target.branches[t];
                let mut term = tb.amplitude.conj() * b.amplitude;
                for (j, &qi) in kept_q.iter().enumerate() {
                    term *= overlap(tb.qubus[j], b.qubus[qi]);
                }
                c += term;
            }
            if c.norm() == 0.0 {
                continue;
            }
            let tkey: Vec<PhotonLabel> = traced_ph.iter().map(|&i| b.photons[i]).collect();
            groups.entry(tkey).or_default().push((bi, c));
        }
        let mut f = 0.0;
        for members in groups.values() {
            for &(b1, c1) in members {
                for &(b2, c2) in members {
                    let mut term = c1 * c2.conj();
                    for &qi in &traced_q {
                        term *= overlap(self.branches[b2].qubus[qi], self.branches[b1].qubus[qi]);
                    }
                    f += term.re;
                }
            }
        }
        Ok(f.clamp(0.0, 1.0))
    }

    /// Merges branches with equal photon labels and qubus amplitudes within
    /// `tol`, then drops branches with `|amplitude| < tol`.
    pub fn canonicalize(&self, tol: f64) -> Self {
        let mut out: Vec<Branch> = Vec::with_capacity(self.branches.len());
        let mut index: HashMap<Vec<PhotonLabel>, Vec<usize>> = HashMap::new();
        for b in &self.branches {
            let slot = index.entry(b.photons.clone()).or_default();
            let hit =
                slot.iter().copied().find(|&j| out[j].qubus.iter().zip(&b.qubus).all(|(x, y)| (x - y).norm() <= tol));
            match hit {
                Some(j) => out[j].amplitude += b.amplitude,
                None => {
                    slot.push(out.len());
                    out.push(b.clone());
                }
            }
        }
        out.retain(|b| b.amplitude.norm() >= tol);
        self.with_branches(out)
    }

    pub fn canonical(&self) -> Self {
        self.canonicalize(CANON_TOL)
    }

    /// Tensor product of states with disjoint photons, paths and qubus modes.
    pub fn tensor(&self, other: &HybridState) -> Result<Self> {
        let mut reg = (*self.registry).clone();
        let mut path_map = vec![PathId(0); other.registry.paths.len()];
        for p in &other.registry.photons {
            if reg.contains_photon(p.id) {
                return Err(Error::DuplicatePhoton(p.id));
            }
            reg.add_photon(p.id, &[])?;
            for &pid in &p.paths {
                let name = other.registry.path_name(pid);
                if reg.path(name).is_some() {
                    return Err(Error::PathCollision {
                        path: name.to_string(),
                        owner: reg.path_owner(reg.path(name).unwrap()),
                    });
                }
                path_map[pid.index()] = reg.register_path(p.id, name)?;
            }
        }
        for q in &other.registry.qubus {
            reg.add_qubus(*q)?;
        }
        let mut branches = Vec::with_capacity(self.branches.len() * other.branches.len());
        for a in &self.branches {
            for b in &other.branches {
                let mut photons = a.photons.clone();
                photons.extend(b.photons.iter().map(|l| PhotonLabel { path: path_map[l.path.index()], pol: l.pol }));
                let mut qubus = a.qubus.clone();
                qubus.extend_from_slice(&b.qubus);
                branches.push(Branch { amplitude: a.amplitude * b.amplitude, photons, qubus });
            }
        }
        Ok(Self::with_registry(reg, branches))
    }

    /// Removes qubus mode `mode` when every branch carries the same coherent
    /// amplitude (within `tol`), i.e. when the mode factors out exactly.
    pub fn split_off_qubus(&self, mode: QubusId, tol: f64) -> Result<Option<(Self, C64)>> {
        let qi = self.registry.qubus_index(mode)?;
        let Some(first) = self.branches.first().map(|b| b.qubus[qi]) else {
            return Ok(None);
        };
        if self.branches.iter().any(|b| (b.qubus[qi] - first).norm() > tol) {
            return Ok(None);
        }
        let mut reg = (*self.registry).clone();
        reg.remove_qubus_at(qi);
        let branches = self
            .branches
            .iter()
            .map(|b| {
                let mut q = b.qubus.clone();
                q.remove(qi);
                Branch { qubus: q, ..b.clone() }
            })
            .collect();
        Ok(Some((Self::with_registry(reg, branches), first)))
    }

    /// Drops a qubus mode without projecting it. Only valid when the caller
    /// has already reduced the amplitudes to the desired conditional state.
    pub(crate) fn drop_qubus_index(&self, qi: usize) -> Self {
        let mut reg = (*self.registry).clone();
        reg.remove_qubus_at(qi);
        let branches = self
            .branches
            .iter()
            .map(|b| {
                let mut q = b.qubus.clone();
                q.remove(qi);
                Branch { qubus: q, ..b.clone() }
            })
            .collect();
        Self::with_registry(reg, branches)
    }

    /// Drops a photon from the registry and every branch. The caller is
    /// responsible for having projected it onto a definite slot.
    pub(crate) fn drop_photon_index(&self, pi: usize) -> Self {
        let mut reg = (*self.registry).clone();
        reg.remove_photon_at(pi);
        let branches = self
            .branches
            .iter()
            .map(|b| {
                let mut p = b.photons.clone();
                p.remove(pi);
                Branch { photons: p, ..b.clone() }
            })
            .collect();
        Self::with_registry(reg, branches)
    }

    /// Splits `photon` off a product state `|rest⟩ ⊗ |photon⟩`.
    ///
    /// Returns `(rest, single)` with both factors normalized. Fails with
    /// [`Error::NotProduct`] when the overlap with the reconstructed product is
    /// below `1 − tol`.
    pub fn factor_out_photon(&self, photon: PhotonId, tol: f64) -> Result<(Self, Self)> {
        let pi = self.registry.photon_index(photon)?;
        let reg = &self.registry;
        let n_q = reg.qubus.len();
        let rest_overlap = |a: &Branch, b: &Branch| -> C64 {
            for (k, (x, y)) in a.photons.iter().zip(&b.photons).enumerate() {
                if k != pi && x != y {
                    return C64::new(0.0, 0.0);
                }
            }
            let mut o = C64::new(1.0, 0.0);
            for q in 0..n_q {
                o *= overlap(a.qubus[q], b.qubus[q]);
            }
            o
        };
        let slots: Vec<PhotonLabel> = {
            let set: BTreeSet<PhotonLabel> = self.branches.iter().map(|b| b.photons[pi]).collect();
            set.into_iter().collect()
        };
        let slot_of = |b: &Branch| slots.iter().position(|s| *s == b.photons[pi]).unwrap();
        // Reduced density matrix column ρ_{s,s0}.
        let ns = slots.len();
        let mut diag = vec![0.0; ns];
        for b in &self.branches {
            for c in &self.branches {
                if b.photons[pi] == c.photons[pi] {
                    diag[slot_of(b)] += (b.amplitude * c.amplitude.conj() * rest_overlap(c, b)).re;
                }
            }
        }
        let s0 = (0..ns)
            .max_by(|&a, &b| diag[a].total_cmp(&diag[b]))
            .ok_or_else(|| Error::NotProduct("empty state".into()))?;
        let mut col = vec![C64::new(0.0, 0.0); ns];
        for b in &self.branches {
            for c in &self.branches {
                if c.photons[pi] == slots[s0] {
                    col[slot_of(b)] += b.amplitude * c.amplitude.conj() * rest_overlap(c, b);
                }
            }
        }
        let cn = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if cn == 0.0 {
            return Err(Error::NotProduct("photon carries no amplitude".into()));
        }
        let phi: Vec<C64> = col.iter().map(|c| c / cn).collect();

        let rest_branches: Vec<Branch> = self
            .branches
            .iter()
            .map(|b| {
                let mut p = b.photons.clone();
                p.remove(pi);
                Branch { amplitude: b.amplitude * phi[slot_of(b)].conj(), photons: p, qubus: b.qubus.clone() }
            })
            .collect();
        let mut rest_reg = (**reg).clone();
        rest_reg.remove_photon_at(pi);
        let rest = Self::with_registry(rest_reg, rest_branches).canonical();
        let rest = rest.normalize()?;

        let mut single_reg = ModeRegistry::new();
        single_reg.add_photon(photon, &[])?;
        let mut single_branches = Vec::new();
        for (s, amp) in slots.iter().zip(&phi) {
            let pid = single_reg.register_path(photon, reg.path_name(s.path))?;
            if amp.norm() >= CANON_TOL {
                single_branches.push(Branch {
                    amplitude: *amp,
                    photons: vec![PhotonLabel { path: pid, pol: s.pol }],
                    qubus: Vec::new(),
                });
            }
        }
        let single = Self::with_registry(single_reg, single_branches);
        let product = rest.tensor(&single)?;
        let f = self.normalize()?.fidelity(&product)?;
        if f < 1.0 - tol {
            return Err(Error::NotProduct(format!("photon {photon} is entangled (product fidelity {f:.3e})")));
        }
        Ok((rest, single))
    }

    /// Amplitude vector of polarization qubits carried by `photons`, each on a
    /// single path, in lexicographic order. The state may not contain other
    /// photons or qubus modes.
    pub fn polarization_amplitudes(&self, photons: &[PhotonId]) -> Result<Vec<C64>> {
        let reg = &self.registry;
        if reg.num_photons() != photons.len() || !reg.qubus.is_empty() {
            return Err(Error::precondition("state must contain exactly the listed photons and no qubus modes"));
        }
        let idx: Vec<usize> = photons.iter().map(|p| reg.photon_index(*p)).collect::<Result<_>>()?;
        let state = self.canonical();
        for (&i, &p) in idx.iter().zip(photons) {
            let paths: BTreeSet<PathId> = state.branches.iter().map(|b| b.photons[i].path).collect();
            if paths.len() > 1 {
                return Err(Error::MultiPath(p));
            }
        }
        let n = photons.len();
        let mut out = vec![C64::new(0.0, 0.0); 1 << n];
        for b in &state.branches {
            let mut k = 0;
            for &i in &idx {
                k = (k << 1) | b.photons[i].pol.bit();
            }
            out[k] += b.amplitude;
        }
        Ok(out)
    }

    /// Amplitudes of a lone photon over `paths`, indexed `2·j + pol`.
    pub fn path_amplitudes(&self, photon: PhotonId, paths: &[String]) -> Result<Vec<C64>> {
        let reg = &self.registry;
        if reg.num_photons() != 1 || !reg.qubus.is_empty() {
            return Err(Error::precondition("state must contain only the qudit photon and no qubus modes"));
        }
        let pi = reg.photon_index(photon)?;
        let ids: Vec<PathId> = paths.iter().map(|p| reg.path_of(photon, p)).collect::<Result<_>>()?;
        let mut out = vec![C64::new(0.0, 0.0); 2 * paths.len()];
        for b in &self.canonical().branches {
            let l = b.photons[pi];
            let j = ids.iter().position(|p| *p == l.path).ok_or_else(|| {
                Error::precondition(format!("photon occupies unlisted path `{}`", reg.path_name(l.path)))
            })?;
            out[2 * j + l.pol.bit()] += b.amplitude;
        }
        Ok(out)
    }

    pub fn to_snapshot(&self) -> StateSnapshot {
        let reg = &self.registry;
        StateSnapshot {
            photons: reg
                .photons
                .iter()
                .map(|p| PhotonDecl {
                    id: p.id,
                    paths: p.paths.iter().map(|x| reg.path_name(*x).to_string()).collect(),
                })
                .collect(),
            qubus_modes: reg.qubus.clone(),
            branches: self
                .branches
                .iter()
                .map(|b| BranchSnapshot {
                    amplitude: [b.amplitude.re, b.amplitude.im],
                    photons: b
                        .photons
                        .iter()
                        .zip(&reg.photons)
                        .map(|(l, p)| PhotonSlot { id: p.id, path: reg.path_name(l.path).to_string(), pol: l.pol })
                        .collect(),
                    qubus: b.qubus.iter().map(|q| [q.re, q.im]).collect(),
                })
                .collect(),
        }
    }

    pub fn from_snapshot(snap: &StateSnapshot) -> Result<Self> {
        let mut reg = ModeRegistry::new();
        for p in &snap.photons {
            let paths: Vec<&str> = p.paths.iter().map(String::as_str).collect();
            reg.add_photon(p.id, &paths)?;
        }
        for q in &snap.qubus_modes {
            reg.add_qubus(*q)?;
        }
        let mut branches = Vec::with_capacity(snap.branches.len());
        for b in &snap.branches {
            let mut photons = vec![None; reg.num_photons()];
            for slot in &b.photons {
                let i = reg.photon_index(slot.id)?;
                let path = reg.path_of(slot.id, &slot.path)?;
                photons[i] = Some(PhotonLabel { path, pol: slot.pol });
            }
            let photons: Option<Vec<PhotonLabel>> = photons.into_iter().collect();
            let photons = photons.ok_or_else(|| Error::Parse("branch does not place every photon".into()))?;
            branches.push(Branch {
                amplitude: C64::new(b.amplitude[0], b.amplitude[1]),
                photons,
                qubus: b.qubus.iter().map(|q| C64::new(q[0], q[1])).collect(),
            });
        }
        Self::from_parts(reg, branches)
    }
}

impl fmt::Display for HybridState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reg = &self.registry;
        for (k, b) in self.branches.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.4}{:+.4}i)", b.amplitude.re, b.amplitude.im)?;
            for (l, p) in b.photons.iter().zip(&reg.photons) {
                write!(f, "|{:?}⟩{}[{}]", l.pol, p.id, reg.path_name(l.path))?;
            }
            for (q, id) in b.qubus.iter().zip(&reg.qubus) {
                write!(f, "|{:.3}{:+.3}i⟩{}", q.re, q.im, id)?;
            }
        }
        Ok(())
    }
}

/// JSON form of a [`HybridState`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub photons: Vec<PhotonDecl>,
    pub qubus_modes: Vec<QubusId>,
    pub branches: Vec<BranchSnapshot>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonDecl {
    pub id: PhotonId,
    pub paths: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSnapshot {
    pub amplitude: [f64; 2],
    pub photons: Vec<PhotonSlot>,
    pub qubus: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonSlot {
    pub id: PhotonId,
    pub path: String,
    pub pol: Pol,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn h(id: u32, path: &str, alpha: C64) -> HybridState {
        HybridState::single_photon(PhotonId(id), path, c(1.0, 0.0), c(0.0, 0.0))
            .unwrap()
            .tensor(&HybridState::coherent(QubusId(0), alpha))
            .unwrap()
    }

    #[test]
    fn normalized_state_with_itself() {
        let s = h(1, "a", c(2.0, 0.0));
        assert!((s.inner_product(&s).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn opposite_coherent_branches_overlap() {
        let a = 20f64.sqrt();
        let s = h(1, "a", c(a, 0.0));
        let t = h(1, "a", c(-a, 0.0));
        let o = s.inner_product(&t).unwrap().norm();
        assert!((o - (-40f64).exp()).abs() < 1e-30);
    }

    #[test]
    fn orthogonal_polarizations() {
        let s = HybridState::single_photon(PhotonId(1), "a", c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let t = HybridState::single_photon(PhotonId(1), "a", c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(s.inner_product(&t).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn registry_mismatch_is_an_error() {
        let s = HybridState::plus(PhotonId(1), "a").unwrap();
        let t = HybridState::plus(PhotonId(2), "b").unwrap();
        assert!(matches!(s.inner_product(&t), Err(Error::RegistryMismatch(_))));
    }

    #[test]
    fn fidelity_examples() {
        let plus = HybridState::plus(PhotonId(1), "a").unwrap();
        let hh = HybridState::single_photon(PhotonId(1), "a", c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!((plus.fidelity(&plus).unwrap() - 1.0).abs() < 1e-14);
        assert!((plus.fidelity(&hh).unwrap() - 0.5).abs() < 1e-14);
        let rotated = plus.scale(C64::from_polar(1.0, 0.77));
        assert!((plus.fidelity(&rotated).unwrap() - 1.0).abs() < 1e-14);
        let unnorm = plus.scale(c(2.0, 0.0));
        assert!(matches!(plus.fidelity(&unnorm), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn canonicalize_merges_and_drops() {
        let s = HybridState::plus(PhotonId(1), "a").unwrap();
        let b = s.branches()[0].clone();
        let merged = s
            .with_branches(vec![
                Branch { amplitude: c(0.5, 0.0), ..b.clone() },
                Branch { amplitude: c(0.5, 0.0), ..b.clone() },
            ])
            .canonical();
        assert_eq!(merged.num_branches(), 1);
        assert!((merged.branches()[0].amplitude - c(1.0, 0.0)).norm() < 1e-15);

        let tiny = s.with_branches(vec![
            b.clone(),
            Branch { amplitude: c(1e-15, 0.0), photons: s.branches()[1].photons.clone(), qubus: vec![] },
        ]);
        assert_eq!(tiny.canonical().num_branches(), 1);
    }

    #[test]
    fn tensor_and_norm() {
        let a = HybridState::single_photon(PhotonId(1), "a", c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let b = HybridState::single_photon(PhotonId(2), "b", c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.num_branches(), 1);
        assert_eq!(ab.branches()[0].amplitude, c(1.0, 0.0));
        assert_eq!(ab.branches()[0].photons[0].pol, Pol::H);
        assert_eq!(ab.branches()[0].photons[1].pol, Pol::V);
        assert!((ab.norm() - 1.0).abs() < 1e-15);
        assert!(matches!(a.tensor(&a), Err(Error::DuplicatePhoton(_))));
        let clash = HybridState::plus(PhotonId(3), "a").unwrap();
        assert!(matches!(a.tensor(&clash), Err(Error::PathCollision { .. })));
    }

    #[test]
    fn polarization_state_normalizes() {
        let s = HybridState::polarization_state(
            &[(PhotonId(1), "1"), (PhotonId(2), "2")],
            &[c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 1.0), c(0.3, 0.0)],
        )
        .unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
        let amps = s.polarization_amplitudes(&[PhotonId(1), PhotonId(2)]).unwrap();
        let n = (1.0f64 + 4.0 + 2.0 + 0.09).sqrt();
        assert!((amps[1] - c(0.0, 2.0 / n)).norm() < 1e-14);
        // reversed photon order transposes the index bits
        let rev = s.polarization_amplitudes(&[PhotonId(2), PhotonId(1)]).unwrap();
        assert!((rev[2] - amps[1]).norm() < 1e-15);
    }

    #[test]
    fn reduced_fidelity_traces_out_spectators() {
        let plus = HybridState::plus(PhotonId(1), "a").unwrap();
        let spectator = HybridState::coherent(QubusId(4), c(3.0, 1.0));
        let s = plus.tensor(&spectator).unwrap();
        assert!((s.reduced_fidelity(&plus).unwrap() - 1.0).abs() < 1e-14);

        // Bell pair: reduced state of one photon is maximally mixed.
        let bell = HybridState::polarization_state(
            &[(PhotonId(1), "a"), (PhotonId(2), "b")],
            &[c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0)],
        )
        .unwrap();
        let f = bell.reduced_fidelity(&plus).unwrap();
        assert!((f - 0.5).abs() < 1e-14);
    }

    #[test]
    fn factor_out_product_photon() {
        let a = HybridState::single_photon(PhotonId(1), "a", c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let b = HybridState::plus(PhotonId(2), "b").unwrap();
        let q = HybridState::coherent(QubusId(0), c(1.0, 1.0));
        let s = a.tensor(&b).unwrap().tensor(&q).unwrap();
        let (rest, single) = s.factor_out_photon(PhotonId(1), 1e-12).unwrap();
        assert!((single.fidelity(&a).unwrap() - 1.0).abs() < 1e-12);
        assert!((rest.fidelity(&b.tensor(&q).unwrap()).unwrap() - 1.0).abs() < 1e-12);

        let bell = HybridState::polarization_state(
            &[(PhotonId(1), "a"), (PhotonId(2), "b")],
            &[c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0)],
        )
        .unwrap();
        assert!(matches!(bell.factor_out_photon(PhotonId(1), 1e-9), Err(Error::NotProduct(_))));
    }

    #[test]
    fn snapshot_round_trip() {
        let s = HybridState::plus(PhotonId(1), "a")
            .unwrap()
            .tensor(&HybridState::coherent(QubusId(2), c(0.5, -1.0)))
            .unwrap();
        let json = serde_json::to_string(&s.to_snapshot()).unwrap();
        let back = HybridState::from_snapshot(&serde_json::from_str(&json).unwrap()).unwrap();
        assert!((s.fidelity(&back).unwrap() - 1.0).abs() < 1e-14);
        assert!(json.contains("\"amplitude\":["));
        assert!(json.contains("\"pol\":\"H\""));
    }

    #[test]
    fn split_off_factorized_qubus() {
        let s = HybridState::plus(PhotonId(1), "a")
            .unwrap()
            .tensor(&HybridState::coherent(QubusId(0), c(2.0, 0.0)))
            .unwrap();
        let (rest, alpha) = s.split_off_qubus(QubusId(0), 1e-12).unwrap().unwrap();
        assert_eq!(alpha, c(2.0, 0.0));
        assert!(rest.registry().qubus_modes().is_empty());
    }
}
