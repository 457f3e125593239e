//! Interferometer synthesis for path-encoded qudits.
//!
//! [`reck_decompose`] factors a unitary into a triangular mesh of two-path
//! rotations followed by per-path phases; the mesh is executed with the
//! ordinary optical elements.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::elements::{apply_all, ElementOp, Selector};
use crate::error::{Error, Result};
use crate::state::{HybridState, PhotonId, C64};

pub type CMatrix = DMatrix<C64>;

/// Accepted `‖U†U − I‖_max` for inputs declared unitary.
pub const UNITARY_TOL: f64 = 1e-10;

/// Two-mode element acting on modes `(a, b)` as
/// `[[e^{iφ}cosθ, −sinθ], [e^{iφ}sinθ, cosθ]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub a: usize,
    pub b: usize,
    pub theta: f64,
    pub phi: f64,
}

impl Rotation {
    fn matrix(&self, n: usize) -> CMatrix {
        let mut m = CMatrix::identity(n, n);
        let (s, c) = self.theta.sin_cos();
        let e = C64::from_polar(1.0, self.phi);
        m[(self.a, self.a)] = e * c;
        m[(self.a, self.b)] = C64::new(-s, 0.0);
        m[(self.b, self.a)] = e * s;
        m[(self.b, self.b)] = C64::new(c, 0.0);
        m
    }
}

/// Rotations in application order followed by output phases `e^{iφ_j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub modes: usize,
    pub rotations: Vec<Rotation>,
    pub phases: Vec<f64>,
}

impl Mesh {
    pub fn identity(modes: usize) -> Self {
        Mesh { modes, rotations: Vec::new(), phases: vec![0.0; modes] }
    }

    /// The unitary realized by the mesh.
    pub fn matrix(&self) -> CMatrix {
        let n = self.modes;
        let mut m = CMatrix::identity(n, n);
        for r in &self.rotations {
            m = r.matrix(n) * m;
        }
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            self.phases.iter().map(|p| C64::from_polar(1.0, *p)),
        ));
        d * m
    }

    /// Element sequence realizing the mesh on `photon` across `paths`.
    pub fn to_ops(&self, photon: PhotonId, paths: &[String]) -> Result<Vec<ElementOp>> {
        if paths.len() != self.modes {
            return Err(Error::invalid(format!("mesh has {} modes but {} paths were given", self.modes, paths.len())));
        }
        let mut ops: Vec<ElementOp> = self
            .rotations
            .iter()
            .map(|r| ElementOp::PathRotation {
                photon,
                a: paths[r.a].clone(),
                b: paths[r.b].clone(),
                theta: r.theta,
                phi: r.phi,
            })
            .collect();
        for (p, phi) in paths.iter().zip(&self.phases) {
            if *phi != 0.0 {
                ops.push(ElementOp::Phase { selector: Selector::path(photon, p.clone()), phi: *phi });
            }
        }
        Ok(ops)
    }
}

/// `max |(U†U − I)_{ij}|`.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    let g = u.adjoint() * u - CMatrix::identity(n, n);
    g.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn require_unitary(u: &CMatrix) -> Result<()> {
    let d = unitarity_deviation(u);
    if d.is_nan() || d >= UNITARY_TOL {
        return Err(Error::NotUnitary(d));
    }
    Ok(())
}

/// Triangular decomposition `U = D · T_K ⋯ T_1` with at most `N(N−1)/2`
/// nearest-neighbour rotations.
pub fn reck_decompose(u: &CMatrix) -> Result<Mesh> {
    require_unitary(u)?;
    let n = u.nrows();
    let mut m = u.clone();
    let mut rotations = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for row in (1..n).rev() {
        for c in 0..row {
            let (x, y) = (m[(row, c)], m[(row, c + 1)]);
            let theta = x.norm().atan2(y.norm());
            let phi = if x.norm() == 0.0 { 0.0 } else { x.arg() - y.arg() };
            let rot = Rotation { a: c, b: c + 1, theta, phi };
            m *= rot.matrix(n).adjoint();
            rotations.push(rot);
        }
    }
    let phases = (0..n).map(|j| m[(j, j)].arg()).collect();
    Ok(Mesh { modes: n, rotations, phases })
}

/// Applies `mesh` to the amplitudes of `photon` on `paths`. All occupied
/// listed paths must carry the same polarization.
pub fn mesh_apply(s: &HybridState, photon: PhotonId, paths: &[String], mesh: &Mesh) -> Result<HybridState> {
    let reg = s.registry();
    let idx = reg.photon_index(photon)?;
    let ids = paths.iter().map(|p| reg.path_of(photon, p)).collect::<Result<Vec<_>>>()?;
    let mut pol = None;
    for b in s.branches() {
        let l = b.photons[idx];
        if ids.contains(&l.path) {
            match pol {
                None => pol = Some(l.pol),
                Some(p) if p != l.pol => return Err(Error::precondition("mesh input paths carry mixed polarizations")),
                _ => {}
            }
        }
    }
    apply_all(s, &mesh.to_ops(photon, paths)?)
}

/// `F_{kj} = e^{2πijk/N}/√N`.
pub fn qft_matrix(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |k, j| C64::from_polar(scale, 2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64))
}

/// Real 4×4 interference with `±½` entries that replaces the QFT for
/// four-path merging.
pub fn sign_interference4() -> CMatrix {
    let rows: [[f64; 4]; 4] =
        [[1.0, 1.0, 1.0, 1.0], [1.0, 1.0, -1.0, -1.0], [1.0, -1.0, -1.0, 1.0], [1.0, -1.0, 1.0, -1.0]];
    CMatrix::from_fn(4, 4, |i, j| C64::new(rows[i][j] / 2.0, 0.0))
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of
/// `diag(R)` divided out. Deterministic per seed.
pub fn random_haar_unitary(n: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im) / 2f64.sqrt()
    });
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() == 0.0 { C64::new(1.0, 0.0) } else { d / d.norm() };
        for i in 0..n {
            u[(i, j)] *= ph;
        }
    }
    u
}

/// Haar-random unit vector of dimension `n`.
pub fn random_state_vector(n: usize, seed: u64) -> Vec<C64> {
    let u = random_haar_unitary(n, seed);
    (0..n).map(|i| u[(i, 0)]).collect()
}

/// Parses a square matrix from JSON: a list of rows whose entries are either
/// numbers or `[re, im]` pairs.
pub fn matrix_from_json(text: &str) -> Result<CMatrix> {
    matrix_from_value(&serde_json::from_str(text)?)
}

/// [`matrix_from_json`] for an already parsed value.
pub fn matrix_from_value(value: &serde_json::Value) -> Result<CMatrix> {
    let rows: Vec<Vec<serde_json::Value>> = serde_json::from_value(value.clone())?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("matrix must be a non-empty square list of rows".into()));
    }
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = parse_complex(v)
                .ok_or_else(|| Error::Parse(format!("entry ({i}, {j}) is not a number or [re, im]")))?;
        }
    }
    Ok(m)
}

pub fn parse_complex(v: &serde_json::Value) -> Option<C64> {
    match v {
        serde_json::Value::Number(x) => Some(C64::new(x.as_f64()?, 0.0)),
        serde_json::Value::Array(pair) if pair.len() == 2 => Some(C64::new(pair[0].as_f64()?, pair[1].as_f64()?)),
        _ => None,
    }
}

pub fn matrix_to_json(m: &CMatrix) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
    serde_json::json!(rows)
}

/// Frobenius norm of `a − b`.
pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
