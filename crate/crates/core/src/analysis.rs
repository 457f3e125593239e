//! Parity-gate error probability, QND peak separation, photon-number
//! distributions and parameter sweeps.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherent::{auto_cutoff, poisson_pmf};
use crate::detection::peak_mean;
use crate::error::{Error, Result};
use crate::gates::{parity_gate, GateParams};
use crate::state::{BranchSnapshot, HybridState, PhotonDecl, PhotonId, PhotonSlot, Pol, StateSnapshot};
use crate::synthesis::random_state_vector;

/// Tail mass a photon-number cutoff must leave uncovered at most.
pub const CUTOFF_TAIL: f64 = 1e-14;

/// Dominance threshold, relative to the peak value, for counting the
/// dominant photon numbers of a distribution.
pub const DOMINANCE_THRESHOLD: f64 = 1e-4;

fn check_positive(x: f64, name: &str) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::invalid(format!("{name} must be finite and non-negative, got {x}")));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid(format!("eta must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

/// `|β|² = 2α²sin²θ`.
pub fn beta_sq(alpha: f64, theta: f64) -> f64 {
    let s = theta.sin();
    2.0 * alpha * alpha * s * s
}

/// Closed-form estimate `exp{−2(1 − e^{−½ηγ²θ_p²}) α² sin²θ}`.
pub fn error_probability_formula(alpha: f64, theta: f64, gamma: f64, eta: f64, theta_probe: f64) -> Result<f64> {
    for (x, n) in [(alpha, "alpha"), (theta, "theta"), (gamma, "gamma"), (theta_probe, "theta_probe")] {
        check_positive(x, n)?;
    }
    check_eta(eta)?;
    let probe = 1.0 - (-0.5 * eta * gamma * gamma * theta_probe * theta_probe).exp();
    Ok((-probe * beta_sq(alpha, theta)).exp())
}

/// Exact probability that the detector sees nothing although the qubus
/// carries photons: `Σ_n Poisson(|β|², n) · e^{−η μ_n}` with
/// `μ_n = 2γ²sin²(nθ_p/2)`. The `n = 0` term counts as an error too, because
/// the vacuum and the cat's even components cannot be told apart.
pub fn error_probability_direct(
    alpha: f64,
    theta: f64,
    gamma: f64,
    eta: f64,
    theta_probe: f64,
    cutoff: Option<usize>,
) -> Result<f64> {
    for (x, n) in [(alpha, "alpha"), (theta, "theta"), (gamma, "gamma"), (theta_probe, "theta_probe")] {
        check_positive(x, n)?;
    }
    check_eta(eta)?;
    let mean = beta_sq(alpha, theta);
    let cutoff = cutoff.unwrap_or_else(|| auto_cutoff(mean));
    let tail = poisson_tail(mean, cutoff);
    if tail > CUTOFF_TAIL {
        return Err(Error::CutoffTooSmall { cutoff, tail });
    }
    let total: f64 = (0..=cutoff).map(|n| poisson_pmf(mean, n) * (-eta * peak_mean(gamma, theta_probe, n)).exp()).sum();
    Ok(total.clamp(0.0, 1.0))
}

/// `Σ_{n > cutoff} Poisson(mean, n)`, summed term by term so that tiny tails
/// are not lost to cancellation.
fn poisson_tail(mean: f64, cutoff: usize) -> f64 {
    let mut tail = 0.0;
    let mut n = cutoff + 1;
    loop {
        let w = poisson_pmf(mean, n);
        tail += w;
        if (n as f64 > mean && w < 1e-30) || n > cutoff + 100_000 {
            return tail;
        }
        n += 1;
    }
}

/// Poisson pmf of mean `mean` over `0..=auto_cutoff(mean)`.
pub fn poisson_distribution(mean: f64) -> Vec<f64> {
    (0..=auto_cutoff(mean)).map(|n| poisson_pmf(mean, n)).collect()
}

/// `Σ_n min(P_{k1}(n), P_{k2}(n))` for the Poisson responses of peaks `k1`
/// and `k2`.
pub fn peak_overlap(gamma: f64, theta_probe: f64, k1: usize, k2: usize) -> Result<f64> {
    if k1 == k2 {
        return Err(Error::invalid(format!("peak overlap needs two different peaks, got {k1} twice")));
    }
    check_positive(gamma, "gamma")?;
    check_positive(theta_probe, "theta_probe")?;
    let (m1, m2) = (peak_mean(gamma, theta_probe, k1), peak_mean(gamma, theta_probe, k2));
    let cutoff = auto_cutoff(m1.max(m2));
    Ok((0..=cutoff).map(|n| poisson_pmf(m1, n).min(poisson_pmf(m2, n))).sum())
}

/// Inclusive range of photon numbers whose probability is at least
/// `threshold · max(pmf)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominantRange {
    pub threshold: f64,
    pub lo: usize,
    pub hi: usize,
    pub count: usize,
    /// Probability mass inside `lo..=hi`.
    pub mass: f64,
}

pub fn dominant_range(pmf: &[f64], threshold: f64) -> DominantRange {
    let peak = pmf.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..pmf.len()).filter(|&n| pmf[n] >= threshold * peak).collect();
    let (lo, hi) = (keep[0], keep[keep.len() - 1]);
    DominantRange { threshold, lo, hi, count: hi - lo + 1, mass: mass_between(pmf, lo, hi) }
}

/// `Σ_{n=lo}^{hi} pmf[n]`.
pub fn mass_between(pmf: &[f64], lo: usize, hi: usize) -> f64 {
    pmf.iter().skip(lo).take(hi + 1 - lo).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakDistribution {
    pub k: usize,
    pub mean: f64,
    pub pmf: Vec<f64>,
}

/// Photon-number distribution of the measured qubus beam and the detector
/// responses of the first few peaks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig2Data {
    pub gamma: f64,
    pub theta_probe: f64,
    pub beta_sq: f64,
    pub qubus_pmf: Vec<f64>,
    pub dominant: DominantRange,
    pub peaks: Vec<PeakDistribution>,
    /// Overlaps of consecutive peaks `(k, k+1)`.
    pub adjacent_overlaps: Vec<f64>,
}

pub fn fig2_data(gamma: f64, theta_probe: f64, beta_sq: f64, peaks: usize) -> Result<Fig2Data> {
    check_positive(gamma, "gamma")?;
    check_positive(theta_probe, "theta_probe")?;
    check_positive(beta_sq, "beta_sq")?;
    if peaks == 0 {
        return Err(Error::invalid("at least one peak is required"));
    }
    let qubus_pmf = poisson_distribution(beta_sq);
    let dominant = dominant_range(&qubus_pmf, DOMINANCE_THRESHOLD);
    let peaks_out: Vec<PeakDistribution> = (1..=peaks)
        .map(|k| {
            let mean = peak_mean(gamma, theta_probe, k);
            PeakDistribution { k, mean, pmf: poisson_distribution(mean) }
        })
        .collect();
    let adjacent_overlaps = (1..peaks).map(|k| peak_overlap(gamma, theta_probe, k, k + 1)).collect::<Result<_>>()?;
    Ok(Fig2Data { gamma, theta_probe, beta_sq, qubus_pmf, dominant, peaks: peaks_out, adjacent_overlaps })
}

impl Fig2Data {
    /// Writes `fig2a.csv` (qubus pmf) and `fig2b_k{k}.csv` (peak responses)
    /// into `dir`, each with an `n,probability` header.
    pub fn write_csv(&self, dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        let path = dir.join("fig2a.csv");
        crate::detection::write_pmf_csv(std::fs::File::create(&path)?, &self.qubus_pmf)?;
        files.push(path);
        for peak in &self.peaks {
            let path = dir.join(format!("fig2b_k{}.csv", peak.k));
            crate::detection::write_pmf_csv(std::fs::File::create(&path)?, &peak.pmf)?;
            files.push(path);
        }
        Ok(files)
    }
}

/// Two-photon input on paths `p1`, `p2` with seeded random amplitudes.
fn parity_input(seed: u64) -> Result<(HybridState, Vec<crate::state::C64>)> {
    let a = random_state_vector(4, seed);
    let s = HybridState::polarization_state(&[(PhotonId(1), "p1"), (PhotonId(2), "p2")], &a)?;
    Ok((s, a))
}

/// Parity-gate output with the even-parity part of photon 2 on `even` and
/// the odd-parity part on `odd`.
pub fn ideal_parity_output(a: &[crate::state::C64], odd: &str, even: &str) -> Result<HybridState> {
    let slot = |id, path: &str, pol| PhotonSlot { id: PhotonId(id), path: path.to_string(), pol };
    let branch = |amp: crate::state::C64, p1: Pol, path: &str, p2: Pol| BranchSnapshot {
        amplitude: [amp.re, amp.im],
        photons: vec![slot(1, "p1", p1), slot(2, path, p2)],
        qubus: Vec::new(),
    };
    let snap = StateSnapshot {
        photons: vec![
            PhotonDecl { id: PhotonId(1), paths: vec!["p1".into()] },
            PhotonDecl { id: PhotonId(2), paths: vec![odd.into(), even.into()] },
        ],
        qubus_modes: Vec::new(),
        branches: vec![
            branch(a[0], Pol::H, even, Pol::H),
            branch(a[1], Pol::H, odd, Pol::V),
            branch(a[2], Pol::V, odd, Pol::H),
            branch(a[3], Pol::V, even, Pol::V),
        ],
    };
    HybridState::from_snapshot(&snap)
}

/// Outcome-averaged fidelity of the parity gate with its ideal output, for
/// a seeded random input at the given `|β|²`.
pub fn gate_fidelity(beta_sq: f64, theta: f64, seed: u64) -> Result<f64> {
    check_positive(beta_sq, "beta_sq")?;
    let p = GateParams::with_beta_sq(theta, beta_sq);
    let (s, a) = parity_input(seed)?;
    let run = parity_gate(&s, PhotonId(1), PhotonId(2), &p)?;
    let ideal = ideal_parity_output(&a, &run.out.odd, &run.out.even)?;
    let mut f = 0.0;
    for o in &run.outcomes {
        f += o.probability * o.state.reduced_fidelity(&ideal)?;
    }
    Ok(f)
}

/// Quantity evaluated at every grid point of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    PeFormula,
    PeDirect,
    PeakOverlap,
    GateFidelity,
    Pmf,
}

/// Parameters of one sweep point. When `beta_sq` is set, `alpha` is derived
/// from it and `theta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepPoint {
    pub alpha: f64,
    pub theta: f64,
    pub gamma: f64,
    pub theta_probe: f64,
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_sq: Option<f64>,
}

impl Default for SweepPoint {
    fn default() -> Self {
        SweepPoint { alpha: 4000f64.sqrt(), theta: 0.05, gamma: 100.0, theta_probe: 0.05, eta: 0.95, beta_sq: None }
    }
}

impl SweepPoint {
    pub fn effective_alpha(&self) -> f64 {
        match self.beta_sq {
            Some(b) => {
                let s = self.theta.sin();
                (b / (2.0 * s * s)).sqrt()
            }
            None => self.alpha,
        }
    }

    pub fn effective_beta_sq(&self) -> f64 {
        self.beta_sq.unwrap_or_else(|| beta_sq(self.alpha, self.theta))
    }

    fn describe(&self) -> String {
        let mut s = format!(
            "alpha={}, theta={}, gamma={}, theta_probe={}, eta={}",
            self.alpha, self.theta, self.gamma, self.theta_probe, self.eta
        );
        if let Some(b) = self.beta_sq {
            s.push_str(&format!(", beta_sq={b}"));
        }
        s
    }
}

/// Grid axes; a missing axis keeps the base value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    #[serde(default)]
    pub theta_probe: Option<Vec<f64>>,
    #[serde(default)]
    pub eta: Option<Vec<f64>>,
    #[serde(default)]
    pub beta_sq: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub quantity: Quantity,
    #[serde(default)]
    pub base: SweepPoint,
    #[serde(default)]
    pub grid: Grid,
    /// Peaks compared by `peak_overlap`.
    #[serde(default = "default_peaks")]
    pub peaks: (usize, usize),
    /// Seed of the random input used by `gate_fidelity`.
    #[serde(default)]
    pub seed: u64,
}

fn default_peaks() -> (usize, usize) {
    (1, 2)
}

impl SweepSpec {
    pub fn new(quantity: Quantity) -> Self {
        SweepSpec { quantity, base: SweepPoint::default(), grid: Grid::default(), peaks: default_peaks(), seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let axes = [
            ("alpha", &self.grid.alpha),
            ("theta", &self.grid.theta),
            ("gamma", &self.grid.gamma),
            ("theta_probe", &self.grid.theta_probe),
            ("eta", &self.grid.eta),
            ("beta_sq", &self.grid.beta_sq),
        ];
        for (name, axis) in axes {
            if let Some(v) = axis {
                if v.is_empty() {
                    return Err(Error::invalid(format!("grid axis `{name}` is empty")));
                }
                for &x in v {
                    check_positive(x, name)?;
                }
            }
        }
        Ok(())
    }

    /// Grid points in row order, the last axis varying fastest.
    pub fn points(&self) -> Vec<SweepPoint> {
        let one = |axis: &Option<Vec<f64>>, base: f64| axis.clone().unwrap_or_else(|| vec![base]);
        let b = self.base;
        let beta: Vec<Option<f64>> = match &self.grid.beta_sq {
            Some(v) => v.iter().map(|x| Some(*x)).collect(),
            None => vec![b.beta_sq],
        };
        let mut out = Vec::new();
        for alpha in one(&self.grid.alpha, b.alpha) {
            for theta in one(&self.grid.theta, b.theta) {
                for gamma in one(&self.grid.gamma, b.gamma) {
                    for theta_probe in one(&self.grid.theta_probe, b.theta_probe) {
                        for eta in one(&self.grid.eta, b.eta) {
                            for &beta_sq in &beta {
                                out.push(SweepPoint { alpha, theta, gamma, theta_probe, eta, beta_sq });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: SweepPoint,
    /// One value for scalar quantities, the whole pmf for `pmf`.
    pub values: Vec<f64>,
}

pub fn evaluate(spec: &SweepSpec, pt: &SweepPoint) -> Result<Vec<f64>> {
    let alpha = pt.effective_alpha();
    Ok(match spec.quantity {
        Quantity::PeFormula => vec![error_probability_formula(alpha, pt.theta, pt.gamma, pt.eta, pt.theta_probe)?],
        Quantity::PeDirect => {
            vec![error_probability_direct(alpha, pt.theta, pt.gamma, pt.eta, pt.theta_probe, None)?]
        }
        Quantity::PeakOverlap => vec![peak_overlap(pt.gamma, pt.theta_probe, spec.peaks.0, spec.peaks.1)?],
        Quantity::GateFidelity => vec![gate_fidelity(pt.effective_beta_sq(), pt.theta, spec.seed)?],
        Quantity::Pmf => poisson_distribution(pt.effective_beta_sq()),
    })
}

/// Evaluates every grid point in parallel; rows come back in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    spec.points()
        .into_par_iter()
        .enumerate()
        .map(|(index, point)| {
            evaluate(spec, &point).map(|values| SweepRow { point, values }).map_err(|e| Error::SweepPoint {
                index,
                coords: point.describe(),
                source: Box::new(e),
            })
        })
        .collect()
}

/// CSV with header `alpha,theta,gamma,theta_probe,eta,beta_sq,index,value`;
/// scalar quantities have `index = 0`.
pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["alpha", "theta", "gamma", "theta_probe", "eta", "beta_sq", "index", "value"])?;
    for r in rows {
        let p = &r.point;
        for (i, v) in r.values.iter().enumerate() {
            wr.write_record([
                format!("{:?}", p.effective_alpha()),
                format!("{:?}", p.theta),
                format!("{:?}", p.gamma),
                format!("{:?}", p.theta_probe),
                format!("{:?}", p.eta),
                format!("{:?}", p.effective_beta_sq()),
                i.to_string(),
                format!("{v:e}"),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_limits() {
        assert!((error_probability_formula(60.0, 1e-12, 100.0, 0.9, 0.05).unwrap() - 1.0).abs() < 1e-12);
        assert!((error_probability_formula(60.0, 0.05, 100.0, 0.0, 0.05).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn direct_without_probe_information_is_one() {
        assert!((error_probability_direct(60.0, 0.05, 0.0, 0.9, 0.05, None).unwrap() - 1.0).abs() < 1e-12);
        assert!((error_probability_direct(60.0, 0.0, 100.0, 0.9, 0.05, None).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn short_cutoff_is_rejected() {
        match error_probability_direct(4000f64.sqrt(), 0.05, 100.0, 0.9, 0.05, Some(20)) {
            Err(Error::CutoffTooSmall { cutoff: 20, tail }) => assert!(tail > 0.1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn equal_peaks_rejected() {
        assert!(peak_overlap(100.0, 0.05, 2, 2).is_err());
    }

    #[test]
    fn grid_order_is_row_major() {
        let mut spec = SweepSpec::new(Quantity::PeFormula);
        spec.grid.theta = Some(vec![0.1, 0.2]);
        spec.grid.eta = Some(vec![0.5, 0.9]);
        let pts = spec.points();
        assert_eq!(pts.len(), 4);
        assert_eq!((pts[1].theta, pts[1].eta), (0.1, 0.9));
        assert_eq!((pts[2].theta, pts[2].eta), (0.2, 0.5));
    }

    #[test]
    fn failing_point_names_its_coordinates() {
        let mut spec = SweepSpec::new(Quantity::PeakOverlap);
        spec.peaks = (3, 3);
        match run_sweep(&spec) {
            Err(Error::SweepPoint { index: 0, coords, .. }) => assert!(coords.contains("gamma=100")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
