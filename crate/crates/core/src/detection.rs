//! Measurement chain on hybrid states: Fock projection of a qubus beam, the
//! QND probe with a non-resolving detector, presence detection of photons and
//! Bell-state measurement.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Poisson};

use crate::coherent::{auto_cutoff, fock_amplitude, overlap};
use crate::error::{Error, Result};
use crate::state::{Branch, HybridState, PhotonId, PhotonLabel, QubusId, C64};

/// Probability below which an outcome is treated as impossible.
pub const IMPOSSIBLE: f64 = 1e-300;

/// Tail mass a Fock cutoff must leave uncovered.
pub const TAIL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] =
        [BellOutcome::PhiPlus, BellOutcome::PhiMinus, BellOutcome::PsiPlus, BellOutcome::PsiMinus];

    /// Coefficients on `(HH, HV, VH, VV)`.
    pub fn coefficients(self) -> [f64; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            BellOutcome::PhiPlus => [h, 0.0, 0.0, h],
            BellOutcome::PhiMinus => [h, 0.0, 0.0, -h],
            BellOutcome::PsiPlus => [0.0, h, h, 0.0],
            BellOutcome::PsiMinus => [0.0, h, -h, 0.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasurementKind {
    Fock {
        n: usize,
    },
    /// Binned QND readout: `k` is the reported bin, `n` the Fock number that
    /// produced it.
    Bin {
        k: usize,
        n: usize,
    },
    Povm {
        outcome: u8,
    },
    Bell {
        outcome: BellOutcome,
    },
    Presence {
        path: String,
        present: bool,
    },
}

#[derive(Clone, Debug)]
pub struct MeasurementRecord {
    pub kind: MeasurementKind,
    pub probability: f64,
    pub collapsed: HybridState,
}

fn require_normalized(s: &HybridState) -> Result<()> {
    let n = s.norm();
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(n));
    }
    Ok(())
}

/// Photon-number distribution of qubus `mode`, `P(0..=cutoff)`.
///
/// `cutoff = None` picks `mean + 12√mean + 12` from the largest branch
/// intensity. Fails with [`Error::CutoffTooSmall`] when the uncovered tail
/// exceeds `1e-12`.
pub fn fock_distribution(s: &HybridState, mode: QubusId, cutoff: Option<usize>) -> Result<Vec<f64>> {
    require_normalized(s)?;
    let qi = s.registry().qubus_index(mode)?;
    let br = s.branches();
    let max_mean = br.iter().map(|b| b.qubus[qi].norm_sqr()).fold(0.0, f64::max);
    let cutoff = cutoff.unwrap_or_else(|| auto_cutoff(max_mean));

    // Gram matrix of the remaining degrees of freedom, only between branches
    // with identical photon labels.
    let mut groups: HashMap<&[PhotonLabel], Vec<usize>> = HashMap::new();
    for (i, b) in br.iter().enumerate() {
        groups.entry(b.photons.as_slice()).or_default().push(i);
    }
    let mut pairs: Vec<(usize, usize, C64)> = Vec::new();
    for members in groups.values() {
        for &i in members {
            for &j in members {
                let mut g = br[i].amplitude.conj() * br[j].amplitude;
                for (k, (x, y)) in br[i].qubus.iter().zip(&br[j].qubus).enumerate() {
                    if k != qi {
                        g *= overlap(*x, *y);
                    }
                }
                pairs.push((i, j, g));
            }
        }
    }
    let mut pmf = Vec::with_capacity(cutoff + 1);
    let mut amps = vec![C64::new(0.0, 0.0); br.len()];
    for n in 0..=cutoff {
        for (a, b) in amps.iter_mut().zip(br) {
            *a = fock_amplitude(b.qubus[qi], n);
        }
        let p: f64 = pairs.iter().map(|&(i, j, g)| (amps[i].conj() * amps[j] * g).re).sum();
        pmf.push(p.max(0.0));
    }
    let tail = 1.0 - pmf.iter().sum::<f64>();
    if tail > TAIL_TOL {
        return Err(Error::CutoffTooSmall { cutoff, tail });
    }
    Ok(pmf)
}

/// Projects qubus `mode` onto `|n⟩⟨n|` and removes it from the state.
pub fn fock_project(s: &HybridState, mode: QubusId, n: usize) -> Result<MeasurementRecord> {
    let qi = s.registry().qubus_index(mode)?;
    let norm0 = s.norm_sqr();
    let branches: Vec<Branch> = s
        .branches()
        .iter()
        .map(|b| Branch { amplitude: b.amplitude * fock_amplitude(b.qubus[qi], n), ..b.clone() })
        .collect();
    let projected = s.with_branches(branches).drop_qubus_index(qi).canonicalize(0.0);
    let p = projected.norm_sqr() / norm0;
    if p.is_nan() || p < IMPOSSIBLE {
        return Err(Error::ImpossibleOutcome(p));
    }
    Ok(MeasurementRecord {
        kind: MeasurementKind::Fock { n },
        probability: p,
        collapsed: projected.normalize()?.canonical(),
    })
}

/// Every Fock outcome of `mode` with probability above `min_probability`.
pub fn fock_outcomes(s: &HybridState, mode: QubusId, min_probability: f64) -> Result<Vec<MeasurementRecord>> {
    let pmf = fock_distribution(s, mode, None)?;
    pmf.iter().enumerate().filter(|(_, p)| **p > min_probability).map(|(n, _)| fock_project(s, mode, n)).collect()
}

/// One readout bin of the QND detector, in registered-count space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QndBin {
    pub k: usize,
    /// Mean photon number `μ_k` of the probe difference port.
    pub mean: f64,
    /// Registered counts `lo ≤ m < hi` are reported as bin `k`.
    pub lo: f64,
    pub hi: f64,
}

/// Probe beam `|γ⟩`, its XPM angle, detector efficiency and readout bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QndConfig {
    pub gamma: f64,
    pub theta_probe: f64,
    pub eta: f64,
    pub bins: Vec<QndBin>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QndMode {
    Ideal,
    Binned,
}

/// `μ_k = 2γ² sin²(kθ/2)`, the mean photon number of `|(γe^{ikθ} − γ)/√2⟩`.
pub fn peak_mean(gamma: f64, theta_probe: f64, k: usize) -> f64 {
    let s = (k as f64 * theta_probe / 2.0).sin();
    2.0 * gamma * gamma * s * s
}

impl QndConfig {
    /// Bins for peaks `k = 0..peaks`, split at the midpoints of the detected
    /// means `η·μ_k`; the last bin is open-ended. Peaks must satisfy
    /// `k·θ < π` so that the means increase with `k`.
    pub fn new(gamma: f64, theta_probe: f64, eta: f64, peaks: usize) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("gamma must be finite and non-negative"));
        }
        if !(theta_probe > 0.0 && theta_probe.is_finite()) {
            return Err(Error::invalid("theta_probe must be positive"));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid("eta must lie in (0, 1]"));
        }
        let max_peaks = Self::max_peaks(theta_probe);
        if peaks == 0 || peaks > max_peaks {
            return Err(Error::invalid(format!(
                "peak count {peaks} outside 1..={max_peaks} for theta_probe {theta_probe}"
            )));
        }
        let detected: Vec<f64> = (0..peaks).map(|k| eta * peak_mean(gamma, theta_probe, k)).collect();
        let bins = (0..peaks)
            .map(|k| QndBin {
                k,
                mean: peak_mean(gamma, theta_probe, k),
                lo: if k == 0 { 0.0 } else { (detected[k - 1] + detected[k]) / 2.0 },
                hi: if k + 1 == peaks { f64::INFINITY } else { (detected[k] + detected[k + 1]) / 2.0 },
            })
            .collect();
        Ok(QndConfig { gamma, theta_probe, eta, bins })
    }

    /// Largest peak count with monotone means, i.e. `k·θ < π`.
    pub fn max_peaks(theta_probe: f64) -> usize {
        let kmax = (std::f64::consts::PI / theta_probe).ceil() as usize;
        kmax.max(1)
    }

    /// Bins covering the whole Fock range of a beam with mean `mean`, capped by
    /// [`QndConfig::max_peaks`].
    pub fn covering(gamma: f64, theta_probe: f64, eta: f64, mean: f64) -> Result<Self> {
        let peaks = (auto_cutoff(mean) + 1).min(Self::max_peaks(theta_probe));
        Self::new(gamma, theta_probe, eta, peaks)
    }

    /// Probability that the detector reports bin `k` given `n` photons in the
    /// measured qubus beam. Registered counts are Poisson with mean `η·μ_n`.
    pub fn response(&self, n: usize, k: usize) -> f64 {
        let bin = &self.bins[k];
        let lambda = self.eta * peak_mean(self.gamma, self.theta_probe, n);
        count_mass(lambda, bin.lo, bin.hi)
    }

    /// `P(bin | n)` for every bin.
    pub fn response_row(&self, n: usize) -> Vec<f64> {
        (0..self.bins.len()).map(|k| self.response(n, k)).collect()
    }
}

/// `P(lo ≤ m < hi)` for `m ~ Poisson(lambda)`.
fn count_mass(lambda: f64, lo: f64, hi: f64) -> f64 {
    let first = lo.ceil().max(0.0) as u64;
    if lambda == 0.0 {
        return if first == 0 && hi > 0.0 { 1.0 } else { 0.0 };
    }
    let dist = Poisson::new(lambda).expect("positive mean");
    let below = |m: u64| if m == 0 { 0.0 } else { dist.cdf(m - 1) };
    let upper = if hi.is_infinite() { 1.0 } else { below(hi.ceil() as u64) };
    (upper - below(first)).max(0.0)
}

fn ambiguity_check(pmf: &[f64], cfg: &QndConfig, min_probability: f64) -> Result<()> {
    if let Some(n) = (cfg.bins.len()..pmf.len()).find(|&n| pmf[n] > min_probability) {
        return Err(Error::AmbiguousReadout(n));
    }
    Ok(())
}

/// Distribution of reported bins for a Fock pmf under the binned detector.
pub fn bin_distribution(pmf: &[f64], cfg: &QndConfig) -> Vec<f64> {
    let mut out = vec![0.0; cfg.bins.len()];
    for (n, &p) in pmf.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o += p * cfg.response(n, k);
        }
    }
    out
}

/// Total-variation distance between ideal (`k = n`) and binned readouts.
pub fn readout_total_variation(pmf: &[f64], cfg: &QndConfig) -> f64 {
    let binned = bin_distribution(pmf, cfg);
    let len = binned.len().max(pmf.len());
    (0..len)
        .map(|k| {
            let a = pmf.get(k).copied().unwrap_or(0.0);
            let b = binned.get(k).copied().unwrap_or(0.0);
            (a - b).abs()
        })
        .sum::<f64>()
        / 2.0
}

/// Enumerates QND readouts of `mode`.
///
/// `Ideal` yields one record per Fock outcome. `Binned` yields one record per
/// `(n, k)` pair: the probe is non-demolition, so the collapsed state is the
/// Fock projection onto `n`, while `k` is what the detector reports and what
/// feed-forward sees.
pub fn qnd_outcomes(
    s: &HybridState,
    mode: QubusId,
    cfg: &QndConfig,
    qnd: QndMode,
    min_probability: f64,
) -> Result<Vec<MeasurementRecord>> {
    let pmf = fock_distribution(s, mode, None)?;
    ambiguity_check(&pmf, cfg, min_probability)?;
    let mut out = Vec::new();
    for (n, &p) in pmf.iter().enumerate() {
        if p <= min_probability {
            continue;
        }
        let rec = fock_project(s, mode, n)?;
        match qnd {
            QndMode::Ideal => out.push(rec),
            QndMode::Binned => {
                for (k, q) in cfg.response_row(n).into_iter().enumerate() {
                    if rec.probability * q > min_probability {
                        out.push(MeasurementRecord {
                            kind: MeasurementKind::Bin { k, n },
                            probability: rec.probability * q,
                            collapsed: rec.collapsed.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Samples one QND readout.
pub fn qnd_measure<R: Rng + ?Sized>(
    s: &HybridState,
    mode: QubusId,
    cfg: &QndConfig,
    qnd: QndMode,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    let outcomes = qnd_outcomes(s, mode, cfg, qnd, 0.0)?;
    sample(outcomes, rng)
}

/// Draws one record with probability proportional to its weight.
pub fn sample<R: Rng + ?Sized>(mut records: Vec<MeasurementRecord>, rng: &mut R) -> Result<MeasurementRecord> {
    let total: f64 = records.iter().map(|r| r.probability).sum();
    if records.is_empty() || total <= 0.0 {
        return Err(Error::ImpossibleOutcome(total));
    }
    let mut u = rng.random::<f64>() * total;
    let last = records.len() - 1;
    for i in 0..last {
        u -= records[i].probability;
        if u < 0.0 {
            return Ok(records.swap_remove(i));
        }
    }
    Ok(records.swap_remove(last))
}

/// Result of the two-element non-resolving POVM.
#[derive(Clone, Debug)]
pub struct PovmResult {
    pub p0: f64,
    pub p1: f64,
    /// State after "no click", via the Kraus operator `√Π₀`; the mode is kept
    /// with amplitude `α√(1−η)`.
    pub collapsed0: Option<HybridState>,
    /// State after a click. `√Π₁` does not map coherent states to coherent
    /// states, so this is only available when the measured mode factors out.
    pub collapsed1: Option<HybridState>,
}

/// `Π₀ = Σ (1−η)ⁿ |n⟩⟨n|`, `Π₁ = I − Π₀`.
pub fn povm_non_resolving(s: &HybridState, mode: QubusId, eta: f64) -> Result<PovmResult> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid("eta must lie in (0, 1]"));
    }
    let qi = s.registry().qubus_index(mode)?;
    let norm0 = s.norm_sqr();
    let keep = (1.0 - eta).sqrt();
    let branches: Vec<Branch> = s
        .branches()
        .iter()
        .map(|b| {
            let a = b.qubus[qi];
            let mut nb = b.clone();
            nb.amplitude *= (-eta * a.norm_sqr() / 2.0).exp();
            nb.qubus[qi] = a * keep;
            nb
        })
        .collect();
    let after0 = s.with_branches(branches);
    let p0 = (after0.norm_sqr() / norm0).clamp(0.0, 1.0);
    let p1 = 1.0 - p0;
    let collapsed0 = if p0 >= IMPOSSIBLE { Some(after0.normalize()?) } else { None };
    let collapsed1 = if p1 >= IMPOSSIBLE { s.split_off_qubus(mode, 1e-12)?.map(|(rest, _)| rest) } else { None };
    Ok(PovmResult { p0, p1, collapsed0, collapsed1 })
}

/// Non-destructive presence test of `photon` on any of `paths`.
/// Returns the "present" and "absent" outcomes that have non-zero weight.
pub fn qnd_presence(s: &HybridState, photon: PhotonId, paths: &[&str]) -> Result<Vec<MeasurementRecord>> {
    let reg = s.registry();
    let idx = reg.photon_index(photon)?;
    let ids = paths.iter().map(|p| reg.path_of(photon, p)).collect::<Result<Vec<_>>>()?;
    let label = paths.join(",");
    let norm0 = s.norm_sqr();
    let mut out = Vec::new();
    for present in [true, false] {
        let branches: Vec<Branch> =
            s.branches().iter().filter(|b| ids.contains(&b.photons[idx].path) == present).cloned().collect();
        if branches.is_empty() {
            continue;
        }
        let part = s.with_branches(branches);
        let p = part.norm_sqr() / norm0;
        if p < IMPOSSIBLE {
            continue;
        }
        out.push(MeasurementRecord {
            kind: MeasurementKind::Presence { path: label.clone(), present },
            probability: p,
            collapsed: part.normalize()?,
        });
    }
    Ok(out)
}

/// Which-path detection: one QND presence module on each of `paths`, which
/// must cover every path the photon occupies.
pub fn which_path(s: &HybridState, photon: PhotonId, paths: &[String]) -> Result<Vec<MeasurementRecord>> {
    let reg = s.registry();
    let idx = reg.photon_index(photon)?;
    let ids = paths.iter().map(|p| reg.path_of(photon, p)).collect::<Result<Vec<_>>>()?;
    if s.branches().iter().any(|b| !ids.contains(&b.photons[idx].path)) {
        return Err(Error::precondition("photon occupies a path without a detector"));
    }
    let norm0 = s.norm_sqr();
    let mut out = Vec::new();
    for (name, id) in paths.iter().zip(&ids) {
        let branches: Vec<Branch> = s.branches().iter().filter(|b| b.photons[idx].path == *id).cloned().collect();
        if branches.is_empty() {
            continue;
        }
        let part = s.with_branches(branches);
        let p = part.norm_sqr() / norm0;
        if p < IMPOSSIBLE {
            continue;
        }
        out.push(MeasurementRecord {
            kind: MeasurementKind::Presence { path: name.clone(), present: true },
            probability: p,
            collapsed: part.normalize()?,
        });
    }
    Ok(out)
}

fn single_path(s: &HybridState, photon: PhotonId) -> Result<usize> {
    let idx = s.registry().photon_index(photon)?;
    let first = s.branches().first().map(|b| b.photons[idx].path);
    if s.branches().iter().any(|b| Some(b.photons[idx].path) != first) {
        return Err(Error::MultiPath(photon));
    }
    Ok(idx)
}

/// Projective Bell measurement on the polarizations of `a` and `b`. Both
/// photons are removed; every outcome with non-zero weight is returned.
pub fn bell_measure(s: &HybridState, a: PhotonId, b: PhotonId) -> Result<Vec<MeasurementRecord>> {
    if a == b {
        return Err(Error::invalid("Bell measurement needs two photons"));
    }
    let ia = single_path(s, a)?;
    let ib = single_path(s, b)?;
    let norm0 = s.norm_sqr();
    let mut out = Vec::new();
    for outcome in BellOutcome::ALL {
        let coeff = outcome.coefficients();
        let branches: Vec<Branch> = s
            .branches()
            .iter()
            .filter_map(|br| {
                let k = 2 * br.photons[ia].pol.bit() + br.photons[ib].pol.bit();
                (coeff[k] != 0.0).then(|| Branch { amplitude: br.amplitude * coeff[k], ..br.clone() })
            })
            .collect();
        let (hi, lo) = if ia > ib { (ia, ib) } else { (ib, ia) };
        let part = s.with_branches(branches).drop_photon_index(hi).drop_photon_index(lo).canonicalize(0.0);
        let p = part.norm_sqr() / norm0;
        if p < IMPOSSIBLE {
            continue;
        }
        out.push(MeasurementRecord {
            kind: MeasurementKind::Bell { outcome },
            probability: p,
            collapsed: part.normalize()?.canonical(),
        });
    }
    Ok(out)
}

/// Writes `n,probability` rows with a header.
pub fn write_pmf_csv<W: Write>(w: W, pmf: &[f64]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["n", "probability"])?;
    for (n, p) in pmf.iter().enumerate() {
        wr.write_record([n.to_string(), format!("{p:e}")])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::poisson_pmf;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn coherent_beam_is_poisson() {
        let s = HybridState::coherent(QubusId(0), c(20f64.sqrt(), 0.0));
        let pmf = fock_distribution(&s, QubusId(0), None).unwrap();
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for (n, p) in pmf.iter().enumerate() {
            assert!((p - poisson_pmf(20.0, n)).abs() < 1e-14);
        }
        let argmax = pmf.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(argmax == 19 || argmax == 20);
    }

    #[test]
    fn small_cutoff_reports_tail() {
        let s = HybridState::coherent(QubusId(0), c(20f64.sqrt(), 0.0));
        match fock_distribution(&s, QubusId(0), Some(10)) {
            Err(Error::CutoffTooSmall { cutoff: 10, tail }) => assert!(tail > 0.9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn vacuum_projection() {
        let s = HybridState::plus(PhotonId(1), "a")
            .unwrap()
            .tensor(&HybridState::coherent(QubusId(0), c(0.0, 0.0)))
            .unwrap();
        let pmf = fock_distribution(&s, QubusId(0), None).unwrap();
        assert!((pmf[0] - 1.0).abs() < 1e-15);
        let rec = fock_project(&s, QubusId(0), 0).unwrap();
        assert!((rec.probability - 1.0).abs() < 1e-15);
        assert!(rec.collapsed.registry().qubus_modes().is_empty());
        assert!(matches!(fock_project(&s, QubusId(0), 3), Err(Error::ImpossibleOutcome(_))));
    }

    #[test]
    fn peak_means() {
        let expect = [12.4974, 49.9583, 112.2892, 199.3342];
        for (k, e) in expect.iter().enumerate() {
            assert!((peak_mean(100.0, 0.05, k + 1) - e).abs() < 1e-3);
        }
    }

    #[test]
    fn povm_on_coherent_beam() {
        let s = HybridState::coherent(QubusId(0), c(20f64.sqrt(), 0.0));
        let r = povm_non_resolving(&s, QubusId(0), 0.9).unwrap();
        assert!((r.p0 - (-18f64).exp()).abs() < 1e-20);
        assert!((r.p0 + r.p1 - 1.0).abs() < 1e-15);
        assert!(r.collapsed1.is_some());

        let vac = HybridState::coherent(QubusId(0), c(0.0, 0.0));
        let r = povm_non_resolving(&vac, QubusId(0), 0.5).unwrap();
        assert!((r.p0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bell_measurement_basics() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = HybridState::polarization_state(
            &[(PhotonId(1), "a"), (PhotonId(2), "b")],
            &[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)],
        )
        .unwrap();
        let out = bell_measure(&phi, PhotonId(1), PhotonId(2)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].kind, MeasurementKind::Bell { outcome: BellOutcome::PhiPlus });
        assert!((out[0].probability - 1.0).abs() < 1e-14);

        let hh = HybridState::polarization_state(
            &[(PhotonId(1), "a"), (PhotonId(2), "b")],
            &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let out = bell_measure(&hh, PhotonId(1), PhotonId(2)).unwrap();
        assert_eq!(out.len(), 2);
        for r in &out {
            assert!((r.probability - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn presence_on_certain_path() {
        let s = HybridState::plus(PhotonId(1), "a").unwrap();
        let out = qnd_presence(&s, PhotonId(1), &["a"]).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].probability - 1.0).abs() < 1e-15);
        assert_eq!(out[0].collapsed.registry().num_photons(), 1);
    }

    #[test]
    fn bins_partition_counts() {
        let cfg = QndConfig::new(100.0, 0.05, 0.95, 10).unwrap();
        for n in 0..10 {
            let row = cfg.response_row(n);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(cfg.response(0, 0), 1.0);
        assert!(QndConfig::new(100.0, 0.05, 0.95, 100).is_err());
    }

    #[test]
    fn pmf_csv_has_header() {
        let mut buf = Vec::new();
        write_pmf_csv(&mut buf, &[0.5, 0.5]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,probability\n0,5e-1\n"));
    }
}
