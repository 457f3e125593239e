//! Closed-form coherent-state quantities.
//!
//! Coherent amplitudes are never expanded into a truncated Fock basis inside a
//! state; everything here is evaluated analytically so that beams with
//! `|α|² ~ 10⁴` stay exact.

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

/// `⟨a|b⟩ = exp(−|a|²/2 − |b|²/2 + conj(a)·b)`.
pub fn overlap(a: Complex64, b: Complex64) -> Complex64 {
    (Complex64::new(-(a.norm_sqr() + b.norm_sqr()) / 2.0, 0.0) + a.conj() * b).exp()
}

/// `ln n!` via the log-gamma function.
pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// Fock amplitude `⟨n|α⟩ = e^{−|α|²/2} αⁿ / √(n!)`, evaluated in the log domain.
pub fn fock_amplitude(alpha: Complex64, n: usize) -> Complex64 {
    let r = alpha.norm();
    if r == 0.0 {
        return if n == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
    }
    let log_mag = -r * r / 2.0 + n as f64 * r.ln() - 0.5 * ln_factorial(n);
    Complex64::from_polar(log_mag.exp(), n as f64 * alpha.arg())
}

/// Poisson probability mass `e^{−μ} μⁿ / n!`.
pub fn poisson_pmf(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (-mean + n as f64 * mean.ln() - ln_factorial(n)).exp()
}

/// Upper photon-number cutoff whose Poisson tail is far below double precision.
pub fn auto_cutoff(mean: f64) -> usize {
    (mean + 12.0 * mean.sqrt() + 12.0).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_of_opposite_cats_is_tiny() {
        let a = Complex64::new(20f64.sqrt(), 0.0);
        let o = overlap(a, -a);
        // exp(-2|α|²) = e^{-40}
        assert!((o.norm() - (-40f64).exp()).abs() < 1e-30);
        assert!((o.norm() - 4.248354255291589e-18).abs() < 1e-30);
    }

    #[test]
    fn overlap_with_self_is_one() {
        let a = Complex64::new(1.3, -0.7);
        assert!((overlap(a, a) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fock_amplitudes_square_to_poisson() {
        let a = Complex64::from_polar(3.0, 0.4);
        let mut total = 0.0;
        for n in 0..120 {
            let p = fock_amplitude(a, n).norm_sqr();
            assert!((p - poisson_pmf(9.0, n)).abs() < 1e-14);
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_n_does_not_overflow() {
        let a = Complex64::new(20.0, 0.0);
        let amp = fock_amplitude(a, 500);
        assert!(amp.is_finite());
        assert!(fock_amplitude(a, 400).norm() > 0.0);
    }

    #[test]
    fn vacuum_amplitude() {
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(fock_amplitude(z, 0), Complex64::new(1.0, 0.0));
        assert_eq!(fock_amplitude(z, 3), Complex64::new(0.0, 0.0));
    }
}
