//! Exact amplitude of a two-level emitter in a zero-temperature bath.
//!
//! In the single-excitation sector the excited amplitude obeys
//! `ċ(t) = -λ² ∫_0^t f(t - s) c(s) ds` with the rotating-frame kernel
//! `f(t) = <b(t) b^dagger> e^{iω₀t}`. For `f = Σ a_k e^{-z_k t}` the auxiliary
//! variables `y_k = ∫_0^t a_k e^{-z_k (t-s)} c(s) ds` close the system into a
//! linear ODE, which is solved by exponentiation.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::bath::ExpSum;
use crate::error::{KineticError, Result};
use crate::linalg::{self, ONE};

/// `c(t)` on `times` with `c(0) = 1`.
pub fn damped_qubit_memory(kernel: &ExpSum, lambda: f64, times: &[f64]) -> Result<Vec<C64>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(KineticError::GridNotAscending);
    }
    if times.iter().any(|t| *t < 0.0 || !t.is_finite()) {
        return Err(KineticError::InvalidParameter("sample times must be finite and non-negative".into()));
    }
    let n = kernel.terms().len();
    let mut m = Array2::<C64>::zeros((n + 1, n + 1));
    for (k, term) in kernel.terms().iter().enumerate() {
        m[[0, k + 1]] = C64::new(-lambda * lambda, 0.0);
        m[[k + 1, 0]] = term.a;
        m[[k + 1, k + 1]] = -term.z;
    }
    let mut x0 = Array1::<C64>::zeros(n + 1);
    x0[0] = ONE;
    times
        .iter()
        .map(|&t| {
            let x = linalg::expm(&m.mapv(|v| v * t).view())?.dot(&x0);
            if !(x[0].re.is_finite() && x[0].im.is_finite()) {
                return Err(KineticError::NonFinite(format!("memory solution at t = {t}")));
            }
            Ok(x[0])
        })
        .collect()
}

/// Closed form for `f(t) = (γ₀κ/2) e^{-κt}`:
/// `c(t) = e^{-κt/2} [cosh(dt/2) + (κ/d) sinh(dt/2)]`, `d = √(κ² - 2γ₀κλ²)`.
pub fn damped_qubit_closed_form(gamma0: f64, kappa: f64, lambda: f64, t: f64) -> C64 {
    let d = C64::new(kappa * kappa - 2.0 * gamma0 * kappa * lambda * lambda, 0.0).sqrt();
    let half = d * t * 0.5;
    let ratio = if d.norm() < 1e-12 { C64::new(kappa * t * 0.5, 0.0) } else { half.sinh() * kappa / d };
    (-kappa * t * 0.5).exp() * (half.cosh() + ratio)
}

/// Late-time decay rate of `|c(t)|²`: `κ - √(κ² - 2γ₀κλ²)` in the
/// overdamped regime.
pub fn damped_qubit_population_rate(gamma0: f64, kappa: f64, lambda: f64) -> Result<f64> {
    let disc = kappa * kappa - 2.0 * gamma0 * kappa * lambda * lambda;
    if disc < 0.0 {
        return Err(KineticError::InvalidParameter(format!(
            "underdamped regime (κ² - 2γ₀κλ² = {disc}); the population oscillates"
        )));
    }
    Ok(kappa - disc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::lorentzian_correlation;

    #[test]
    fn no_coupling_keeps_amplitude() {
        let f = lorentzian_correlation(1.0, 1.0, 0.0).unwrap();
        for c in damped_qubit_memory(&f, 0.0, &[0.0, 1.0, 5.0]).unwrap() {
            assert!((c - ONE).norm() < 1e-14);
        }
    }

    #[test]
    fn matches_closed_form() {
        let f = lorentzian_correlation(1.0, 1.0, 0.0).unwrap();
        let times: Vec<f64> = (0..=40).map(|k| 0.25 * k as f64).collect();
        let c = damped_qubit_memory(&f, 0.1, &times).unwrap();
        for (t, v) in times.iter().zip(&c) {
            assert!((v - damped_qubit_closed_form(1.0, 1.0, 0.1, *t)).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_form_solves_the_kernel_ode() {
        // c'' + κc' + (γ₀κλ²/2) c = 0, c(0) = 1, c'(0) = 0
        let (g, k, l) = (1.3, 0.7, 0.9);
        let c = |t: f64| damped_qubit_closed_form(g, k, l, t);
        let h = 1e-4;
        for t in [0.3, 1.7, 4.0] {
            let d1 = (c(t + h) - c(t - h)) / (2.0 * h);
            let d2 = (c(t + h) - 2.0 * c(t) + c(t - h)) / (h * h);
            assert!((d2 + k * d1 + 0.5 * g * k * l * l * c(t)).norm() < 1e-6);
        }
        assert!((c(0.0) - ONE).norm() < 1e-15);
        assert!(((c(h) - c(0.0)) / h).norm() < 1e-3);
    }

    #[test]
    fn population_rate_series() {
        let (g, k) = (1.0, 1.0);
        for l in [0.02f64, 0.05] {
            let exact = damped_qubit_population_rate(g, k, l).unwrap();
            let series = g * l * l + g * g * l.powi(4) / (2.0 * k);
            assert!((exact - series).abs() < 2.0 * l.powi(6));
        }
        assert!(damped_qubit_population_rate(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn rejects_unsorted_grid() {
        let f = lorentzian_correlation(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(damped_qubit_memory(&f, 0.1, &[1.0, 0.5]), Err(KineticError::GridNotAscending)));
    }
}
