//! Exact pure dephasing: `H_S = (ω₀/2)σ_z`, `T = σ_z`, Gaussian bath.
//!
//! The coupling commutes with `H_S`, so the coherence picks up
//! `exp[-Γ(t)]` with `Γ(t) = 4λ² ∫_0^t (t - s) Re C(s) ds`. The imaginary part
//! of `C` only produces a bath phase common to both branches.

use num_complex::Complex64 as C64;

use crate::bath::{CorrelationMatrix, ExpSum};
use crate::error::{KineticError, Result};

/// `(e^{qt} - 1 - qt) / q²`, continuous at `q = 0`.
fn psi2(q: C64, t: f64) -> C64 {
    let x = q * t;
    if x.norm() < 1e-2 {
        let mut term = C64::new(0.5 * t * t, 0.0);
        let mut sum = term;
        for n in 3..14 {
            term = term * x / n as f64;
            sum += term;
        }
        sum
    } else {
        (x.exp() - 1.0 - x) / (q * q)
    }
}

fn single_entry(cm: &CorrelationMatrix) -> Result<&ExpSum> {
    if cm.len() != 1 {
        return Err(KineticError::Unsupported(format!(
            "the dephasing solution needs one bath operator, got {}",
            cm.len()
        )));
    }
    cm.entry(0, 0)
}

/// `Γ(t) = 4λ² Re Σ_k a_k (e^{-z_k t} - 1 + z_k t) / z_k²`.
pub fn dephasing_decay(c: &ExpSum, lambda: f64, t: f64) -> f64 {
    4.0 * lambda * lambda * c.terms().iter().map(|k| (k.a * psi2(-k.z, t)).re).sum::<f64>()
}

/// `ρ₀₁(t) / ρ₀₁(0) = e^{-iω₀t} e^{-Γ(t)}`.
pub fn dephasing_exact(cm: &CorrelationMatrix, lambda: f64, omega0: f64, t: f64) -> Result<C64> {
    let c = single_entry(cm)?;
    if t < 0.0 {
        return Err(KineticError::InvalidParameter(format!("time {t} must be non-negative")));
    }
    Ok(C64::new(0.0, -omega0 * t).exp() * (-dephasing_decay(c, lambda, t)).exp())
}

/// Late-time slope of `Γ(t)`: `4λ² Re Σ a_k / z_k = 4λ² Re Γ(0)`.
pub fn dephasing_asymptotic_rate(cm: &CorrelationMatrix, lambda: f64) -> Result<f64> {
    let c = single_entry(cm)?;
    Ok(4.0 * lambda * lambda * c.half_fourier(0.0).re)
}

/// Late-time intercept: `Γ(t) → rate·t - 4λ² Re Σ a_k / z_k²`.
pub fn dephasing_asymptotic_offset(cm: &CorrelationMatrix, lambda: f64) -> Result<f64> {
    let c = single_entry(cm)?;
    Ok(-4.0 * lambda * lambda * c.terms().iter().map(|k| (k.a / (k.z * k.z)).re).sum::<f64>())
}
