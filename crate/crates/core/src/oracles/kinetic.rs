//! `<T ⊗ B_β(τ)>` in the kinetic state `ℛ ρ_S`, to first order in `λ`.

use num_complex::Complex64 as C64;

use crate::bath::CorrelationMatrix;
use crate::error::{KineticError, Result};
use crate::linalg::{I, ZERO};
use crate::operator::OperatorMatrix;
use crate::system::System;

/// Order 0 is `Tr(Tρ)<B_β> = 0`. Order 1 is
///
/// `-iλ ∫_0^∞ ds Σ_α [Tr(T T_α(-s) ρ) C_{βα}(τ+s) - Tr(T ρ T_α(-s)) C_{αβ}(-τ-s)]`
///
/// with `T_α(-s) = Σ_ω e^{iωs} T_α(ω)`, so each Bohr component contributes a
/// shifted half-line transform of the correlation.
#[allow(clippy::too_many_arguments)]
pub fn kinetic_correlator(
    rho: &OperatorMatrix,
    t_op: &OperatorMatrix,
    beta: usize,
    tau: f64,
    system: &System,
    cm: &CorrelationMatrix,
    lambda: f64,
    order: usize,
) -> Result<C64> {
    if order > 1 {
        return Err(KineticError::Unsupported(format!("kinetic correlator up to order 1, got {order}")));
    }
    if !tau.is_finite() {
        return Err(KineticError::NonFinite("τ".into()));
    }
    if beta >= cm.len() {
        return Err(KineticError::InvalidParameter(format!("bath index {beta} out of range")));
    }
    if order == 0 || lambda == 0.0 {
        return Ok(ZERO);
    }
    let spec = system.spectral(None)?;
    let eigenops = system.eigenoperators(&spec)?;
    let mut acc = ZERO;
    for (alpha, set) in eigenops.iter().enumerate() {
        for (w, ta) in &set.entries {
            let left = t_op.dot(ta).dot(rho).trace();
            let right = t_op.dot(rho).dot(ta).trace();
            acc += left * cm.shifted_half_fourier(beta, alpha, *w, tau)?;
            acc -= right * cm.shifted_half_fourier(beta, alpha, -w, tau)?.conj();
        }
    }
    Ok(-I * lambda * acc)
}
