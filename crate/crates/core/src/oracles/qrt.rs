//! Two-time correlations from the semigroup versus exact references.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::dynamics::propagator;
use crate::error::{KineticError, Result};
use crate::generators::GeneratorBundle;
use crate::operator::{OperatorMatrix, Superoperator};

/// `Tr A₂ Φ(τ)(A₁ Φ(t₁) ρ₀)` for each `(t₁, τ)`.
pub fn qrt_predict(
    bundle: &GeneratorBundle,
    rho0: &OperatorMatrix,
    a1: &OperatorMatrix,
    a2: &OperatorMatrix,
    pairs: &[(f64, f64)],
) -> Result<Vec<C64>> {
    let d = bundle.dim();
    pairs
        .iter()
        .map(|&(t1, tau)| {
            let phi1 = Superoperator::from_matrix(d, propagator(bundle, t1)?)?;
            let phi2 = Superoperator::from_matrix(d, propagator(bundle, tau)?)?;
            let x = a1.dot(&phi1.apply(rho0));
            Ok(a2.dot(&phi2.apply(&x)).trace())
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct QrtReport {
    pub predicted: Vec<C64>,
    pub exact: Vec<C64>,
    pub max_abs: f64,
    /// `max_abs / max |exact|`.
    pub max_rel: f64,
}

pub fn qrt_compare(
    bundle: &GeneratorBundle,
    rho0: &OperatorMatrix,
    a1: &OperatorMatrix,
    a2: &OperatorMatrix,
    pairs: &[(f64, f64)],
    exact: &[C64],
) -> Result<QrtReport> {
    if exact.len() != pairs.len() {
        return Err(KineticError::DimensionMismatch {
            context: "exact correlators vs time pairs".into(),
            expected: pairs.len(),
            found: exact.len(),
        });
    }
    let predicted = qrt_predict(bundle, rho0, a1, a2, pairs)?;
    let max_abs = predicted.iter().zip(exact).map(|(p, e)| (p - e).norm()).fold(0.0, f64::max);
    let scale = exact.iter().map(|e| e.norm()).fold(0.0, f64::max);
    Ok(QrtReport {
        max_rel: if scale > 0.0 { max_abs / scale } else { max_abs },
        predicted,
        exact: exact.to_vec(),
        max_abs,
    })
}
