//! System Hamiltonian plus the system halves of the interaction
//! `H_I = Σ_α T_α ⊗ B_α`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{KineticError, Result};
use crate::operator::{bohr_decompose, eigendecompose, EigenopSet, OperatorMatrix, SpectralData};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct System {
    pub hamiltonian: OperatorMatrix,
    /// `T_α`, indexed like the labels of the correlation matrix.
    pub couplings: Vec<OperatorMatrix>,
}

impl System {
    pub fn new(hamiltonian: OperatorMatrix, couplings: Vec<OperatorMatrix>) -> Result<Self> {
        let s = System { hamiltonian, couplings };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.hamiltonian.require_hermitian("H_S")?;
        let d = self.dim();
        for (i, t) in self.couplings.iter().enumerate() {
            if t.dim() != d {
                return Err(KineticError::DimensionMismatch {
                    context: format!("coupling T[{i}]"),
                    expected: d,
                    found: t.dim(),
                });
            }
            t.require_hermitian(&format!("T[{i}]"))?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn spectral(&self, degeneracy_tol: Option<f64>) -> Result<SpectralData> {
        eigendecompose(&self.hamiltonian, degeneracy_tol)
    }

    pub fn eigenoperators(&self, spec: &SpectralData) -> Result<Vec<EigenopSet>> {
        self.couplings.iter().map(|t| bohr_decompose(t, spec)).collect()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        fingerprint_json(&serde_json::to_vec(self).expect("serializable"))
    }
}

pub(crate) fn fingerprint_json(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Qubit helpers in the basis `{|0>, |1>}` with `σ_z = diag(1, -1)`.
pub mod qubit {
    use super::*;
    use num_complex::Complex64 as C64;

    pub fn sigma_x() -> OperatorMatrix {
        OperatorMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("2x2")
    }

    pub fn sigma_y() -> OperatorMatrix {
        let mut m = OperatorMatrix::zeros(2).into_array();
        m[[0, 1]] = C64::new(0.0, -1.0);
        m[[1, 0]] = C64::new(0.0, 1.0);
        OperatorMatrix::new(m).expect("2x2")
    }

    pub fn sigma_z() -> OperatorMatrix {
        OperatorMatrix::diagonal(&[1.0, -1.0])
    }

    /// `|0><1|`, raising towards the `+ω₀/2` level of `(ω₀/2) σ_z`.
    pub fn sigma_plus() -> OperatorMatrix {
        OperatorMatrix::unit(2, 0, 1)
    }

    pub fn sigma_minus() -> OperatorMatrix {
        OperatorMatrix::unit(2, 1, 0)
    }

    /// `H_S = (ω₀/2) σ_z`, `T = σ_z`.
    pub fn dephasing(omega0: f64) -> System {
        System::new(OperatorMatrix::diagonal(&[0.5 * omega0, -0.5 * omega0]), vec![sigma_z()])
            .expect("valid")
    }

    /// `H_S = (ω₀/2) σ_z`, `H_I = σ_x ⊗ X + σ_y ⊗ Y = σ_+ b + σ_- b^dagger`
    /// with `X = (b + b^dagger)/2`, `Y = i(b - b^dagger)/2`.
    pub fn damped(omega0: f64) -> System {
        System::new(
            OperatorMatrix::diagonal(&[0.5 * omega0, -0.5 * omega0]),
            vec![sigma_x(), sigma_y()],
        )
        .expect("valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian_coupling() {
        let h = OperatorMatrix::identity(2);
        let t = qubit::sigma_plus();
        match System::new(h, vec![t]) {
            Err(KineticError::NotHermitian { what, .. }) => assert_eq!(what, "T[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let h = OperatorMatrix::identity(2);
        assert!(matches!(
            System::new(h, vec![OperatorMatrix::identity(3)]),
            Err(KineticError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn damped_coupling_is_raising_plus_lowering() {
        use num_complex::Complex64 as C64;
        // σ_x X + σ_y Y with X = (b + b†)/2, Y = i(b - b†)/2 collects to σ_+ b + σ_- b†:
        // coefficient of b is (σ_x + iσ_y)/2, of b† is (σ_x - iσ_y)/2.
        let half = C64::new(0.5, 0.0);
        let i_half = C64::new(0.0, 0.5);
        let b_coef = qubit::sigma_x().scale(half).add(&qubit::sigma_y().scale(i_half));
        let bd_coef = qubit::sigma_x().scale(half).sub(&qubit::sigma_y().scale(i_half));
        assert!(b_coef.max_abs_diff(&qubit::sigma_plus()) < 1e-15);
        assert!(bd_coef.max_abs_diff(&qubit::sigma_minus()) < 1e-15);
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let a = qubit::dephasing(1.0);
        let b = qubit::dephasing(1.0);
        let c = qubit::dephasing(1.5);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }
}
