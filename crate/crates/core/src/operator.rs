//! Dense operators on the system space and superoperators on its operator space.
//!
//! Vectorization is column-stacking throughout: `vec(X)[i + j*d] = X[i, j]`,
//! so `vec(A X B) = (B^T ⊗ A) vec(X)`.
//!
//! Eigenoperator convention: `T(ω) = Σ_{ε' - ε = ω} Π(ε) T Π(ε')`, which gives
//! `e^{iHt} T(ω) e^{-iHt} = e^{-iωt} T(ω)`. A component with `ω > 0` lowers
//! the energy by `ω`.

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{KineticError, Result};
use crate::linalg::{self, ONE, ZERO};
use crate::tolerances;

/// A dense complex `d × d` matrix on the system space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix(Array2<C64>);

impl OperatorMatrix {
    pub fn new(entries: Array2<C64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(KineticError::DimensionMismatch {
                context: "operator must be square".into(),
                expected: r,
                found: c,
            });
        }
        if r == 0 {
            return Err(KineticError::InvalidParameter("operator dimension must be positive".into()));
        }
        Ok(OperatorMatrix(entries))
    }

    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let d = rows.len();
        let mut a = Array2::zeros((d, d));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(KineticError::DimensionMismatch {
                    context: "operator row".into(),
                    expected: d,
                    found: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                a[[i, j]] = C64::new(x, 0.0);
            }
        }
        Self::new(a)
    }

    pub fn identity(d: usize) -> Self {
        OperatorMatrix(linalg::identity(d))
    }

    pub fn zeros(d: usize) -> Self {
        OperatorMatrix(Array2::zeros((d, d)))
    }

    /// `|i><j|`
    pub fn unit(d: usize, i: usize, j: usize) -> Self {
        let mut a = Array2::zeros((d, d));
        a[[i, j]] = ONE;
        OperatorMatrix(a)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = values.len();
        let mut a = Array2::zeros((d, d));
        for (i, &v) in values.iter().enumerate() {
            a[[i, i]] = C64::new(v, 0.0);
        }
        OperatorMatrix(a)
    }

    /// `|ψ><ψ|` for a (not necessarily normalized) vector.
    pub fn projector(psi: &[C64]) -> Self {
        let d = psi.len();
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let mut a = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                a[[i, j]] = psi[i] * psi[j].conj() / norm;
            }
        }
        OperatorMatrix(a)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, C64> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<C64> {
        self.0
    }

    pub fn dagger(&self) -> Self {
        OperatorMatrix(linalg::dagger(&self.0.view()))
    }

    pub fn dot(&self, other: &OperatorMatrix) -> Self {
        OperatorMatrix(self.0.dot(&other.0))
    }

    pub fn scale(&self, s: C64) -> Self {
        OperatorMatrix(&self.0 * s)
    }

    pub fn add(&self, other: &OperatorMatrix) -> Self {
        OperatorMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Self {
        OperatorMatrix(&self.0 - &other.0)
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.0.view())
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.0.view())
    }

    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        linalg::max_abs_diff(&self.0.view(), &other.0.view())
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        linalg::hermiticity_deviation(&self.0.view())
    }

    pub fn hermitized(&self) -> Self {
        OperatorMatrix(linalg::hermitize(&self.0.view()))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        linalg::min_eigenvalue(&self.0.view())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[[i, j]]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn require_hermitian(&self, what: &str) -> Result<()> {
        let dev = self.hermiticity_deviation();
        if dev > tolerances::HERMITIAN * self.max_abs().max(1.0) {
            return Err(KineticError::NotHermitian {
                what: what.to_string(),
                deviation: dev,
            });
        }
        Ok(())
    }

    /// Hermitian, unit trace, eigenvalues above `MIN_EIGENVALUE`.
    pub fn require_density_matrix(&self, what: &str) -> Result<()> {
        self.require_hermitian(what)?;
        let tr = self.trace();
        if (tr - ONE).norm() > tolerances::TRACE {
            return Err(KineticError::InvalidParameter(format!(
                "{what}: trace {tr} differs from 1"
            )));
        }
        let lowest = self.min_eigenvalue()?;
        if lowest < tolerances::MIN_EIGENVALUE {
            return Err(KineticError::InvalidParameter(format!(
                "{what}: eigenvalue {lowest:e} is negative"
            )));
        }
        Ok(())
    }

    /// Column-stacked vector of the entries.
    pub fn vectorize(&self) -> Array1<C64> {
        let d = self.dim();
        let mut v = Array1::zeros(d * d);
        for j in 0..d {
            for i in 0..d {
                v[i + j * d] = self.0[[i, j]];
            }
        }
        v
    }

    pub fn devectorize(v: &Array1<C64>) -> Result<Self> {
        let n = v.len();
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n || d == 0 {
            return Err(KineticError::DimensionMismatch {
                context: "devectorize: length must be a positive square".into(),
                expected: d * d,
                found: n,
            });
        }
        let mut a = Array2::zeros((d, d));
        for j in 0..d {
            for i in 0..d {
                a[[i, j]] = v[i + j * d];
            }
        }
        Ok(OperatorMatrix(a))
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

fn array_to_json(a: &Array2<C64>, dim: usize) -> MatrixJson {
    MatrixJson {
        dim,
        entries: a.iter().map(|z| [z.re, z.im]).collect(),
    }
}

fn array_from_json(m: MatrixJson, rows: usize) -> std::result::Result<Array2<C64>, String> {
    if m.entries.len() != rows * rows {
        return Err(format!(
            "expected {} entries for a {}x{} matrix, found {}",
            rows * rows,
            rows,
            rows,
            m.entries.len()
        ));
    }
    let data: Vec<C64> = m.entries.iter().map(|p| C64::new(p[0], p[1])).collect();
    Array2::from_shape_vec((rows, rows), data).map_err(|e| e.to_string())
}

impl Serialize for OperatorMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        array_to_json(&self.0, self.dim()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperatorMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = MatrixJson::deserialize(d)?;
        if m.dim == 0 {
            return Err(serde::de::Error::custom("dim must be positive"));
        }
        let rows = m.dim;
        array_from_json(m, rows)
            .map(OperatorMatrix)
            .map_err(serde::de::Error::custom)
    }
}

/// Eigenvalues of a Hermitian operator grouped into degeneracy classes.
#[derive(Clone, Debug)]
pub struct SpectralData {
    /// One energy per degeneracy class, ascending (class mean).
    pub levels: Vec<f64>,
    /// Orthogonal projector onto each class.
    pub projectors: Vec<OperatorMatrix>,
    /// Indices into `eigenvalues` belonging to each class.
    pub classes: Vec<Vec<usize>>,
    /// Raw eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: Array2<C64>,
    pub degeneracy_tol: f64,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// `e^{-iHt}` built from the spectral decomposition.
    pub fn evolution(&self, t: f64) -> OperatorMatrix {
        let d = self.dim();
        let mut out = Array2::zeros((d, d));
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            let phase = C64::new(0.0, -e * t).exp();
            let v = self.eigenvectors.column(k);
            for i in 0..d {
                for j in 0..d {
                    out[[i, j]] += phase * v[i] * v[j].conj();
                }
            }
        }
        OperatorMatrix(out)
    }

    /// `e^{iHt} X e^{-iHt}`.
    pub fn heisenberg(&self, x: &OperatorMatrix, t: f64) -> OperatorMatrix {
        let u = self.evolution(t);
        u.dagger().dot(x).dot(&u)
    }

    /// All Bohr frequencies `ε' - ε` over pairs of classes, clustered with the
    /// degeneracy tolerance.
    pub fn bohr_frequencies(&self) -> Vec<f64> {
        let mut raw = Vec::new();
        for &a in &self.levels {
            for &b in &self.levels {
                raw.push(b - a);
            }
        }
        cluster_values(raw, self.degeneracy_tol)
            .into_iter()
            .map(|c| c.0)
            .collect()
    }
}

/// Sort values and merge chains closer than `tol`. Each cluster is reported
/// as `((min + max) / 2, members)`; the midpoint keeps `ω` and `-ω` exact
/// negatives of each other.
pub(crate) fn cluster_values(mut values: Vec<f64>, tol: f64) -> Vec<(f64, Vec<f64>)> {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
    for v in values {
        match out.last_mut() {
            Some((_, members)) if v - *members.last().unwrap() <= tol => members.push(v),
            _ => out.push((v, vec![v])),
        }
    }
    for (rep, members) in out.iter_mut() {
        *rep = 0.5 * (members[0] + members[members.len() - 1]);
    }
    out
}

pub fn default_degeneracy_tol(eigenvalues: &[f64]) -> f64 {
    let scale = eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    (tolerances::DEGENERACY_RELATIVE * scale).max(tolerances::DEGENERACY_FLOOR)
}

/// Spectral decomposition of a Hermitian operator. Eigenvalues closer than
/// `degeneracy_tol` (default `1e-9 · max|ε|`) share a class and a projector.
pub fn eigendecompose(h: &OperatorMatrix, degeneracy_tol: Option<f64>) -> Result<SpectralData> {
    h.require_hermitian("eigendecompose input")?;
    let (vals, vecs) = linalg::eigh(&h.view())?;
    let eigenvalues: Vec<f64> = vals.to_vec();
    let tol = degeneracy_tol.unwrap_or_else(|| default_degeneracy_tol(&eigenvalues));
    let d = h.dim();

    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (k, &e) in eigenvalues.iter().enumerate() {
        match classes.last_mut() {
            Some(c) if e - eigenvalues[*c.last().unwrap()] <= tol => c.push(k),
            _ => classes.push(vec![k]),
        }
    }
    let mut levels = Vec::with_capacity(classes.len());
    let mut projectors = Vec::with_capacity(classes.len());
    for class in &classes {
        levels.push(class.iter().map(|&k| eigenvalues[k]).sum::<f64>() / class.len() as f64);
        let mut p = Array2::zeros((d, d));
        for &k in class {
            let v = vecs.column(k);
            for i in 0..d {
                for j in 0..d {
                    p[[i, j]] += v[i] * v[j].conj();
                }
            }
        }
        projectors.push(OperatorMatrix(p));
    }
    Ok(SpectralData {
        levels,
        projectors,
        classes,
        eigenvalues,
        eigenvectors: vecs,
        degeneracy_tol: tol,
    })
}

/// Bohr-frequency components `(ω, T(ω))` of an operator.
#[derive(Clone, Debug)]
pub struct EigenopSet {
    pub entries: Vec<(f64, OperatorMatrix)>,
}

impl EigenopSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn reconstruct(&self, d: usize) -> OperatorMatrix {
        self.entries
            .iter()
            .fold(OperatorMatrix::zeros(d), |acc, (_, c)| acc.add(c))
    }

    /// `T(t) = e^{iHt} T e^{-iHt} = Σ_ω e^{-iωt} T(ω)`.
    pub fn at_time(&self, d: usize, t: f64) -> OperatorMatrix {
        self.entries.iter().fold(OperatorMatrix::zeros(d), |acc, (w, c)| {
            acc.add(&c.scale(C64::new(0.0, -w * t).exp()))
        })
    }
}

pub fn bohr_decompose(t: &OperatorMatrix, spec: &SpectralData) -> Result<EigenopSet> {
    if t.dim() != spec.dim() {
        return Err(KineticError::DimensionMismatch {
            context: "bohr_decompose".into(),
            expected: spec.dim(),
            found: t.dim(),
        });
    }
    let d = t.dim();
    let negligible = 1e-14 * t.max_abs().max(1.0);
    let mut pieces: Vec<(f64, OperatorMatrix)> = Vec::new();
    for (a, pa) in spec.levels.iter().zip(&spec.projectors) {
        for (b, pb) in spec.levels.iter().zip(&spec.projectors) {
            let comp = pa.dot(t).dot(pb);
            if comp.max_abs() > negligible {
                pieces.push((b - a, comp));
            }
        }
    }
    let clusters = cluster_values(pieces.iter().map(|p| p.0).collect(), spec.degeneracy_tol);
    let mut entries = Vec::with_capacity(clusters.len());
    for (rep, members) in clusters {
        let lo = members[0];
        let hi = members[members.len() - 1];
        let comp = pieces
            .iter()
            .filter(|(w, _)| *w >= lo && *w <= hi)
            .fold(OperatorMatrix::zeros(d), |acc, (_, c)| acc.add(c));
        if comp.max_abs() > negligible {
            entries.push((rep, comp));
        }
    }
    Ok(EigenopSet { entries })
}

/// A linear map on `d × d` operators stored as a `d² × d²` matrix acting on
/// column-stacked vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: Array2<C64>,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, matrix: Array2<C64>) -> Result<Self> {
        if matrix.dim() != (dim * dim, dim * dim) {
            return Err(KineticError::DimensionMismatch {
                context: "superoperator matrix".into(),
                expected: dim * dim,
                found: matrix.nrows(),
            });
        }
        Ok(Superoperator { dim, matrix })
    }

    pub fn zeros(dim: usize) -> Self {
        Superoperator {
            dim,
            matrix: Array2::zeros((dim * dim, dim * dim)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Superoperator {
            dim,
            matrix: linalg::identity(dim * dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn apply(&self, x: &OperatorMatrix) -> OperatorMatrix {
        let v = self.matrix.dot(&x.vectorize());
        OperatorMatrix::devectorize(&v).expect("square by construction")
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        Superoperator {
            dim: self.dim,
            matrix: self.matrix.dot(&other.matrix),
        }
    }

    pub fn add(&self, other: &Superoperator) -> Superoperator {
        Superoperator {
            dim: self.dim,
            matrix: &self.matrix + &other.matrix,
        }
    }

    pub fn sub(&self, other: &Superoperator) -> Superoperator {
        Superoperator {
            dim: self.dim,
            matrix: &self.matrix - &other.matrix,
        }
    }

    pub fn scale(&self, s: C64) -> Superoperator {
        Superoperator {
            dim: self.dim,
            matrix: &self.matrix * s,
        }
    }

    pub fn add_scaled(&mut self, s: C64, other: &Superoperator) {
        self.matrix.scaled_add(s, &other.matrix);
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.matrix.view())
    }

    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        linalg::max_abs_diff(&self.matrix.view(), &other.matrix.view())
    }

    pub fn frobenius_diff(&self, other: &Superoperator) -> f64 {
        linalg::frobenius(&(&self.matrix - &other.matrix).view())
    }

    pub fn frobenius(&self) -> f64 {
        linalg::frobenius(&self.matrix.view())
    }

    /// Largest `|Tr(S X)|` over matrix units `X`: zero iff `S` annihilates
    /// the trace functional.
    pub fn trace_residual(&self) -> f64 {
        let d = self.dim;
        (0..d * d)
            .map(|col| (0..d).map(|i| self.matrix[[i + i * d, col]]).sum::<C64>().norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `S(X^dagger) = S(X)^dagger` over matrix units.
    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let a = self.apply(&OperatorMatrix::unit(d, i, j));
                let b = self.apply(&OperatorMatrix::unit(d, j, i));
                worst = worst.max(b.max_abs_diff(&a.dagger()));
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Serialize for Superoperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        array_to_json(&self.matrix, self.dim).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Superoperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = MatrixJson::deserialize(d)?;
        let dim = m.dim;
        if dim == 0 {
            return Err(serde::de::Error::custom("dim must be positive"));
        }
        let matrix = array_from_json(m, dim * dim).map_err(serde::de::Error::custom)?;
        Ok(Superoperator { dim, matrix })
    }
}

fn check_same_dim(a: &OperatorMatrix, b: &OperatorMatrix, context: &str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(KineticError::DimensionMismatch {
            context: context.into(),
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `X ↦ A X B`
pub fn sandwich_superop(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<Superoperator> {
    check_same_dim(a, b, "sandwich_superop")?;
    let bt = b.view().t().to_owned();
    Ok(Superoperator {
        dim: a.dim(),
        matrix: linalg::kron(&bt.view(), &a.view()),
    })
}

/// `X ↦ A X`
pub fn left_superop(a: &OperatorMatrix) -> Superoperator {
    sandwich_superop(a, &OperatorMatrix::identity(a.dim())).expect("same dimension")
}

/// `X ↦ X B`
pub fn right_superop(b: &OperatorMatrix) -> Superoperator {
    sandwich_superop(&OperatorMatrix::identity(b.dim()), b).expect("same dimension")
}

/// `X ↦ [T, X]`
pub fn commutator_superop(t: &OperatorMatrix) -> Superoperator {
    left_superop(t).sub(&right_superop(t))
}

/// `X ↦ {T, X}`
pub fn anticommutator_superop(t: &OperatorMatrix) -> Superoperator {
    left_superop(t).add(&right_superop(t))
}

/// `-i[H, ·]`
pub fn hamiltonian_superop(h: &OperatorMatrix) -> Superoperator {
    commutator_superop(h).scale(C64::new(0.0, -1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    System,
    Reservoir,
}

/// Partial trace of an operator on `H_S ⊗ H_R` (Kronecker order, system
/// index major).
pub fn partial_trace(
    joint: &ArrayView2<C64>,
    dims: (usize, usize),
    keep: Subsystem,
) -> Result<Array2<C64>> {
    let (ds, dr) = dims;
    let n = joint.nrows();
    if ds == 0 || dr == 0 || ds * dr != n || joint.ncols() != n {
        return Err(KineticError::DimensionMismatch {
            context: "partial_trace: joint dimension must equal dS*dR".into(),
            expected: ds * dr,
            found: n,
        });
    }
    Ok(match keep {
        Subsystem::System => {
            let mut out = Array2::zeros((ds, ds));
            for i in 0..ds {
                for j in 0..ds {
                    let mut acc = ZERO;
                    for k in 0..dr {
                        acc += joint[[i * dr + k, j * dr + k]];
                    }
                    out[[i, j]] = acc;
                }
            }
            out
        }
        Subsystem::Reservoir => {
            let mut out = Array2::zeros((dr, dr));
            for a in 0..dr {
                for b in 0..dr {
                    let mut acc = ZERO;
                    for i in 0..ds {
                        acc += joint[[i * dr + a, i * dr + b]];
                    }
                    out[[a, b]] = acc;
                }
            }
            out
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_hermitian, random_operator, rng};
    use proptest::prelude::*;

    fn sigma_x() -> OperatorMatrix {
        OperatorMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    fn sigma_z() -> OperatorMatrix {
        OperatorMatrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
    }

    #[test]
    fn eigendecompose_diagonal() {
        let h = OperatorMatrix::diagonal(&[-0.5, 0.5]);
        let s = eigendecompose(&h, None).unwrap();
        assert_eq!(s.levels, vec![-0.5, 0.5]);
        assert!(s.projectors[0].max_abs_diff(&OperatorMatrix::unit(2, 0, 0)) < 1e-15);
        assert!(s.projectors[1].max_abs_diff(&OperatorMatrix::unit(2, 1, 1)) < 1e-15);
    }

    #[test]
    fn eigendecompose_identity_is_one_class() {
        let s = eigendecompose(&OperatorMatrix::identity(3), None).unwrap();
        assert_eq!(s.levels.len(), 1);
        assert_eq!(s.classes[0], vec![0, 1, 2]);
        assert!(s.projectors[0].max_abs_diff(&OperatorMatrix::identity(3)) < 1e-14);
    }

    #[test]
    fn eigendecompose_rejects_non_hermitian() {
        let a = OperatorMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        match eigendecompose(&a, None) {
            Err(KineticError::NotHermitian { deviation, .. }) => assert!((deviation - 1.0).abs() < 1e-15),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let mut r = rng(7);
        for _ in 0..5 {
            let h = random_hermitian(&mut r, 3);
            let s = eigendecompose(&h, None).unwrap();
            let recon = s
                .levels
                .iter()
                .zip(&s.projectors)
                .fold(OperatorMatrix::zeros(3), |acc, (e, p)| acc.add(&p.scale(C64::new(*e, 0.0))));
            assert!(recon.max_abs_diff(&h) < 1e-12, "{}", recon.max_abs_diff(&h));
            let sum = s.projectors.iter().fold(OperatorMatrix::zeros(3), |a, p| a.add(p));
            assert!(sum.max_abs_diff(&OperatorMatrix::identity(3)) < 1e-12);
            for (a, pa) in s.projectors.iter().enumerate() {
                assert!(pa.dot(pa).max_abs_diff(pa) < 1e-12);
                for pb in s.projectors.iter().skip(a + 1) {
                    assert!(pa.dot(pb).max_abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn bohr_sigma_x_under_sigma_z() {
        let h = sigma_z().scale(C64::new(0.5, 0.0));
        let s = eigendecompose(&h, None).unwrap();
        let set = bohr_decompose(&sigma_x(), &s).unwrap();
        assert_eq!(set.frequencies(), vec![-1.0, 1.0]);
        // levels ascending: index 0 is the -1/2 state |1>, index 1 the +1/2 state |0>
        // ω = +1: Π(-1/2) σx Π(+1/2) = |1><0|
        assert!(set.entries[1].1.max_abs_diff(&OperatorMatrix::unit(2, 1, 0)) < 1e-15);
        assert!(set.entries[0].1.max_abs_diff(&OperatorMatrix::unit(2, 0, 1)) < 1e-15);
        for &t in &[0.3, -1.7, 4.2] {
            for (w, c) in &set.entries {
                let lhs = s.heisenberg(c, t);
                let rhs = c.scale(C64::new(0.0, -w * t).exp());
                assert!(lhs.max_abs_diff(&rhs) < 1e-10);
            }
        }
    }

    #[test]
    fn bohr_commuting_and_zero() {
        let h = sigma_z().scale(C64::new(0.5, 0.0));
        let s = eigendecompose(&h, None).unwrap();
        let set = bohr_decompose(&sigma_z(), &s).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.entries[0].0, 0.0);
        assert!(set.entries[0].1.max_abs_diff(&sigma_z()) < 1e-15);
        assert!(bohr_decompose(&OperatorMatrix::zeros(2), &s).unwrap().is_empty());
        assert!(matches!(
            bohr_decompose(&OperatorMatrix::zeros(3), &s),
            Err(KineticError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bohr_random_invariants() {
        let mut r = rng(11);
        for d in 2..=4 {
            let h = random_hermitian(&mut r, d);
            let t = random_hermitian(&mut r, d);
            let s = eigendecompose(&h, None).unwrap();
            let set = bohr_decompose(&t, &s).unwrap();
            assert!(set.reconstruct(d).max_abs_diff(&t) < 1e-12);
            for (w, c) in &set.entries {
                let partner = set
                    .entries
                    .iter()
                    .find(|(w2, _)| (*w2 + *w).abs() < 1e-12)
                    .expect("hermitian T has T(-ω)");
                assert!(partner.1.max_abs_diff(&c.dagger()) < 1e-12);
                let lhs = s.heisenberg(c, 0.77);
                assert!(lhs.max_abs_diff(&c.scale(C64::new(0.0, -w * 0.77).exp())) < 1e-10);
            }
        }
    }

    #[test]
    fn sandwich_matches_direct_products() {
        let mut r = rng(3);
        let a = random_operator(&mut r, 3);
        let b = random_operator(&mut r, 3);
        let s = sandwich_superop(&a, &b).unwrap();
        for _ in 0..10 {
            let x = random_operator(&mut r, 3);
            assert!(s.apply(&x).max_abs_diff(&a.dot(&x).dot(&b)) < 1e-12);
        }
        let id = sandwich_superop(&OperatorMatrix::identity(3), &OperatorMatrix::identity(3)).unwrap();
        assert_eq!(id, Superoperator::identity(3));
        assert!(sandwich_superop(&a, &OperatorMatrix::identity(2)).is_err());
    }

    #[test]
    fn commutator_with_identity_vanishes() {
        let mut r = rng(5);
        let t = random_hermitian(&mut r, 3);
        assert!(commutator_superop(&t).apply(&OperatorMatrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn commutator_and_anticommutator_commute() {
        // [T,·] and {T,·} commute: both sides equal [T², ·].
        let mut r = rng(9);
        let t = random_hermitian(&mut r, 3);
        let c = commutator_superop(&t);
        let a = anticommutator_superop(&t);
        let bracket = c.compose(&a).sub(&a.compose(&c));
        for _ in 0..5 {
            let x = random_operator(&mut r, 3);
            assert!(bracket.apply(&x).max_abs() < 1e-12);
        }
        let t2 = commutator_superop(&t.dot(&t));
        assert!(c.compose(&a).max_abs_diff(&t2) < 1e-12);
    }

    #[test]
    fn partial_trace_cases() {
        let mut r = rng(13);
        let rs = random_density(&mut r, 2);
        let rr = random_density(&mut r, 3);
        let joint = linalg::kron(&rs.view(), &rr.view());
        let back = partial_trace(&joint.view(), (2, 3), Subsystem::System).unwrap();
        assert!(linalg::max_abs_diff(&back.view(), &rs.view()) < 1e-15);
        let back_r = partial_trace(&joint.view(), (2, 3), Subsystem::Reservoir).unwrap();
        assert!(linalg::max_abs_diff(&back_r.view(), &rr.view()) < 1e-15);

        let s = 0.5f64.sqrt();
        let bell = OperatorMatrix::projector(&[C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]);
        let red = partial_trace(&bell.view(), (2, 2), Subsystem::System).unwrap();
        let half = OperatorMatrix::identity(2).scale(C64::new(0.5, 0.0));
        assert!(linalg::max_abs_diff(&red.view(), &half.view()) < 1e-15);

        let joint = random_density(&mut r, 6);
        let red = OperatorMatrix::new(partial_trace(&joint.view(), (2, 3), Subsystem::System).unwrap()).unwrap();
        assert!((red.trace() - joint.trace()).norm() < 1e-12);
        assert!(red.hermiticity_deviation() < 1e-14);
        assert!(red.min_eigenvalue().unwrap() > -1e-12);

        assert!(partial_trace(&joint.view(), (4, 2), Subsystem::System).is_err());
    }

    #[test]
    fn unitary_conjugation_preserves_density_matrices() {
        let mut r = rng(17);
        let h = random_hermitian(&mut r, 4);
        let s = eigendecompose(&h, None).unwrap();
        let rho = random_density(&mut r, 4);
        for &t in &[0.0, 0.5, 3.0, 17.0] {
            let u = s.evolution(t);
            let out = u.dot(&rho).dot(&u.dagger());
            assert!(out.hermiticity_deviation() < 1e-12);
            assert!((out.trace() - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let mut r = rng(21);
        let a = random_operator(&mut r, 3);
        let text = serde_json::to_string(&a).unwrap();
        assert!(text.starts_with("{\"dim\":3,\"entries\":[["));
        let back: OperatorMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(a, back);
        let bad = r#"{"dim":2,"entries":[[1,0],[0,0],[0,0]]}"#;
        assert!(serde_json::from_str::<OperatorMatrix>(bad).is_err());
    }

    proptest! {
        #[test]
        fn vectorize_round_trip(entries in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 9)) {
            let a = Array2::from_shape_vec((3, 3), entries.iter().map(|&(r, i)| C64::new(r, i)).collect()).unwrap();
            let op = OperatorMatrix::new(a).unwrap();
            let back = OperatorMatrix::devectorize(&op.vectorize()).unwrap();
            prop_assert!(back.max_abs_diff(&op) <= 1e-14);
        }
    }
}
