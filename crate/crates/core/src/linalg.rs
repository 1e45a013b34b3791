//! Dense complex linear-algebra helpers on top of `ndarray` / LAPACK.

use ndarray::{Array1, Array2, ArrayView2, ShapeBuilder};
use ndarray_linalg::{Eig, Eigh, Inverse, SVD, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{KineticError, Result};

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, ONE)
}

pub fn dagger(a: &ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub fn kron(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

pub fn max_abs(a: &ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn frobenius(a: &ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(a: &ArrayView2<C64>) -> C64 {
    a.diag().sum()
}

/// Max-abs of `A - A^dagger`.
pub fn hermiticity_deviation(a: &ArrayView2<C64>) -> f64 {
    let n = a.nrows();
    let mut m = 0.0f64;
    for i in 0..n {
        for j in i..n {
            m = m.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    m
}

pub fn hermitize(a: &ArrayView2<C64>) -> Array2<C64> {
    (a.to_owned() + dagger(a)) * C64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(a: &ArrayView2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    // column-major input: LAPACK sees the matrix itself, not its transpose
    let mut h = Array2::zeros(a.raw_dim().f());
    h.assign(&hermitize(a));
    let (vals, vecs) = h.eigh(UPLO::Upper)?;
    Ok((vals, vecs))
}

/// Lowest eigenvalue of the Hermitian part of `a`.
pub fn min_eigenvalue(a: &ArrayView2<C64>) -> Result<f64> {
    let (vals, _) = eigh(a)?;
    Ok(vals.iter().cloned().fold(f64::INFINITY, f64::min))
}

pub fn eigenvalues(a: &ArrayView2<C64>) -> Result<Array1<C64>> {
    let (vals, _) = a.to_owned().eig()?;
    Ok(vals)
}

pub fn singular_values(a: &ArrayView2<C64>) -> Result<Array1<f64>> {
    let (_, s, _) = a.to_owned().svd(false, false)?;
    Ok(s)
}

/// Right singular vectors (as columns) together with the singular values,
/// sorted descending.
pub fn svd_right(a: &ArrayView2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let (_, s, vt) = a.to_owned().svd(false, true)?;
    let vt = vt.ok_or_else(|| KineticError::Linalg("svd returned no V^dagger".into()))?;
    Ok((s, dagger(&vt.view())))
}

pub fn inverse(a: &ArrayView2<C64>) -> Result<Array2<C64>> {
    Ok(a.to_owned().inv()?)
}

fn one_norm(a: &ArrayView2<C64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Pade approximant.
pub fn expm(a: &ArrayView2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(KineticError::DimensionMismatch {
            context: "expm".into(),
            expected: n,
            found: a.ncols(),
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(KineticError::NonFinite("matrix exponential argument".into()));
    }
    if n == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings));
    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let id = identity(n);
    let a2 = scaled.dot(&scaled);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let inner_u = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u_poly = a6.dot(&inner_u) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1);
    let u = scaled.dot(&u_poly);
    let inner_v = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = a6.dot(&inner_v) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = inverse(&q.view())?.dot(&p);
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    Ok(r)
}
