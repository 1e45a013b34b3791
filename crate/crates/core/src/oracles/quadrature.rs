//! Brute-force references for the generators: vector-valued adaptive
//! Gauss–Kronrod quadrature of the time-domain integrands, with operators
//! evolved through `e^{-iHt}` rather than through Bohr components.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::Array1;
use num_complex::Complex64 as C64;

use crate::bath::CorrelationMatrix;
use crate::error::{KineticError, Result};
use crate::operator::{left_superop, right_superop, sandwich_superop, commutator_superop, OperatorMatrix, Superoperator};
use crate::system::System;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 2000,
        }
    }
}

fn max_norm(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn kronrod<F: Fn(f64) -> Array1<C64>>(f: &F, a: f64, b: f64) -> (Array1<C64>, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc.mapv(|z| z * WGK[7]);
    let mut g = fc.mapv(|z| z * WG[3]);
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k.scaled_add(C64::new(WGK[j], 0.0), &s);
        if j % 2 == 1 {
            g.scaled_add(C64::new(WG[j / 2], 0.0), &s);
        }
    }
    let k = k.mapv(|z| z * h);
    let g = g.mapv(|z| z * h);
    let err = max_norm(&(&k - &g));
    (k, err)
}

struct Piece {
    a: f64,
    b: f64,
    value: Array1<C64>,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// `∫_a^b f`, refining the interval with the largest error estimate until
/// the summed estimate meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> Array1<C64>>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Array1<C64>> {
    let (value, err) = kronrod(&f, a, b);
    let mut total = value.clone();
    let mut total_err = err;
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value, err });
    loop {
        if total_err <= opts.abs_tol.max(opts.rel_tol * max_norm(&total)) {
            return Ok(total);
        }
        if heap.len() >= opts.max_intervals {
            return Err(KineticError::Convergence(format!(
                "quadrature error estimate {total_err:e} after {} intervals",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = kronrod(&f, worst.a, mid);
        let (v2, e2) = kronrod(&f, mid, worst.b);
        total = total - &worst.value + &v1 + &v2;
        total_err += e1 + e2 - worst.err;
        heap.push(Piece { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, err: e2 });
    }
}

/// `∫_0^∞ f` for an integrand decaying at least like `e^{-decay·s}`; the
/// range is cut at `40/decay`.
pub fn integrate_half_line<F: Fn(f64) -> Array1<C64>>(f: F, decay: f64, opts: QuadOptions) -> Result<Array1<C64>> {
    if !(decay > 0.0) {
        return Err(KineticError::InvalidParameter(format!("decay rate {decay} must be positive")));
    }
    integrate(f, 0.0, 40.0 / decay, opts)
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<C64> {
    Ok(integrate(|s| Array1::from_elem(1, f(s)), a, b, opts)?[0])
}

fn flatten(s: &Superoperator) -> Array1<C64> {
    s.matrix().iter().cloned().collect()
}

fn unflatten(dim: usize, v: Array1<C64>) -> Result<Superoperator> {
    let n = dim * dim;
    Superoperator::from_matrix(dim, v.into_shape_with_order((n, n)).map_err(|e| KineticError::Linalg(e.to_string()))?)
}

/// `𝒢₂ = -∫_0^∞ ds Tr_R[𝓛_I 𝓛_I(-s)(· ⊗ ρ_R)]` by direct quadrature.
pub fn redfield_quadrature(system: &System, cm: &CorrelationMatrix, opts: QuadOptions) -> Result<Superoperator> {
    system.validate()?;
    let spec = system.spectral(None)?;
    let d = system.dim();
    let n = system.couplings.len();
    let integrand = |s: f64| -> Array1<C64> {
        let mut k = Superoperator::zeros(d);
        let moved: Vec<OperatorMatrix> = system.couplings.iter().map(|t| spec.heisenberg(t, -s)).collect();
        for a in 0..n {
            let ta = &system.couplings[a];
            for b in 0..n {
                let c = cm.eval(a, b, s).expect("validated entries");
                let tb = &moved[b];
                let first = left_superop(&ta.dot(tb)).sub(&sandwich_superop(tb, ta).expect("dims"));
                let second = right_superop(&tb.dot(ta)).sub(&sandwich_superop(ta, tb).expect("dims"));
                k.add_scaled(-c, &first);
                k.add_scaled(-c.conj(), &second);
            }
        }
        flatten(&k)
    };
    for a in 0..n {
        for b in 0..n {
            cm.entry(a, b)?;
        }
    }
    unflatten(d, integrate_half_line(integrand, cm.min_decay(), opts)?)
}

/// Integrand of the single-coupling fourth-order generator at `(s₁, s₂, s₃)`.
pub fn fourth_order_integrand(
    t: &OperatorMatrix,
    spec: &crate::operator::SpectralData,
    cm: &CorrelationMatrix,
    s: [f64; 3],
) -> Superoperator {
    let [s1, s2, s3] = s;
    let c = |u: f64| cm.eval(0, 0, u).expect("single entry");
    let dsup = |u: f64, time: f64| {
        let op = spec.heisenberg(t, time);
        let cu = c(u);
        left_superop(&op).scale(cu).sub(&right_superop(&op).scale(cu.conj()))
    };
    let c0 = commutator_superop(t);
    let c1 = commutator_superop(&spec.heisenberg(t, -s3));
    let da = dsup(s2 + s3, -s2 - s3);
    let db = dsup(s1 + s2, -s1 - s2 - s3);
    let dc = dsup(s2, -s2 - s3);
    let dd = dsup(s1 + s2 + s3, -s1 - s2 - s3);
    let de = dsup(s1 + s3, -s1 - s3);
    let df = dc.clone();
    let c01 = c0.compose(&c1);
    c01.compose(&da.compose(&db).add(&dc.compose(&dd)))
        .sub(&c0.compose(&de).compose(&c1).compose(&df))
}

/// Three nested adaptive quadratures of [`fourth_order_integrand`].
pub fn fourth_order_quadrature(system: &System, cm: &CorrelationMatrix, opts: QuadOptions) -> Result<Superoperator> {
    system.validate()?;
    if system.couplings.len() != 1 || cm.len() != 1 {
        return Err(KineticError::Unsupported("fourth-order quadrature handles one coupling term".into()));
    }
    cm.entry(0, 0)?;
    let spec = system.spectral(None)?;
    let t = &system.couplings[0];
    let d = system.dim();
    let decay = cm.min_decay();
    let len = 40.0 / decay;
    let inner = QuadOptions { abs_tol: opts.abs_tol * 1e-2, ..opts };
    let outer = |s1: f64| -> Array1<C64> {
        integrate(
            |s2| {
                integrate(|s3| flatten(&fourth_order_integrand(t, &spec, cm, [s1, s2, s3])), 0.0, len, inner)
                    .expect("inner quadrature")
            },
            0.0,
            len,
            inner,
        )
        .expect("middle quadrature")
    };
    unflatten(d, integrate(outer, 0.0, len, opts)?)
}
