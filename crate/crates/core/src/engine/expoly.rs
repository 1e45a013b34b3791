//! Exponential-polynomial integrands on the positive orthant and their
//! regulated closed-form integration.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{KineticError, Result};
use crate::linalg::{ONE, ZERO};
use crate::tolerances;

/// Time argument `t = -Σ_i c_i s_i` with nonnegative integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct LinearForm {
    pub coeffs: Vec<u32>,
}

impl LinearForm {
    pub fn zero(num_vars: usize) -> Self {
        LinearForm { coeffs: vec![0; num_vars] }
    }

    pub fn num_vars(&self) -> usize {
        self.coeffs.len()
    }

    /// Appends one variable with coefficient 1: `t ↦ t - s_new`.
    pub fn shifted(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.push(1);
        LinearForm { coeffs }
    }

    /// Embeds into `total` variables starting at `offset`.
    pub fn embedded(&self, offset: usize, total: usize) -> Self {
        let mut coeffs = vec![0; total];
        coeffs[offset..offset + self.coeffs.len()].copy_from_slice(&self.coeffs);
        LinearForm { coeffs }
    }

    pub fn padded(&self, total: usize) -> Self {
        self.embedded(0, total)
    }
}

/// `coef · Π s_i^{powers_i} · e^{-Σ ζ_i s_i}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Monomial {
    pub coef: C64,
    pub powers: Vec<u32>,
    pub zeta: Vec<C64>,
}

/// Sum of monomials over a fixed number of integration variables.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExpPoly {
    pub num_vars: usize,
    pub terms: Vec<Monomial>,
}

fn key(m: &Monomial) -> (Vec<u32>, Vec<(u64, u64)>) {
    // +0.0 and -0.0 must merge
    let bits = |x: f64| if x == 0.0 { 0u64 } else { x.to_bits() };
    (
        m.powers.clone(),
        m.zeta.iter().map(|z| (bits(z.re), bits(z.im))).collect(),
    )
}

impl ExpPoly {
    pub fn zero(num_vars: usize) -> Self {
        ExpPoly { num_vars, terms: Vec::new() }
    }

    pub fn one(num_vars: usize) -> Self {
        Self::constant(num_vars, ONE)
    }

    pub fn constant(num_vars: usize, c: C64) -> Self {
        ExpPoly {
            num_vars,
            terms: vec![Monomial {
                coef: c,
                powers: vec![0; num_vars],
                zeta: vec![ZERO; num_vars],
            }],
        }
    }

    /// `c · e^{-Σ ζ_i s_i}`.
    pub fn exponential(coef: C64, zeta: Vec<C64>) -> Self {
        let n = zeta.len();
        ExpPoly {
            num_vars: n,
            terms: vec![Monomial { coef, powers: vec![0; n], zeta }],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&mut self, s: C64) {
        for t in &mut self.terms {
            t.coef *= s;
        }
    }

    /// Multiplies every term by `e^{-Σ δ_i s_i}`.
    pub fn shift_exponent(&mut self, delta: &[C64]) {
        for t in &mut self.terms {
            for (z, d) in t.zeta.iter_mut().zip(delta) {
                *z += d;
            }
        }
    }

    pub fn add_assign(&mut self, other: &ExpPoly) {
        assert_eq!(self.num_vars, other.num_vars, "variable count mismatch");
        self.terms.extend(other.terms.iter().cloned());
    }

    pub fn mul(&self, other: &ExpPoly) -> ExpPoly {
        assert_eq!(self.num_vars, other.num_vars, "variable count mismatch");
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Monomial {
                    coef: a.coef * b.coef,
                    powers: a.powers.iter().zip(&b.powers).map(|(x, y)| x + y).collect(),
                    zeta: a.zeta.iter().zip(&b.zeta).map(|(x, y)| x + y).collect(),
                });
            }
        }
        ExpPoly { num_vars: self.num_vars, terms }
    }

    /// Places the variables at `offset..offset+num_vars` of `total`.
    pub fn embedded(&self, offset: usize, total: usize) -> ExpPoly {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut powers = vec![0; total];
                let mut zeta = vec![ZERO; total];
                powers[offset..offset + self.num_vars].copy_from_slice(&t.powers);
                zeta[offset..offset + self.num_vars].copy_from_slice(&t.zeta);
                Monomial { coef: t.coef, powers, zeta }
            })
            .collect();
        ExpPoly { num_vars: total, terms }
    }

    /// Merges monomials with identical powers and exponents; drops exact zeros.
    pub fn canonicalize(&mut self) {
        let mut index: HashMap<(Vec<u32>, Vec<(u64, u64)>), usize> = HashMap::new();
        let mut merged: Vec<Monomial> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match index.get(&key(&t)) {
                Some(&i) => merged[i].coef += t.coef,
                None => {
                    index.insert(key(&t), merged.len());
                    merged.push(t);
                }
            }
        }
        merged.retain(|t| t.coef != ZERO);
        self.terms = merged;
    }

    /// Pointwise value, for quadrature cross-checks.
    pub fn eval(&self, s: &[f64]) -> C64 {
        self.terms
            .iter()
            .map(|t| {
                let mut v = t.coef;
                let mut expo = ZERO;
                for i in 0..self.num_vars {
                    if t.powers[i] > 0 {
                        v *= s[i].powi(t.powers[i] as i32);
                    }
                    expo += t.zeta[i] * s[i];
                }
                v * (-expo).exp()
            })
            .sum()
    }
}

/// Truncated Laurent series in the regulator `η`, powers `-(len-1) ..= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Laurent {
    /// `coeffs[k]` multiplies `η^{k - pole_order}`.
    pub coeffs: Vec<C64>,
    /// Sum of magnitudes of the individual contributions at each power.
    pub magnitudes: Vec<f64>,
}

impl Laurent {
    pub fn pole_order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// The `η → 0` finite part.
    pub fn finite(&self) -> C64 {
        *self.coeffs.last().unwrap_or(&ZERO)
    }

    /// Largest `|pole coefficient| / Σ|contributions|` over the negative powers.
    pub fn pole_residual(&self) -> f64 {
        let n = self.coeffs.len();
        (0..n.saturating_sub(1))
            .filter(|&k| self.magnitudes[k] > 0.0)
            .map(|k| self.coeffs[k].norm() / self.magnitudes[k])
            .fold(0.0, f64::max)
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |a, j| a * (n - j) as f64 / (j + 1) as f64)
}

/// Integrates every monomial over `[0, ∞)^m` with the uniform regulator
/// `e^{-η Σ s_i}`, keeping the Laurent expansion in `η` up to `η⁰`.
///
/// A variable whose exponent satisfies `|ζ_i| <= zero_tol` contributes the
/// pole `n!/η^{n+1}`; any other gives `n!/(ζ_i + η)^{n+1}` expanded in `η`.
/// `order` fixes the elimination order of the variables.
pub fn integrate_laurent(f: &ExpPoly, zero_tol: f64, order: Option<&[usize]>) -> Laurent {
    let default: Vec<usize> = (0..f.num_vars).collect();
    let order = order.unwrap_or(&default);
    let pole_of = |t: &Monomial| -> usize {
        (0..f.num_vars)
            .filter(|&i| t.zeta[i].norm() <= zero_tol)
            .map(|i| t.powers[i] as usize + 1)
            .sum()
    };
    let max_pole = f.terms.iter().map(pole_of).max().unwrap_or(0);
    let mut coeffs = vec![ZERO; max_pole + 1];
    let mut magnitudes = vec![0.0; max_pole + 1];

    for t in &f.terms {
        let p = pole_of(t);
        // series[k] multiplies η^{k - p}
        let mut series = vec![ZERO; p + 1];
        series[0] = t.coef;
        for &i in order {
            let n = t.powers[i];
            let z = t.zeta[i];
            if z.norm() <= zero_tol {
                let f = factorial(n);
                for c in &mut series {
                    *c *= f;
                }
            } else {
                // n!/z^{n+1} Σ_k C(n+k, k) (-η/z)^k
                let lead = factorial(n) / z.powu(n + 1);
                let ratio = -z.inv();
                let mut factor = vec![ZERO; p + 1];
                let mut pw = ONE;
                for (k, slot) in factor.iter_mut().enumerate() {
                    *slot = lead * pw * binomial(n + k as u32, k as u32);
                    pw *= ratio;
                }
                let mut next = vec![ZERO; p + 1];
                for (a, &sa) in series.iter().enumerate() {
                    if sa == ZERO {
                        continue;
                    }
                    for (b, &fb) in factor.iter().enumerate().take(p + 1 - a) {
                        next[a + b] += sa * fb;
                    }
                }
                series = next;
            }
        }
        let offset = max_pole - p;
        for (k, c) in series.into_iter().enumerate() {
            coeffs[offset + k] += c;
            magnitudes[offset + k] += c.norm();
        }
    }
    Laurent { coeffs, magnitudes }
}

/// Finite orthant integral of a combined integrand; uncancelled `η` poles
/// above `POLE_RELATIVE` are reported as divergent.
pub fn integrate_orthant(f: &ExpPoly, zero_tol: f64, order: Option<&[usize]>, group: &str) -> Result<C64> {
    let l = integrate_laurent(f, zero_tol, order);
    let residue = l.pole_residual();
    if residue > tolerances::POLE_RELATIVE {
        return Err(KineticError::Divergent {
            group: group.to_string(),
            residue,
        });
    }
    Ok(l.finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn single_exponential() {
        let f = ExpPoly::exponential(ONE, vec![c(2.0)]);
        assert!((integrate_orthant(&f, TOL, None, "t").unwrap() - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn iterated_exponential() {
        // e^{-(s1+s2)} e^{-s2}
        let f = ExpPoly::exponential(ONE, vec![c(1.0), c(1.0)]).mul(&ExpPoly::exponential(ONE, vec![c(0.0), c(1.0)]));
        assert!((integrate_orthant(&f, TOL, None, "t").unwrap() - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn polynomial_weight() {
        // ∫ s² e^{-3s} = 2/27
        let f = ExpPoly {
            num_vars: 1,
            terms: vec![Monomial { coef: ONE, powers: vec![2], zeta: vec![c(3.0)] }],
        };
        assert!((integrate_orthant(&f, TOL, None, "t").unwrap() - c(2.0 / 27.0)).norm() < 1e-15);
    }

    #[test]
    fn cancelling_poles_leave_finite_part() {
        // (e^{-s1} - 2e^{-2 s1}) with s2 undamped: [1/(1+η) - 2/(2+η)]/η = -1/2 + O(η)
        let mut f = ExpPoly::exponential(ONE, vec![c(1.0), c(0.0)]);
        f.add_assign(&ExpPoly::exponential(c(-2.0), vec![c(2.0), c(0.0)]));
        let l = integrate_laurent(&f, TOL, None);
        assert_eq!(l.pole_order(), 1);
        assert!(l.pole_residual() < 1e-15);
        assert!((l.finite() - c(-0.5)).norm() < 1e-15);
    }

    #[test]
    fn uncancelled_pole_is_divergent() {
        let f = ExpPoly::exponential(ONE, vec![c(1.0), c(0.0)]);
        match integrate_orthant(&f, TOL, None, "g") {
            Err(KineticError::Divergent { group, residue }) => {
                assert_eq!(group, "g");
                assert!((residue - 1.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn elimination_order_is_irrelevant() {
        let mut f = ExpPoly::exponential(c(0.3), vec![C64::new(1.0, 0.5), C64::new(0.0, 0.0), C64::new(2.0, -1.0)]);
        // residues cancel: c₂/ζ₃' = -c₁/ζ₃
        let c2 = -0.3 * C64::new(0.7, 3.0) / C64::new(2.0, -1.0);
        f.add_assign(&ExpPoly::exponential(c2, vec![C64::new(1.0, 0.5), C64::new(0.0, 0.0), C64::new(0.7, 3.0)]));
        f.add_assign(&ExpPoly::exponential(c(1.1), vec![C64::new(0.2, 0.0), C64::new(1.5, 0.2), C64::new(0.7, 3.0)]));
        let a = integrate_orthant(&f, TOL, Some(&[0, 1, 2]), "g").unwrap();
        let b = integrate_orthant(&f, TOL, Some(&[2, 0, 1]), "g").unwrap();
        let cc = integrate_orthant(&f, TOL, Some(&[1, 2, 0]), "g").unwrap();
        assert!((a - b).norm() < 1e-12 && (a - cc).norm() < 1e-12);
    }

    #[test]
    fn canonicalize_merges_and_drops() {
        let mut f = ExpPoly::exponential(c(1.0), vec![C64::new(1.0, -0.0)]);
        f.add_assign(&ExpPoly::exponential(c(2.0), vec![C64::new(1.0, 0.0)]));
        f.add_assign(&ExpPoly::exponential(c(1.0), vec![C64::new(2.0, 0.0)]));
        f.add_assign(&ExpPoly::exponential(c(-1.0), vec![C64::new(2.0, 0.0)]));
        f.canonicalize();
        assert_eq!(f.len(), 1);
        assert_eq!(f.terms[0].coef, c(3.0));
    }

    #[test]
    fn embedding_and_forms() {
        let f = ExpPoly::exponential(ONE, vec![c(1.0)]).embedded(1, 3);
        assert_eq!(f.terms[0].zeta, vec![ZERO, c(1.0), ZERO]);
        let l = LinearForm { coeffs: vec![1, 0] };
        assert_eq!(l.shifted().coeffs, vec![1, 0, 1]);
        assert_eq!(l.embedded(2, 5).coeffs, vec![0, 0, 1, 0, 0]);
    }
}
