//! Kinetic-term IR for the recovery-map corrections and the recursion that
//! generates them.
//!
//! A term stands for
//!
//! ```text
//! scalar · ∫ ds · w(s) · L_1 ⋯ L_p ρ_S R_1 ⋯ R_q ⊗ BL_1 ⋯ BL_a ρ_R BR_1 ⋯ BR_b
//! ```
//!
//! where each system operator is a Bohr component `T_α(ω)` at time
//! `t = -Σ c_i s_i` (phase `e^{-iωt}`), each bath operator is `B_α(t)`, and
//! `w` collects already-averaged correlation factors.

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::expoly::{ExpPoly, LinearForm};
use crate::bath::CorrelationMatrix;
use crate::error::{KineticError, Result};
use crate::linalg::{I, ONE};
use crate::operator::{EigenopSet, OperatorMatrix};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SysOp {
    pub alpha: usize,
    /// Index into the coupling's `EigenopSet`.
    pub omega: usize,
    pub time: LinearForm,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BathOp {
    pub alpha: usize,
    pub time: LinearForm,
}

#[derive(Clone, Debug, Serialize)]
pub struct KineticTerm {
    pub scalar: C64,
    /// Left factors, outermost first.
    pub left: Vec<SysOp>,
    /// Right factors, innermost first.
    pub right: Vec<SysOp>,
    pub bath_left: Vec<BathOp>,
    pub bath_right: Vec<BathOp>,
    pub weight: ExpPoly,
    pub num_vars: usize,
}

impl KineticTerm {
    /// `ρ_S ⊗ ρ_R`.
    pub fn seed() -> Self {
        KineticTerm {
            scalar: ONE,
            left: Vec::new(),
            right: Vec::new(),
            bath_left: Vec::new(),
            bath_right: Vec::new(),
            weight: ExpPoly::one(0),
            num_vars: 0,
        }
    }

    /// Bath string with everything moved left of `ρ_R`:
    /// `Tr[BL ρ_R BR] = <BR BL>`.
    pub fn canonical_bath(&self) -> Vec<BathOp> {
        self.bath_right.iter().chain(&self.bath_left).cloned().collect()
    }

    /// `U_0(s) (·) U_S(-s)` with a fresh variable `s`.
    fn shifted(&self) -> Self {
        let shift_sys = |ops: &[SysOp]| -> Vec<SysOp> {
            ops.iter()
                .map(|o| SysOp { alpha: o.alpha, omega: o.omega, time: o.time.shifted() })
                .collect()
        };
        let shift_bath = |ops: &[BathOp]| -> Vec<BathOp> {
            ops.iter().map(|o| BathOp { alpha: o.alpha, time: o.time.shifted() }).collect()
        };
        KineticTerm {
            scalar: self.scalar,
            left: shift_sys(&self.left),
            right: shift_sys(&self.right),
            bath_left: shift_bath(&self.bath_left),
            bath_right: shift_bath(&self.bath_right),
            weight: self.weight.embedded(0, self.num_vars + 1),
            num_vars: self.num_vars + 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TermSet {
    pub order: usize,
    pub terms: Vec<KineticTerm>,
}

/// A bath-averaged term of a generator: `scalar · ∫ w(s) L_1⋯L_p X R_1⋯R_q`.
#[derive(Clone, Debug, Serialize)]
pub struct GenTerm {
    pub scalar: C64,
    pub left: Vec<SysOp>,
    pub right: Vec<SysOp>,
    pub weight: ExpPoly,
    pub num_vars: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorTerms {
    pub order: usize,
    pub terms: Vec<GenTerm>,
}

/// Bohr components of every coupling, plus a switch for dropping terms whose
/// operator products vanish identically.
#[derive(Clone, Debug)]
pub struct Couplings {
    pub dim: usize,
    pub eigenops: Vec<EigenopSet>,
    pub prune: bool,
}

impl Couplings {
    pub fn component(&self, op: &SysOp) -> &OperatorMatrix {
        &self.eigenops[op.alpha].entries[op.omega].1
    }

    pub fn frequency(&self, op: &SysOp) -> f64 {
        self.eigenops[op.alpha].entries[op.omega].0
    }

    /// Ordered product of the components.
    pub fn product(&self, ops: &[SysOp]) -> OperatorMatrix {
        ops.iter()
            .fold(OperatorMatrix::identity(self.dim), |acc, o| acc.dot(self.component(o)))
    }

    fn vanishes(&self, ops: &[SysOp]) -> bool {
        if !self.prune || ops.len() < 2 {
            return false;
        }
        let scale: f64 = ops.iter().map(|o| self.component(o).max_abs()).product();
        self.product(ops).max_abs() <= 1e-14 * scale
    }

    fn keeps(&self, left: &[SysOp], right: &[SysOp]) -> bool {
        !(self.vanishes(left) || self.vanishes(right))
    }

    fn insertions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.eigenops
            .iter()
            .enumerate()
            .flat_map(|(a, set)| (0..set.len()).map(move |w| (a, w)))
    }
}

/// One Wick pairing factor `C_{α₁α₂}(t₁ - t₂)` as exponentials in `s`.
fn pair_factor(cm: &CorrelationMatrix, first: &BathOp, second: &BathOp, num_vars: usize) -> Result<ExpPoly> {
    // t₁ - t₂ = Σ (c₂ - c₁)_i s_i
    let d: Vec<i64> = (0..num_vars)
        .map(|i| second.time.coeffs[i] as i64 - first.time.coeffs[i] as i64)
        .collect();
    let nonneg = d.iter().all(|&x| x >= 0);
    let nonpos = d.iter().all(|&x| x <= 0);
    let mut out = ExpPoly::zero(num_vars);
    if nonneg {
        for k in cm.entry(first.alpha, second.alpha)?.terms() {
            out.terms.push(super::expoly::Monomial {
                coef: k.a,
                powers: vec![0; num_vars],
                zeta: d.iter().map(|&x| k.z * x as f64).collect(),
            });
        }
    } else if nonpos {
        // C_{α₁α₂}(u) = conj(C_{α₂α₁}(-u)) for u < 0
        for k in cm.entry(second.alpha, first.alpha)?.terms() {
            out.terms.push(super::expoly::Monomial {
                coef: k.a.conj(),
                powers: vec![0; num_vars],
                zeta: d.iter().map(|&x| k.z.conj() * (-x) as f64).collect(),
            });
        }
    } else {
        return Err(KineticError::NonNestedTimes(format!("{:?} vs {:?}", first.time.coeffs, second.time.coeffs)));
    }
    Ok(out)
}

/// Gaussian average of a canonical bath string as an integrand; `None` for
/// odd strings, which vanish exactly.
pub fn wick_integrand(cm: &CorrelationMatrix, ops: &[BathOp], num_vars: usize) -> Result<Option<ExpPoly>> {
    if ops.len() % 2 == 1 {
        return Ok(None);
    }
    if ops.is_empty() {
        return Ok(Some(ExpPoly::one(num_vars)));
    }
    let n = ops.len();
    let mut table: Vec<Vec<Option<ExpPoly>>> = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            table[i][j] = Some(pair_factor(cm, &ops[i], &ops[j], num_vars)?);
        }
    }
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut acc = ExpPoly::zero(num_vars);
    pairings(&table, &mut remaining, ExpPoly::one(num_vars), &mut acc);
    acc.canonicalize();
    Ok(Some(acc))
}

fn pairings(table: &[Vec<Option<ExpPoly>>], remaining: &mut Vec<usize>, partial: ExpPoly, acc: &mut ExpPoly) {
    if remaining.is_empty() {
        acc.add_assign(&partial);
        return;
    }
    let first = remaining.remove(0);
    for k in 0..remaining.len() {
        let partner = remaining.remove(k);
        let factor = table[first][partner].as_ref().expect("upper triangle");
        if !factor.is_empty() {
            pairings(table, remaining, partial.mul(factor), acc);
        }
        remaining.insert(k, partner);
    }
    remaining.insert(0, first);
}

fn zero_time_sys(alpha: usize, omega: usize, num_vars: usize) -> SysOp {
    SysOp { alpha, omega, time: LinearForm::zero(num_vars) }
}

/// Bath average `Tr_R` of every term, optionally after applying
/// `-i 𝓛_I = -i[Σ T_α ⊗ B_α, ·]` at time zero (the generator formula).
pub fn bath_average(ts: &TermSet, cm: &CorrelationMatrix, ctx: &Couplings, insert: bool) -> Result<Vec<GenTerm>> {
    let mut out = Vec::new();
    for term in &ts.terms {
        let m = term.num_vars;
        if !insert {
            if let Some(w) = wick_integrand(cm, &term.canonical_bath(), m)? {
                out.push(GenTerm {
                    scalar: term.scalar,
                    left: term.left.clone(),
                    right: term.right.clone(),
                    weight: term.weight.mul(&w),
                    num_vars: m,
                });
            }
            continue;
        }
        for alpha in 0..ctx.eigenops.len() {
            // left and right insertions give the same canonical string by cyclicity
            let mut canonical = term.bath_right.clone();
            canonical.push(BathOp { alpha, time: LinearForm::zero(m) });
            canonical.extend(term.bath_left.iter().cloned());
            let Some(w) = wick_integrand(cm, &canonical, m)? else {
                continue;
            };
            let weight = term.weight.mul(&w);
            if weight.is_empty() {
                continue;
            }
            for omega in 0..ctx.eigenops[alpha].len() {
                let op = zero_time_sys(alpha, omega, m);
                let mut left = vec![op.clone()];
                left.extend(term.left.iter().cloned());
                if ctx.keeps(&left, &term.right) {
                    out.push(GenTerm {
                        scalar: -I * term.scalar,
                        left,
                        right: term.right.clone(),
                        weight: weight.clone(),
                        num_vars: m,
                    });
                }
                let mut right = term.right.clone();
                right.push(op);
                if ctx.keeps(&term.left, &right) {
                    out.push(GenTerm {
                        scalar: I * term.scalar,
                        left: term.left.clone(),
                        right,
                        weight: weight.clone(),
                        num_vars: m,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Symbolic `𝒢_r = -i Tr_R[𝓛_I ℛ_{r-1}]`.
pub fn generator_terms(r: usize, prev: &TermSet, cm: &CorrelationMatrix, ctx: &Couplings) -> Result<GeneratorTerms> {
    if r == 0 || prev.order + 1 != r {
        return Err(KineticError::MissingOrder(r.saturating_sub(1)));
    }
    Ok(GeneratorTerms { order: r, terms: bath_average(prev, cm, ctx, true)? })
}

/// `ℛ_r = -∫_0^∞ ds { i𝓛_I(-s) ℛ_{r-1}(-s) + Σ_{n=1}^r ℛ_{r-n}(-s) 𝒢_n(-s) }`.
///
/// `prior[k]` holds `ℛ_k` for `k < r` and `generators[n]` holds `𝒢_n` for
/// `1 <= n <= r` (`generators[0]` is ignored).
pub fn recursion_step(
    r: usize,
    prior: &[&TermSet],
    generators: &[&GeneratorTerms],
    ctx: &Couplings,
) -> Result<TermSet> {
    if r == 0 {
        return Ok(TermSet { order: 0, terms: vec![KineticTerm::seed()] });
    }
    if prior.len() < r {
        return Err(KineticError::MissingOrder(prior.len()));
    }
    if generators.len() <= r {
        return Err(KineticError::MissingOrder(generators.len()));
    }
    let mut unshifted: Vec<KineticTerm> = Vec::new();

    // i𝓛_I ℛ_{r-1}: left insertion +i, right insertion -i
    for term in &prior[r - 1].terms {
        let m = term.num_vars;
        for (alpha, omega) in ctx.insertions() {
            let op = zero_time_sys(alpha, omega, m);
            let bath = BathOp { alpha, time: LinearForm::zero(m) };

            let mut left = vec![op.clone()];
            left.extend(term.left.iter().cloned());
            if ctx.keeps(&left, &term.right) {
                let mut bath_left = vec![bath.clone()];
                bath_left.extend(term.bath_left.iter().cloned());
                unshifted.push(KineticTerm {
                    scalar: I * term.scalar,
                    left,
                    right: term.right.clone(),
                    bath_left,
                    bath_right: term.bath_right.clone(),
                    weight: term.weight.clone(),
                    num_vars: m,
                });
            }

            let mut right = term.right.clone();
            right.push(op);
            if ctx.keeps(&term.left, &right) {
                let mut bath_right = term.bath_right.clone();
                bath_right.push(bath);
                unshifted.push(KineticTerm {
                    scalar: -I * term.scalar,
                    left: term.left.clone(),
                    right,
                    bath_left: term.bath_left.clone(),
                    bath_right,
                    weight: term.weight.clone(),
                    num_vars: m,
                });
            }
        }
    }

    // ℛ_{r-n} 𝒢_n: the generator acts first, so its operators sit innermost
    for n in 1..=r {
        let gens = generators[n];
        if gens.order != n {
            return Err(KineticError::MissingOrder(n));
        }
        for rt in &prior[r - n].terms {
            for g in &gens.terms {
                let m1 = rt.num_vars;
                let total = m1 + g.num_vars;
                let pad_r = |ops: &[SysOp]| -> Vec<SysOp> {
                    ops.iter()
                        .map(|o| SysOp { alpha: o.alpha, omega: o.omega, time: o.time.padded(total) })
                        .collect()
                };
                let embed_g = |ops: &[SysOp]| -> Vec<SysOp> {
                    ops.iter()
                        .map(|o| SysOp { alpha: o.alpha, omega: o.omega, time: o.time.embedded(m1, total) })
                        .collect()
                };
                let mut left = pad_r(&rt.left);
                left.extend(embed_g(&g.left));
                let mut right = embed_g(&g.right);
                right.extend(pad_r(&rt.right));
                if !ctx.keeps(&left, &right) {
                    continue;
                }
                let pad_b = |ops: &[BathOp]| -> Vec<BathOp> {
                    ops.iter().map(|o| BathOp { alpha: o.alpha, time: o.time.padded(total) }).collect()
                };
                unshifted.push(KineticTerm {
                    scalar: rt.scalar * g.scalar,
                    left,
                    right,
                    bath_left: pad_b(&rt.bath_left),
                    bath_right: pad_b(&rt.bath_right),
                    weight: rt.weight.embedded(0, total).mul(&g.weight.embedded(m1, total)),
                    num_vars: total,
                });
            }
        }
    }

    let terms = unshifted
        .into_iter()
        .map(|t| {
            let mut s = t.shifted();
            s.scalar = -s.scalar;
            s
        })
        .collect();
    Ok(TermSet { order: r, terms })
}
