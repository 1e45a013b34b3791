//! Closed-form generators: Redfield `𝒢₂`, its secular GKLS reduction, and the
//! single-coupling fourth-order correction `𝒢₄`.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::bath::CorrelationMatrix;
use crate::error::{KineticError, Result};
use crate::linalg::{self, I, ONE, ZERO};
use crate::operator::{
    cluster_values, commutator_superop, hamiltonian_superop, left_superop, right_superop, sandwich_superop,
    OperatorMatrix, SpectralData, Superoperator,
};
use crate::system::System;
use crate::tolerances;

/// `-i𝓛_S + Σ_r λ^r 𝒢_r`.
#[derive(Clone, Debug, Serialize)]
pub struct GeneratorBundle {
    pub lambda: f64,
    pub free: Superoperator,
    pub parts: Vec<(usize, Superoperator)>,
    pub total: Superoperator,
}

impl GeneratorBundle {
    pub fn dim(&self) -> usize {
        self.total.dim()
    }

    pub fn orders(&self) -> Vec<usize> {
        self.parts.iter().map(|p| p.0).collect()
    }

    pub fn part(&self, r: usize) -> Option<&Superoperator> {
        self.parts.iter().find(|p| p.0 == r).map(|p| &p.1)
    }

    /// Same parts at another coupling strength.
    pub fn with_lambda(&self, lambda: f64) -> GeneratorBundle {
        let mut total = self.free.clone();
        for (r, g) in &self.parts {
            total.add_scaled(C64::new(lambda.powi(*r as i32), 0.0), g);
        }
        GeneratorBundle {
            lambda,
            free: self.free.clone(),
            parts: self.parts.clone(),
            total,
        }
    }

    /// Largest real part over the spectrum of the total generator.
    pub fn spectral_abscissa(&self) -> Result<f64> {
        let ev = linalg::eigenvalues(&self.total.matrix().view())?;
        Ok(ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Bundles `-i𝓛_S` with weighted corrections; orders must be distinct and
/// positive.
pub fn total_generator(hamiltonian: &OperatorMatrix, parts: Vec<(usize, Superoperator)>, lambda: f64) -> Result<GeneratorBundle> {
    let free = hamiltonian_superop(hamiltonian);
    let mut seen = Vec::new();
    for (r, g) in &parts {
        if *r == 0 {
            return Err(KineticError::InvalidParameter("order 0 is the free part and cannot be supplied".into()));
        }
        if seen.contains(r) {
            return Err(KineticError::DuplicateOrder(*r));
        }
        if g.dim() != free.dim() {
            return Err(KineticError::DimensionMismatch {
                context: format!("generator order {r}"),
                expected: free.dim(),
                found: g.dim(),
            });
        }
        seen.push(*r);
    }
    let mut parts = parts;
    parts.sort_by_key(|p| p.0);
    let bundle = GeneratorBundle {
        lambda,
        free: free.clone(),
        parts,
        total: free,
    };
    Ok(bundle.with_lambda(lambda))
}

/// Redfield generator without the `λ²` factor:
///
/// `𝒢₂ X = Σ_{αβω} -Γ_{αβ}(ω) (T_α T_β(ω) X - T_β(ω) X T_α)
///          - Γ_{αβ}(-ω)^* (X T_β(ω) T_α - T_α X T_β(ω))`.
pub fn redfield_superop(system: &System, cm: &CorrelationMatrix, degeneracy_tol: Option<f64>) -> Result<Superoperator> {
    check_labels(system, cm)?;
    let spec = system.spectral(degeneracy_tol)?;
    let eigenops = system.eigenoperators(&spec)?;
    let d = system.dim();
    let mut g = Superoperator::zeros(d);
    for (alpha, ta) in system.couplings.iter().enumerate() {
        for (beta, set) in eigenops.iter().enumerate() {
            for (omega, tb) in &set.entries {
                let gamma = cm.half_fourier(alpha, beta, *omega)?;
                let gamma_minus = cm.half_fourier(alpha, beta, -omega)?.conj();
                let a = left_superop(&ta.dot(tb)).sub(&sandwich_superop(tb, ta)?);
                let b = right_superop(&tb.dot(ta)).sub(&sandwich_superop(ta, tb)?);
                g.add_scaled(-gamma, &a);
                g.add_scaled(-gamma_minus, &b);
            }
        }
    }
    Ok(g)
}

/// Orders 0 and 2 at coupling `λ`.
pub fn redfield_fast(system: &System, cm: &CorrelationMatrix, lambda: f64) -> Result<GeneratorBundle> {
    let g2 = redfield_superop(system, cm, None)?;
    total_generator(&system.hamiltonian, vec![(2, g2)], lambda)
}

fn check_labels(system: &System, cm: &CorrelationMatrix) -> Result<()> {
    system.validate()?;
    if cm.len() != system.couplings.len() {
        return Err(KineticError::DimensionMismatch {
            context: "correlation labels vs coupling operators".into(),
            expected: system.couplings.len(),
            found: cm.len(),
        });
    }
    Ok(())
}

/// One secular channel: jump operators `T_α(ω)` and the rate matrix `γ_{αβ}(ω)`.
#[derive(Clone, Debug, Serialize)]
pub struct GKLSChannel {
    pub omega: f64,
    pub jumps: Vec<OperatorMatrix>,
    #[serde(serialize_with = "serialize_complex_matrix")]
    pub rates: Array2<C64>,
}

fn serialize_complex_matrix<S: serde::Serializer>(a: &Array2<C64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<[f64; 2]>> = a.outer_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect();
    rows.serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct GKLSData {
    pub lamb_shift: OperatorMatrix,
    pub channels: Vec<GKLSChannel>,
}

impl GKLSData {
    pub fn dim(&self) -> usize {
        self.lamb_shift.dim()
    }

    /// `-i[H_LS, ·] + Σ_ω Σ_{αβ} γ_{αβ}(ω) (T_β X T_α^dagger - ½{T_α^dagger T_β, X})`
    /// without the `λ²` factor.
    pub fn superoperator(&self) -> Superoperator {
        let d = self.dim();
        let mut s = hamiltonian_superop(&self.lamb_shift);
        for ch in &self.channels {
            for (a, ta) in ch.jumps.iter().enumerate() {
                let ta_dag = ta.dagger();
                for (b, tb) in ch.jumps.iter().enumerate() {
                    let g = ch.rates[[a, b]];
                    if g == ZERO {
                        continue;
                    }
                    let prod = ta_dag.dot(tb);
                    let term = sandwich_superop(tb, &ta_dag)
                        .expect("same dim")
                        .sub(&left_superop(&prod).add(&right_superop(&prod)).scale(C64::new(0.5, 0.0)));
                    s.add_scaled(g, &term);
                }
            }
        }
        debug_assert_eq!(s.dim(), d);
        s
    }

    /// Smallest eigenvalue over all rate matrices.
    pub fn min_rate_eigenvalue(&self) -> Result<f64> {
        let mut m = f64::INFINITY;
        for ch in &self.channels {
            m = m.min(linalg::min_eigenvalue(&ch.rates.view())?);
        }
        Ok(m)
    }

    /// `-i𝓛_S + λ² 𝒢_sec`.
    pub fn bundle(&self, hamiltonian: &OperatorMatrix, lambda: f64) -> Result<GeneratorBundle> {
        total_generator(hamiltonian, vec![(2, self.superoperator())], lambda)
    }

    /// For each channel pair `(ω, -ω)` with a single coupling, the ratio
    /// `γ(-ω)/γ(ω)` next to the Gibbs value `e^{-βω}`.
    pub fn detailed_balance(&self, beta: f64) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for ch in self.channels.iter().filter(|c| c.omega > 0.0) {
            if let Some(partner) = self.channels.iter().find(|c| (c.omega + ch.omega).abs() < 1e-12 * ch.omega.max(1.0)) {
                let up = partner.rates[[0, 0]].re;
                let down = ch.rates[[0, 0]].re;
                out.push((ch.omega, up / down, (-beta * ch.omega).exp()));
            }
        }
        out
    }
}

/// Secular reduction of the Redfield generator. Bohr frequencies closer than
/// `grouping_tol` (default: the degeneracy tolerance of `H_S`) share one
/// channel, with rates evaluated at the cluster midpoint.
pub fn secular_gkls(system: &System, cm: &CorrelationMatrix, grouping_tol: Option<f64>) -> Result<GKLSData> {
    check_labels(system, cm)?;
    let spec = system.spectral(None)?;
    let tol = grouping_tol.unwrap_or(spec.degeneracy_tol);
    let d = system.dim();
    let n = system.couplings.len();

    let mut diffs = Vec::new();
    for a in &spec.levels {
        for b in &spec.levels {
            diffs.push(b - a);
        }
    }
    let clusters = cluster_values(diffs, tol);

    let mut lamb = OperatorMatrix::zeros(d);
    let mut channels = Vec::new();
    for (omega, members) in clusters {
        let (lo, hi) = (members[0], members[members.len() - 1]);
        let jumps: Vec<OperatorMatrix> = system
            .couplings
            .iter()
            .map(|t| component_in_window(t, &spec, lo, hi))
            .collect();
        let negligible = jumps.iter().all(|j| j.max_abs() <= 1e-14);
        if negligible {
            continue;
        }
        let mut big_gamma = Array2::<C64>::zeros((n, n));
        for a in 0..n {
            for b in 0..n {
                if jumps[a].max_abs() > 1e-14 && jumps[b].max_abs() > 1e-14 {
                    big_gamma[[a, b]] = cm.half_fourier(a, b, omega)?;
                }
            }
        }
        let mut rates = Array2::<C64>::zeros((n, n));
        for a in 0..n {
            for b in 0..n {
                rates[[a, b]] = big_gamma[[a, b]] + big_gamma[[b, a]].conj();
                let shift = (big_gamma[[a, b]] - big_gamma[[b, a]].conj()) / (2.0 * I);
                if shift != ZERO {
                    lamb = lamb.add(&jumps[a].dagger().dot(&jumps[b]).scale(shift));
                }
            }
        }
        channels.push(GKLSChannel { omega, jumps, rates });
    }
    let data = GKLSData {
        lamb_shift: lamb.hermitized(),
        channels,
    };
    let lowest = data.min_rate_eigenvalue()?;
    if lowest < tolerances::MIN_EIGENVALUE {
        return Err(KineticError::InvalidParameter(format!(
            "secular rate matrix has eigenvalue {lowest:e} < 0; the correlation matrix is unphysical"
        )));
    }
    Ok(data)
}

fn component_in_window(t: &OperatorMatrix, spec: &SpectralData, lo: f64, hi: f64) -> OperatorMatrix {
    let d = t.dim();
    let mut acc = OperatorMatrix::zeros(d);
    for (ea, pa) in spec.levels.iter().zip(&spec.projectors) {
        for (eb, pb) in spec.levels.iter().zip(&spec.projectors) {
            let w = eb - ea;
            if w >= lo && w <= hi {
                acc = acc.add(&pa.dot(t).dot(pb));
            }
        }
    }
    acc
}

struct Factor {
    coef: C64,
    zeta: [C64; 3],
    op: Superoperator,
}

/// `𝒟(u; T(-c·s)) X = C(u) T X - C(u)^* X T` expanded over Bohr components
/// and exponential terms, with `u = Σ u_i s_i`.
fn d_factors(
    components: &[(f64, OperatorMatrix)],
    cm: &CorrelationMatrix,
    u: [f64; 3],
    c: [f64; 3],
) -> Result<Vec<Factor>> {
    let mut out = Vec::new();
    for (w, tw) in components {
        let l = left_superop(tw);
        let r = right_superop(tw);
        for k in cm.entry(0, 0)?.terms() {
            let phase = |i: usize| -I * w * c[i];
            out.push(Factor {
                coef: k.a,
                zeta: [0, 1, 2].map(|i| k.z * u[i] + phase(i)),
                op: l.clone(),
            });
            out.push(Factor {
                coef: -k.a.conj(),
                zeta: [0, 1, 2].map(|i| k.z.conj() * u[i] + phase(i)),
                op: r.clone(),
            });
        }
    }
    Ok(out)
}

fn accumulate(acc: &mut Superoperator, chain: &[&[Factor]], sign: f64) -> Result<()> {
    fn rec(
        acc: &mut Superoperator,
        chain: &[&[Factor]],
        coef: C64,
        zeta: [C64; 3],
        op: Option<Superoperator>,
    ) -> Result<()> {
        let Some((first, rest)) = chain.split_first() else {
            let mut value = coef;
            for z in zeta {
                if z.re <= 0.0 {
                    return Err(KineticError::Divergent {
                        group: "fourth-order closed form".into(),
                        residue: 1.0,
                    });
                }
                value /= z;
            }
            acc.add_scaled(value, op.as_ref().expect("nonempty chain"));
            return Ok(());
        };
        for f in first.iter() {
            let next = match &op {
                None => f.op.clone(),
                Some(o) => o.compose(&f.op),
            };
            let z = [zeta[0] + f.zeta[0], zeta[1] + f.zeta[1], zeta[2] + f.zeta[2]];
            rec(acc, rest, coef * f.coef, z, Some(next))?;
        }
        Ok(())
    }
    rec(acc, chain, C64::new(sign, 0.0), [ZERO; 3], None)
}

/// Fourth-order correction for `H_I = T ⊗ B`:
///
/// `𝒢₄ = ∫∫∫ { 𝒞₀𝒞₁ [𝒟_a𝒟_b + 𝒟_c𝒟_d] - 𝒞₀𝒟_e𝒞₁𝒟_f }`
///
/// with `𝒞₀ = [T, ·]`, `𝒞₁ = [T(-s₃), ·]` and
/// `𝒟_a = 𝒟(s₂+s₃; T(-s₂-s₃))`, `𝒟_b = 𝒟(s₁+s₂; T(-s₁-s₂-s₃))`,
/// `𝒟_c = 𝒟(s₂; T(-s₂-s₃))`, `𝒟_d = 𝒟(s₁+s₂+s₃; T(-s₁-s₂-s₃))`,
/// `𝒟_e = 𝒟(s₁+s₃; T(-s₁-s₃))`, `𝒟_f = 𝒟(s₂; T(-s₂-s₃))`.
/// Every exponent is damped in every variable, so each product integrates
/// to `Π 1/ζ_i`.
pub fn fourth_order_fast(system: &System, cm: &CorrelationMatrix) -> Result<Superoperator> {
    system.validate()?;
    if system.couplings.len() != 1 || cm.len() != 1 {
        return Err(KineticError::Unsupported(
            "the closed fourth-order form needs a single coupling term; use the engine path".into(),
        ));
    }
    let t = &system.couplings[0];
    let d = system.dim();
    let spec = system.spectral(None)?;
    let set = crate::operator::bohr_decompose(t, &spec)?;
    if set.is_empty() {
        return Ok(Superoperator::zeros(d));
    }
    let comps = &set.entries;

    let c0 = [Factor { coef: ONE, zeta: [ZERO; 3], op: commutator_superop(t) }];
    let c1: Vec<Factor> = comps
        .iter()
        .map(|(w, tw)| Factor { coef: ONE, zeta: [ZERO, ZERO, -I * w], op: commutator_superop(tw) })
        .collect();
    let da = d_factors(comps, cm, [0.0, 1.0, 1.0], [0.0, 1.0, 1.0])?;
    let db = d_factors(comps, cm, [1.0, 1.0, 0.0], [1.0, 1.0, 1.0])?;
    let dc = d_factors(comps, cm, [0.0, 1.0, 0.0], [0.0, 1.0, 1.0])?;
    let dd = d_factors(comps, cm, [1.0, 1.0, 1.0], [1.0, 1.0, 1.0])?;
    let de = d_factors(comps, cm, [1.0, 0.0, 1.0], [1.0, 0.0, 1.0])?;
    let df = d_factors(comps, cm, [0.0, 1.0, 0.0], [0.0, 1.0, 1.0])?;

    let mut g = Superoperator::zeros(d);
    accumulate(&mut g, &[&c0, &c1, &da, &db], 1.0)?;
    accumulate(&mut g, &[&c0, &c1, &dc, &dd], 1.0)?;
    accumulate(&mut g, &[&c0, &de, &c1, &df], -1.0)?;
    Ok(g)
}
