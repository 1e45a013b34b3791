//! Exact dynamics of the system coupled to a finite set of bosonic modes.
//!
//! The bath correlation is replaced by `Σ_j g_j² e^{-iω_j t}` with couplings
//! sampled from `J(ω) = Re Γ(ω)/π` on a uniform midpoint grid. Each bath
//! operator is `B_α = w_α b + w̄_α b^dagger` with `b = Σ_j g_j b_j`, and the
//! bath starts in the vacuum.
//!
//! Two backends: a joint diagonalization in a Fock basis restricted by total
//! quanta, and a per-mode product for couplings that commute with `H_S`
//! (pure dephasing), where the modes decouple in each eigenspace of `T`.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::bath::ExpSum;
use crate::error::{KineticError, Result};
use crate::linalg::{self, I, ONE, ZERO};
use crate::operator::OperatorMatrix;
use crate::system::System;
use crate::tolerances;

/// Discretized bath: mode frequencies and couplings.
#[derive(Clone, Debug, Serialize)]
pub struct FiniteBathSpec {
    pub modes: Vec<(f64, f64)>,
    /// Per-mode Fock cutoff for the factorized backend.
    pub n_max: usize,
    /// Sampling window `(lo, hi)`.
    pub window: (f64, f64),
    /// Sup-norm error of the reconstructed correlation on `[0, t_max]`.
    pub reconstruction_error: f64,
    pub t_max: f64,
}

impl FiniteBathSpec {
    /// `Σ_j g_j² e^{-iω_j t}`.
    pub fn correlation(&self, t: f64) -> C64 {
        self.modes.iter().map(|(w, g)| g * g * C64::new(0.0, -w * t).exp()).sum()
    }

    pub fn spacing(&self) -> f64 {
        (self.window.1 - self.window.0) / self.modes.len() as f64
    }

    /// `2π/Δω`; discrete baths revive after this time.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.spacing()
    }

    /// Sup-norm distance to `target` on 801 points of `[0, t_max]`.
    pub fn sup_error(&self, target: &ExpSum, t_max: f64) -> f64 {
        (0..=800)
            .map(|k| {
                let t = t_max * k as f64 / 800.0;
                (self.correlation(t) - target.eval(t)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Samples `J(ω) = Re Γ(ω)/π` at the midpoints of `m` cells covering
/// `window`, with `g_j² = J(ω_j) Δω`.
pub fn discretize_bath(target: &ExpSum, m: usize, window: (f64, f64), t_max: f64) -> Result<FiniteBathSpec> {
    if m < 1 {
        return Err(KineticError::InvalidParameter("need at least one mode".into()));
    }
    let (lo, hi) = window;
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(KineticError::InvalidParameter(format!("bad frequency window ({lo}, {hi})")));
    }
    let dw = (hi - lo) / m as f64;
    let mut modes = Vec::with_capacity(m);
    for j in 0..m {
        let w = lo + (j as f64 + 0.5) * dw;
        let density = target.half_fourier(w).re / std::f64::consts::PI;
        if density < -1e-14 {
            return Err(KineticError::InvalidParameter(format!(
                "spectral density is negative ({density:e}) at ω = {w}; no bosonic surrogate exists"
            )));
        }
        modes.push((w, (density.max(0.0) * dw).sqrt()));
    }
    let mut spec = FiniteBathSpec {
        modes,
        n_max: 8,
        window,
        reconstruction_error: 0.0,
        t_max,
    };
    spec.reconstruction_error = spec.sup_error(target, t_max);
    Ok(spec)
}

type Occupation = Vec<(u32, u8)>;

fn occupations(m: usize, budget: usize) -> Vec<Occupation> {
    fn rec(m: usize, start: usize, left: usize, cur: &mut Occupation, out: &mut Vec<Occupation>) {
        out.push(cur.clone());
        if left == 0 {
            return;
        }
        for k in start..m {
            let bumped = matches!(cur.last(), Some(&(mode, _)) if mode as usize == k);
            if bumped {
                cur.last_mut().unwrap().1 += 1;
            } else {
                cur.push((k as u32, 1));
            }
            rec(m, k, left - 1, cur, out);
            if bumped {
                cur.last_mut().unwrap().1 -= 1;
            } else {
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(m, 0, budget, &mut Vec::new(), &mut out);
    out
}

fn count(occ: &Occupation, k: u32) -> u8 {
    occ.iter().find(|p| p.0 == k).map(|p| p.1).unwrap_or(0)
}

fn with_delta(occ: &Occupation, k: u32, delta: i32) -> Occupation {
    let mut out: Occupation = Vec::with_capacity(occ.len() + 1);
    let mut placed = false;
    for &(mode, n) in occ {
        if mode == k {
            placed = true;
            let v = n as i32 + delta;
            if v > 0 {
                out.push((mode, v as u8));
            }
        } else {
            if !placed && mode > k && delta > 0 {
                out.push((k, delta as u8));
                placed = true;
            }
            out.push((mode, n));
        }
    }
    if !placed && delta > 0 {
        out.push((k, delta as u8));
    }
    out
}

/// Truncation of the joint space.
#[derive(Clone, Debug)]
pub struct JointOptions {
    /// Upper bound on system excitation plus bath quanta.
    pub n_total: usize,
    /// Excitation carried by each system basis state (default: all zero).
    pub system_quanta: Option<Vec<usize>>,
    pub dimension_cap: usize,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions {
            n_total: 1,
            system_quanta: None,
            dimension_cap: tolerances::FINITE_BATH_DIMENSION_CAP,
        }
    }
}

/// Size of the truncated joint basis, `Σ_i C(m + n_i, n_i)` with
/// `n_i = n_total - quanta_i`, without enumerating it.
pub fn joint_dimension(d: usize, modes: usize, opts: &JointOptions) -> f64 {
    (0..d)
        .map(|i| {
            let q = opts.system_quanta.as_ref().and_then(|v| v.get(i)).copied().unwrap_or(0);
            match opts.n_total.checked_sub(q) {
                Some(n) => (1..=n).fold(1.0f64, |acc, k| acc * (modes + k) as f64 / k as f64),
                None => 0.0,
            }
        })
        .sum()
}

/// Two-time request `<A₂(t₁ + τ) A₁(t₁)>`.
#[derive(Clone, Debug)]
pub struct TwoTimeRequest {
    pub a1: OperatorMatrix,
    pub a2: OperatorMatrix,
    /// `(t₁, τ)` pairs.
    pub pairs: Vec<(f64, f64)>,
}

/// Joint Hamiltonian `H_S + Σ ω_j b_j^dagger b_j + λ Σ_α T_α ⊗ B_α`,
/// diagonalized once.
pub struct JointModel {
    d: usize,
    basis: Vec<(usize, Occupation)>,
    index: HashMap<(usize, Occupation), usize>,
    modes: Vec<(f64, f64)>,
    raise: OperatorMatrix,
    lambda: f64,
    hamiltonian: Array2<C64>,
    energies: Array1<f64>,
    vectors: Array2<C64>,
}

impl JointModel {
    /// `weights[α] = w_α` in `B_α = w_α b + w̄_α b^dagger`.
    pub fn new(system: &System, weights: &[C64], fb: &FiniteBathSpec, lambda: f64, opts: &JointOptions) -> Result<Self> {
        system.validate()?;
        if weights.len() != system.couplings.len() {
            return Err(KineticError::DimensionMismatch {
                context: "bath operator weights vs coupling operators".into(),
                expected: system.couplings.len(),
                found: weights.len(),
            });
        }
        let d = system.dim();
        let quanta = opts.system_quanta.clone().unwrap_or_else(|| vec![0; d]);
        if quanta.len() != d {
            return Err(KineticError::DimensionMismatch {
                context: "system_quanta".into(),
                expected: d,
                found: quanta.len(),
            });
        }
        let m = fb.modes.len();
        let mut basis = Vec::new();
        // C(m + n, n) occupation vectors before any system filtering
        let unrestricted = (1..=opts.n_total).fold(1.0f64, |acc, k| acc * (m + k) as f64 / k as f64);
        if unrestricted * d as f64 > 64.0 * opts.dimension_cap as f64 {
            return Err(KineticError::DimensionCap {
                dim: (unrestricted * d as f64).min(usize::MAX as f64) as usize,
                cap: opts.dimension_cap,
            });
        }
        let all = occupations(m, opts.n_total);
        for i in 0..d {
            for occ in &all {
                let n: usize = occ.iter().map(|p| p.1 as usize).sum();
                if quanta[i] + n <= opts.n_total {
                    basis.push((i, occ.clone()));
                }
            }
        }
        let dim = basis.len();
        if dim > opts.dimension_cap {
            return Err(KineticError::DimensionCap { dim, cap: opts.dimension_cap });
        }
        let index: HashMap<(usize, Occupation), usize> = basis.iter().cloned().enumerate().map(|(k, b)| (b, k)).collect();

        let mut lower = OperatorMatrix::zeros(d);
        let mut raise = OperatorMatrix::zeros(d);
        for (t, w) in system.couplings.iter().zip(weights) {
            lower = lower.add(&t.scale(*w));
            raise = raise.add(&t.scale(w.conj()));
        }

        let hs = &system.hamiltonian;
        let mut h = Array2::<C64>::zeros((dim, dim));
        for (col, (i, occ)) in basis.iter().enumerate() {
            let bath_energy: f64 = occ.iter().map(|&(k, n)| fb.modes[k as usize].0 * n as f64).sum();
            h[[col, col]] += bath_energy;
            for ip in 0..d {
                let e = hs.get(ip, *i);
                if e != ZERO {
                    if let Some(&row) = index.get(&(ip, occ.clone())) {
                        h[[row, col]] += e;
                    }
                }
            }
            for &(k, n) in occ {
                let amp = fb.modes[k as usize].1 * (n as f64).sqrt() * lambda;
                let target = with_delta(occ, k, -1);
                for ip in 0..d {
                    let e = lower.get(ip, *i);
                    if e != ZERO {
                        if let Some(&row) = index.get(&(ip, target.clone())) {
                            h[[row, col]] += e * amp;
                        }
                    }
                }
            }
            for k in 0..m as u32 {
                let amp = fb.modes[k as usize].1 * (count(occ, k) as f64 + 1.0).sqrt() * lambda;
                if amp == 0.0 {
                    continue;
                }
                let mut target: Option<Occupation> = None;
                for ip in 0..d {
                    let e = raise.get(ip, *i);
                    if e != ZERO {
                        let tgt = target.get_or_insert_with(|| with_delta(occ, k, 1));
                        if let Some(&row) = index.get(&(ip, tgt.clone())) {
                            h[[row, col]] += e * amp;
                        }
                    }
                }
            }
        }
        let h = linalg::hermitize(&h.view());
        let (energies, vectors) = linalg::eigh(&h.view())?;
        Ok(JointModel {
            d,
            basis,
            index,
            modes: fb.modes.clone(),
            raise,
            lambda,
            hamiltonian: h,
            energies,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn hamiltonian(&self) -> &Array2<C64> {
        &self.hamiltonian
    }

    /// `|φ> ⊗ |vac>`.
    pub fn product_with_vacuum(&self, phi: &[C64]) -> Result<Array1<C64>> {
        let mut psi = Array1::zeros(self.dim());
        for (i, &a) in phi.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let k = self.index.get(&(i, Vec::new())).ok_or_else(|| {
                KineticError::InvalidParameter(format!("system state {i} with an empty bath lies outside the truncation"))
            })?;
            psi[*k] = a;
        }
        Ok(psi)
    }

    /// `e^{-iHt} ψ`.
    pub fn evolve(&self, psi: &Array1<C64>, t: f64) -> Array1<C64> {
        let coeffs = self.vectors.t().mapv(|z| z.conj()).dot(psi);
        let phased: Array1<C64> = coeffs
            .iter()
            .zip(self.energies.iter())
            .map(|(c, e)| c * C64::new(0.0, -e * t).exp())
            .collect();
        self.vectors.dot(&phased)
    }

    /// `Tr_R |ψ><χ|`.
    pub fn reduce(&self, psi: &Array1<C64>, chi: &Array1<C64>) -> OperatorMatrix {
        let mut by_occ: HashMap<&Occupation, Vec<(usize, usize)>> = HashMap::new();
        for (k, (i, occ)) in self.basis.iter().enumerate() {
            by_occ.entry(occ).or_default().push((*i, k));
        }
        let mut out = Array2::<C64>::zeros((self.d, self.d));
        for members in by_occ.values() {
            for &(i, ki) in members {
                for &(j, kj) in members {
                    out[[i, j]] += psi[ki] * chi[kj].conj();
                }
            }
        }
        OperatorMatrix::new(out).expect("square")
    }

    /// `(A ⊗ 1) ψ` projected onto the truncated basis.
    pub fn apply_system(&self, a: &OperatorMatrix, psi: &Array1<C64>) -> Array1<C64> {
        let mut out = Array1::zeros(self.dim());
        for (k, (j, occ)) in self.basis.iter().enumerate() {
            if psi[k] == ZERO {
                continue;
            }
            for i in 0..self.d {
                let e = a.get(i, *j);
                if e != ZERO {
                    if let Some(&row) = self.index.get(&(i, occ.clone())) {
                        out[row] += e * psi[k];
                    }
                }
            }
        }
        out
    }

    /// `<χ| T ⊗ B(τ) |ψ>` within the truncated basis, where
    /// `B(τ) = w Σ_j g_j e^{-iω_jτ} b_j + h.c.` is the freely evolved bath operator.
    pub fn coupling_matrix_element(
        &self,
        t_op: &OperatorMatrix,
        w: C64,
        tau: f64,
        chi: &Array1<C64>,
        psi: &Array1<C64>,
    ) -> C64 {
        let phases: Vec<C64> = self.modes.iter().map(|&(om, _)| C64::new(0.0, -om * tau).exp()).collect();
        let mut acc = ZERO;
        for (k, (j, occ)) in self.basis.iter().enumerate() {
            if psi[k] == ZERO {
                continue;
            }
            for &(mode, n) in occ {
                let amp = phases[mode as usize] * self.modes[mode as usize].1 * (n as f64).sqrt();
                let target = with_delta(occ, mode, -1);
                for i in 0..self.d {
                    let e = t_op.get(i, *j);
                    if e != ZERO {
                        if let Some(&row) = self.index.get(&(i, target.clone())) {
                            acc += chi[row].conj() * e * w * amp * psi[k];
                        }
                    }
                }
            }
            for (mode, &(_, g)) in self.modes.iter().enumerate() {
                let amp = phases[mode].conj() * g * (count(occ, mode as u32) as f64 + 1.0).sqrt();
                let target = with_delta(occ, mode as u32, 1);
                for i in 0..self.d {
                    let e = t_op.get(i, *j);
                    if e != ZERO {
                        if let Some(&row) = self.index.get(&(i, target.clone())) {
                            acc += chi[row].conj() * e * w.conj() * amp * psi[k];
                        }
                    }
                }
            }
        }
        acc
    }

    /// Norm of `P_out H ψ`: the rate at which amplitude would leave the
    /// truncated space.
    pub fn out_coupling(&self, psi: &Array1<C64>) -> f64 {
        let mut out: HashMap<(usize, Occupation), C64> = HashMap::new();
        for (k, (j, occ)) in self.basis.iter().enumerate() {
            if psi[k] == ZERO {
                continue;
            }
            for (mode, &(_, g)) in self.modes.iter().enumerate() {
                let amp = g * (count(occ, mode as u32) as f64 + 1.0).sqrt() * self.lambda;
                if amp == 0.0 {
                    continue;
                }
                for i in 0..self.d {
                    let e = self.raise.get(i, *j);
                    if e == ZERO {
                        continue;
                    }
                    let key = (i, with_delta(occ, mode as u32, 1));
                    if !self.index.contains_key(&key) {
                        *out.entry(key).or_insert(ZERO) += e * amp * psi[k];
                    }
                }
            }
        }
        out.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Tr_R e^{-βH} / Z` in the truncated space.
    pub fn mean_force_state(&self, beta: f64) -> Result<OperatorMatrix> {
        let e0 = self.energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut out = OperatorMatrix::zeros(self.d);
        let mut z = 0.0;
        for (k, e) in self.energies.iter().enumerate() {
            let p = (-beta * (e - e0)).exp();
            if p < 1e-300 {
                continue;
            }
            z += p;
            let v = self.vectors.column(k).to_owned();
            out = out.add(&self.reduce(&v, &v).scale(C64::new(p, 0.0)));
        }
        Ok(out.scale(C64::new(1.0 / z, 0.0)).hermitized())
    }
}

/// Reduced trajectory and requested two-time functions.
#[derive(Clone, Debug)]
pub struct FiniteBathRun {
    pub times: Vec<f64>,
    pub states: Vec<OperatorMatrix>,
    /// `<A₂(t₁ + τ) A₁(t₁)>` per request, per pair.
    pub correlators: Vec<Vec<C64>>,
    pub mean_force: Option<OperatorMatrix>,
    /// Time-integrated out-coupling norm: a bound on the truncation error of
    /// the joint state.
    pub leakage: f64,
    pub leakage_flag: bool,
    /// Largest `|‖ψ(t)‖ - 1|` over the samples.
    pub norm_drift: f64,
    pub dimension: usize,
}

#[derive(Clone, Debug, Default)]
pub struct EvolveOptions {
    pub joint: JointOptions,
    pub two_time: Vec<TwoTimeRequest>,
    pub mean_force_beta: Option<f64>,
}

/// Evolves `ρ_S ⊗ |vac><vac|` under the joint Hamiltonian and returns
/// `Tr_R` snapshots.
pub fn finite_bath_evolve(
    system: &System,
    weights: &[C64],
    fb: &FiniteBathSpec,
    lambda: f64,
    rho0: &OperatorMatrix,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<FiniteBathRun> {
    rho0.require_density_matrix("initial state")?;
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(KineticError::GridNotAscending);
    }
    let model = JointModel::new(system, weights, fb, lambda, &opts.joint)?;
    let (p, vecs) = linalg::eigh(&rho0.view())?;
    let mut branches = Vec::new();
    for k in 0..p.len() {
        if p[k] > 1e-15 {
            let phi: Vec<C64> = vecs.column(k).to_vec();
            branches.push((p[k], model.product_with_vacuum(&phi)?));
        }
    }

    let mut states = Vec::with_capacity(times.len());
    let mut leakage = 0.0;
    let mut norm_drift = 0.0f64;
    let mut prev: Option<(f64, f64)> = None;
    for &t in times {
        let mut rho = OperatorMatrix::zeros(model.d);
        let mut out_rate = 0.0;
        for (pk, psi0) in &branches {
            let psi = model.evolve(psi0, t);
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            norm_drift = norm_drift.max((norm - 1.0).abs());
            out_rate += pk * model.out_coupling(&psi);
            rho = rho.add(&model.reduce(&psi, &psi).scale(C64::new(*pk, 0.0)));
        }
        match prev {
            None => leakage += out_rate * t,
            Some((t0, r0)) => leakage += 0.5 * (out_rate + r0) * (t - t0),
        }
        prev = Some((t, out_rate));
        states.push(rho);
    }

    let mut correlators = Vec::with_capacity(opts.two_time.len());
    for req in &opts.two_time {
        let mut values = Vec::with_capacity(req.pairs.len());
        for &(t1, tau) in &req.pairs {
            let mut acc = ZERO;
            for (pk, psi0) in &branches {
                let psi = model.evolve(psi0, t1);
                let u = model.evolve(&model.apply_system(&req.a1, &psi), tau);
                let v = model.evolve(&psi, tau);
                let au = model.apply_system(&req.a2, &u);
                acc += v.iter().zip(au.iter()).map(|(x, y)| x.conj() * y).sum::<C64>() * *pk;
            }
            values.push(acc);
        }
        correlators.push(values);
    }

    let mean_force = match opts.mean_force_beta {
        Some(beta) => Some(model.mean_force_state(beta)?),
        None => None,
    };
    Ok(FiniteBathRun {
        times: times.to_vec(),
        states,
        correlators,
        mean_force,
        leakage,
        leakage_flag: leakage > tolerances::FOCK_LEAKAGE,
        norm_drift,
        dimension: model.dim(),
    })
}

/// Coherence factor `ρ₀₁(t)/ρ₀₁(0)` for `H_S = (ω₀/2)σ_z`, `T = σ_z`,
/// `B = w b + w̄ b^dagger`. Each mode is diagonalized in `n_max + 1` Fock
/// states for both signs of `σ_z`. Returns the samples and the largest
/// top-level population encountered.
pub fn dephasing_finite_bath(fb: &FiniteBathSpec, w: C64, lambda: f64, omega0: f64, times: &[f64]) -> Result<(Vec<C64>, f64)> {
    let n = fb.n_max + 1;
    let mut factors = vec![ONE; times.len()];
    let mut top = 0.0f64;
    for &(wj, gj) in &fb.modes {
        let mut branch = Vec::with_capacity(2);
        for sign in [1.0, -1.0] {
            let mut h = Array2::<C64>::zeros((n, n));
            for k in 0..n {
                h[[k, k]] = C64::new(wj * k as f64, 0.0);
                if k + 1 < n {
                    let amp = sign * lambda * gj * ((k + 1) as f64).sqrt();
                    h[[k, k + 1]] = w * amp;
                    h[[k + 1, k]] = w.conj() * amp;
                }
            }
            branch.push(linalg::eigh(&h.view())?);
        }
        for (idx, &t) in times.iter().enumerate() {
            let mut evolved = Vec::with_capacity(2);
            for (vals, vecs) in &branch {
                // e^{-iHt}|0>
                let c0: Array1<C64> = vecs.row(0).mapv(|z| z.conj());
                let phased: Array1<C64> = c0.iter().zip(vals.iter()).map(|(c, e)| c * (-I * e * t).exp()).collect();
                let psi = vecs.dot(&phased);
                top = top.max(psi[n - 1].norm_sqr());
                evolved.push(psi);
            }
            // <vac| e^{iH_- t} e^{-iH_+ t} |vac>
            let overlap: C64 = evolved[1].iter().zip(evolved[0].iter()).map(|(a, b)| a.conj() * b).sum();
            factors[idx] *= overlap;
        }
    }
    let out = times
        .iter()
        .zip(factors)
        .map(|(&t, f)| C64::new(0.0, -omega0 * t).exp() * f)
        .collect();
    Ok((out, top))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::lorentzian_correlation;
    use crate::system::qubit;

    #[test]
    fn occupation_enumeration_counts_multisets() {
        // C(m + n, n) multisets of size <= n
        assert_eq!(occupations(3, 2).len(), 10);
        assert_eq!(occupations(5, 1).len(), 6);
        assert_eq!(with_delta(&vec![(1, 1), (4, 2)], 2, 1), vec![(1, 1), (2, 1), (4, 2)]);
        assert_eq!(with_delta(&vec![(1, 1), (4, 2)], 4, -1), vec![(1, 1), (4, 1)]);
        assert_eq!(with_delta(&vec![(1, 1)], 1, -1), vec![]);
        assert_eq!(with_delta(&vec![(1, 1)], 7, 1), vec![(1, 1), (7, 1)]);
    }

    #[test]
    fn jaynes_cummings_single_mode() {
        // one resonant mode, B = X, Y quadratures -> σ_+ b + σ_- b^dagger
        let fb = FiniteBathSpec {
            modes: vec![(1.0, 0.8)],
            n_max: 4,
            window: (0.5, 1.5),
            reconstruction_error: 0.0,
            t_max: 1.0,
        };
        let sys = qubit::damped(1.0);
        let weights = [C64::new(0.5, 0.0), C64::new(0.0, 0.5)];
        let lambda = 0.7;
        let opts = EvolveOptions {
            joint: JointOptions { n_total: 1, system_quanta: Some(vec![1, 0]), ..Default::default() },
            ..Default::default()
        };
        let times: Vec<f64> = (0..20).map(|k| 0.3 * k as f64).collect();
        let run = finite_bath_evolve(&sys, &weights, &fb, lambda, &OperatorMatrix::unit(2, 0, 0), &times, &opts).unwrap();
        for (t, rho) in times.iter().zip(&run.states) {
            let expect = (lambda * 0.8 * t).cos().powi(2);
            assert!((rho.get(0, 0).re - expect).abs() < 1e-12);
        }
        assert!(run.leakage < 1e-14);
        assert!(run.norm_drift < 1e-12);
    }

    #[test]
    fn no_coupling_is_free_evolution() {
        let target = lorentzian_correlation(1.0, 1.0, 0.0).unwrap();
        let fb = discretize_bath(&target, 6, (-3.0, 3.0), 5.0).unwrap();
        let sys = qubit::damped(1.3);
        let rho0 = OperatorMatrix::projector(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let opts = EvolveOptions {
            joint: JointOptions { n_total: 2, ..Default::default() },
            ..Default::default()
        };
        let times = [0.0, 0.7, 2.1];
        let run = finite_bath_evolve(&sys, &[C64::new(0.5, 0.0), C64::new(0.0, 0.5)], &fb, 0.0, &rho0, &times, &opts).unwrap();
        let spec = sys.spectral(None).unwrap();
        for (t, rho) in times.iter().zip(&run.states) {
            let u = spec.evolution(*t);
            let free = u.dot(&rho0).dot(&u.dagger());
            assert!(rho.max_abs_diff(&free) < 1e-12);
        }
    }

    #[test]
    fn joint_and_factorized_dephasing_agree() {
        let target = ExpSum::single(C64::new(1.0, 0.0), C64::new(1.0, 0.0)).unwrap();
        let mut fb = discretize_bath(&target, 3, (-2.0, 2.0), 3.0).unwrap();
        fb.n_max = 6;
        let sys = qubit::dephasing(0.9);
        let lambda = 0.3;
        let times = [0.0, 0.5, 1.5];
        let (fac, top) = dephasing_finite_bath(&fb, ONE, lambda, 0.9, &times).unwrap();
        let plus = OperatorMatrix::projector(&[C64::new(0.5f64.sqrt(), 0.0), C64::new(0.5f64.sqrt(), 0.0)]);
        let opts = EvolveOptions {
            joint: JointOptions { n_total: 6, ..Default::default() },
            ..Default::default()
        };
        let run = finite_bath_evolve(&sys, &[ONE], &fb, lambda, &plus, &times, &opts).unwrap();
        assert!(top < 1e-6);
        for (k, rho) in run.states.iter().enumerate() {
            assert!((rho.get(0, 1) * 2.0 - fac[k]).norm() < 1e-6, "{} {}", rho.get(0, 1) * 2.0, fac[k]);
        }
    }

    #[test]
    fn discretization_reconstructs_lorentzian() {
        let target = lorentzian_correlation(1.0, 1.0, 0.0).unwrap();
        let coarse = discretize_bath(&target, 400, (-100.0, 100.0), 5.0).unwrap();
        assert!(coarse.reconstruction_error < 0.01, "{}", coarse.reconstruction_error);
        assert!((coarse.recurrence_time() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn shifted_coupling_element_is_free_bath_evolution() {
        // with λ = 0 and H_S = 0 the joint propagator is e^{-iH_R t}
        let target = lorentzian_correlation(1.0, 1.0, 0.3).unwrap();
        let fb = discretize_bath(&target, 4, (-2.0, 2.0), 5.0).unwrap();
        let sys = System::new(OperatorMatrix::zeros(2), vec![qubit::sigma_x()]).unwrap();
        let opts = JointOptions { n_total: 2, ..Default::default() };
        let w = [C64::new(0.3, 0.4)];
        let coupled = JointModel::new(&sys, &w, &fb, 0.6, &opts).unwrap();
        let free = JointModel::new(&sys, &w, &fb, 0.0, &opts).unwrap();
        let h = 0.5f64.sqrt();
        let psi = coupled.evolve(&coupled.product_with_vacuum(&[C64::new(h, 0.0), C64::new(0.0, h)]).unwrap(), 1.3);
        let chi = coupled.evolve(&coupled.product_with_vacuum(&[ONE, ZERO]).unwrap(), 0.4);
        let t_op = qubit::sigma_y();
        for tau in [0.0, 0.7, -1.1] {
            let direct = free.coupling_matrix_element(&t_op, w[0], tau, &chi, &psi);
            let moved = free.coupling_matrix_element(&t_op, w[0], 0.0, &free.evolve(&chi, tau), &free.evolve(&psi, tau));
            assert!(direct.norm() > 1e-3);
            assert!((direct - moved).norm() < 1e-12);
        }
    }

    #[test]
    fn joint_dimension_counts_the_basis() {
        let target = lorentzian_correlation(1.0, 1.0, 0.0).unwrap();
        let fb = discretize_bath(&target, 5, (-4.0, 4.0), 5.0).unwrap();
        let w = [C64::new(0.5, 0.0), C64::new(0.0, 0.5)];
        for (n_total, quanta) in [(2, None), (1, Some(vec![1, 0])), (3, Some(vec![2, 0]))] {
            let opts = JointOptions { n_total, system_quanta: quanta, ..Default::default() };
            let model = JointModel::new(&qubit::damped(1.0), &w, &fb, 0.1, &opts).unwrap();
            assert_eq!(joint_dimension(2, 5, &opts), model.dim() as f64);
        }
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let target = lorentzian_correlation(1.0, 1.0, 0.0).unwrap();
        let fb = discretize_bath(&target, 40, (-4.0, 4.0), 5.0).unwrap();
        let opts = JointOptions { n_total: 3, system_quanta: None, dimension_cap: 1000 };
        let r = JointModel::new(&qubit::dephasing(1.0), &[ONE], &fb, 0.1, &opts);
        assert!(matches!(r, Err(KineticError::DimensionCap { .. })));
    }
}
