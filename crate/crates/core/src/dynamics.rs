//! Propagation of the autonomous master equation `dρ/dt = 𝒢 ρ`, steady
//! states, slipped initial states and positivity monitoring.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bath::{phi1, CorrelationMatrix};
use crate::error::{KineticError, Result};
use crate::generators::GeneratorBundle;
use crate::linalg::{self, ONE, ZERO};
use crate::operator::OperatorMatrix;
use crate::system::System;
use crate::tolerances;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SampleDiagnostics {
    pub trace_dev: f64,
    pub herm_dev: f64,
    pub min_eig: f64,
}

impl SampleDiagnostics {
    pub fn of(rho: &OperatorMatrix) -> Result<Self> {
        Ok(SampleDiagnostics {
            trace_dev: (rho.trace() - ONE).norm(),
            herm_dev: rho.hermiticity_deviation(),
            min_eig: rho.min_eigenvalue()?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<OperatorMatrix>,
    pub diagnostics: Vec<SampleDiagnostics>,
    /// Largest `‖e^{𝒢t}ρ₀ - (e^{𝒢t/2})²ρ₀‖_max` over the samples.
    pub step_doubling: f64,
}

impl Trajectory {
    pub fn from_states(times: Vec<f64>, states: Vec<OperatorMatrix>) -> Result<Self> {
        let diagnostics = states.iter().map(SampleDiagnostics::of).collect::<Result<Vec<_>>>()?;
        Ok(Trajectory { times, states, diagnostics, step_doubling: 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.states.first().map(|s| s.dim()).unwrap_or(0)
    }

    pub fn element(&self, i: usize, j: usize) -> Vec<C64> {
        self.states.iter().map(|s| s.get(i, j)).collect()
    }

    pub fn max_trace_deviation(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.trace_dev).fold(0.0, f64::max)
    }

    pub fn max_hermiticity_deviation(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.herm_dev).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.min_eig).fold(f64::INFINITY, f64::min)
    }

    /// CSV with `t`, `re_ij`/`im_ij` for all entries (row-major), then the
    /// diagnostics.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        for i in 0..d {
            for j in 0..d {
                header.push(format!("re_{i}{j}"));
                header.push(format!("im_{i}{j}"));
            }
        }
        header.extend(["trace_dev", "herm_dev", "min_eig"].map(String::from));
        w.write_record(&header)?;
        for ((t, s), diag) in self.times.iter().zip(&self.states).zip(&self.diagnostics) {
            let mut row = vec![format!("{t:e}")];
            for i in 0..d {
                for j in 0..d {
                    let z = s.get(i, j);
                    row.push(format!("{:e}", z.re));
                    row.push(format!("{:e}", z.im));
                }
            }
            row.push(format!("{:e}", diag.trace_dev));
            row.push(format!("{:e}", diag.herm_dev));
            row.push(format!("{:e}", diag.min_eig));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(KineticError::NonFinite("time grid".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(KineticError::GridNotAscending);
    }
    Ok(())
}

/// `Φ(t) = e^{𝒢t}` as a `d² × d²` matrix.
pub fn propagator(bundle: &GeneratorBundle, t: f64) -> Result<Array2<C64>> {
    if !bundle.total.is_finite() {
        return Err(KineticError::NonFinite("generator".into()));
    }
    linalg::expm(&bundle.total.matrix().mapv(|z| z * t).view())
}

/// `ρ(t) = e^{𝒢t} ρ₀` on an ascending grid.
pub fn propagate(bundle: &GeneratorBundle, rho0: &OperatorMatrix, times: &[f64]) -> Result<Trajectory> {
    rho0.require_hermitian("initial state")?;
    if (rho0.trace() - ONE).norm() > tolerances::TRACE {
        return Err(KineticError::InvalidParameter(format!("initial state has trace {}", rho0.trace())));
    }
    if !rho0.is_finite() {
        return Err(KineticError::NonFinite("initial state".into()));
    }
    check_grid(times)?;
    if rho0.dim() != bundle.dim() {
        return Err(KineticError::DimensionMismatch {
            context: "initial state vs generator".into(),
            expected: bundle.dim(),
            found: rho0.dim(),
        });
    }
    let v0 = rho0.vectorize();
    let mut states = Vec::with_capacity(times.len());
    let mut step_doubling = 0.0f64;
    for &t in times {
        let full = propagator(bundle, t)?;
        let half = propagator(bundle, 0.5 * t)?;
        let v = full.dot(&v0);
        let twice = half.dot(&half.dot(&v0));
        step_doubling = step_doubling.max(v.iter().zip(twice.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(KineticError::NonFinite(format!("state at t = {t}")));
        }
        states.push(OperatorMatrix::devectorize(&v)?);
    }
    let mut traj = Trajectory::from_states(times.to_vec(), states)?;
    traj.step_doubling = step_doubling;
    Ok(traj)
}

/// Independent initial states in parallel.
pub fn propagate_many(bundle: &GeneratorBundle, states: &[OperatorMatrix], times: &[f64]) -> Result<Vec<Trajectory>> {
    states.par_iter().map(|rho| propagate(bundle, rho, times)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SteadyState {
    pub state: OperatorMatrix,
    /// Number of singular values below `1e-9·σ_max`.
    pub null_dim: usize,
    pub unique: bool,
    /// `‖𝒢 ρ*‖_max`.
    pub residual: f64,
}

/// Normalized, Hermitized null vector of the total generator.
pub fn steady_state(bundle: &GeneratorBundle) -> Result<SteadyState> {
    let d = bundle.dim();
    let (s, v) = linalg::svd_right(&bundle.total.matrix().view())?;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let cutoff = tolerances::NULL_SPACE * smax.max(f64::MIN_POSITIVE);
    let null: Vec<usize> = (0..s.len()).filter(|&k| s[k] <= cutoff).collect();
    let null_dim = null.len();
    let picks = if null.is_empty() { vec![s.len() - 1] } else { null };

    let mut combined = ndarray::Array1::<C64>::zeros(d * d);
    for &k in &picks {
        let col = v.column(k).to_owned();
        let tr: C64 = (0..d).map(|i| col[i + i * d]).sum();
        combined.scaled_add(tr.conj(), &col);
    }
    let rho = OperatorMatrix::devectorize(&combined)?.hermitized();
    let tr = rho.trace();
    if tr.norm() < 1e-14 {
        return Err(KineticError::Convergence("null space carries no trace".into()));
    }
    let state = rho.scale(tr.inv());
    let residual = bundle.total.apply(&state).max_abs();
    Ok(SteadyState { state, null_dim, unique: null_dim == 1, residual })
}

/// Reduced state at `t₀` from the time-ordered expansion of
/// `ρ_S ⊗ ρ_R` to the given order:
///
/// `ρ(t₀) = 𝒰_S(t₀)[ρ - λ² ∫_0^{t₀}ds₁∫_0^{s₁}ds₂ Σ_{αβ}
///     (C_{αβ}(s₁-s₂)[T_α(s₁), T_β(s₂)ρ] - C_{αβ}(s₁-s₂)^*[T_α(s₁), ρT_β(s₂)])]`.
///
/// The first-order term vanishes (odd bath moment). A reasonable `t₀` is a
/// few correlation times, e.g. `5/min Re z_k`.
pub fn slipped_initial_state(
    rho: &OperatorMatrix,
    system: &System,
    cm: &CorrelationMatrix,
    lambda: f64,
    t0: f64,
    order: usize,
) -> Result<OperatorMatrix> {
    if order > 2 {
        return Err(KineticError::Unsupported(format!("slippage is implemented up to order 2, got {order}")));
    }
    if !(t0 >= 0.0) {
        return Err(KineticError::InvalidParameter(format!("t₀ = {t0} must be non-negative")));
    }
    rho.require_hermitian("state to slip")?;
    system.validate()?;
    let spec = system.spectral(None)?;
    let u = spec.evolution(t0);
    let mut inner = rho.clone();
    if order == 2 && lambda != 0.0 && t0 > 0.0 {
        let eigenops = system.eigenoperators(&spec)?;
        let mut delta = OperatorMatrix::zeros(rho.dim());
        for (alpha, sa) in eigenops.iter().enumerate() {
            for (beta, sb) in eigenops.iter().enumerate() {
                let terms = cm.entry(alpha, beta)?.terms();
                for (w1, ta) in &sa.entries {
                    for (w2, tb) in &sb.entries {
                        let (mut direct, mut conj) = (ZERO, ZERO);
                        for k in terms {
                            direct += time_ordered(k.a, k.z, *w1, *w2, t0);
                            conj += time_ordered(k.a.conj(), k.z.conj(), *w1, *w2, t0);
                        }
                        let tbr = tb.dot(rho);
                        let rtb = rho.dot(tb);
                        let c1 = ta.dot(&tbr).sub(&tbr.dot(ta));
                        let c2 = ta.dot(&rtb).sub(&rtb.dot(ta));
                        delta = delta.add(&c1.scale(direct)).sub(&c2.scale(conj));
                    }
                }
            }
        }
        inner = inner.sub(&delta.scale(C64::new(lambda * lambda, 0.0)));
    }
    Ok(u.dot(&inner).dot(&u.dagger()).hermitized())
}

/// `∫_0^{t}ds₁∫_0^{s₁}ds₂ a e^{-z(s₁-s₂)} e^{-iω₁s₁} e^{-iω₂s₂}`.
fn time_ordered(a: C64, z: C64, w1: f64, w2: f64, t: f64) -> C64 {
    let i = C64::new(0.0, 1.0);
    let p = z - i * w2;
    a / p * (phi1(-i * (w1 + w2), t) - phi1(-(z + i * w1), t))
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub min_eigenvalues: Vec<f64>,
    /// Sample indices with a minimum eigenvalue below `-1e-8`.
    pub flagged: Vec<usize>,
    pub worst: f64,
    /// Violations form one contiguous block that ends before the last sample.
    pub initial_window_only: bool,
    pub last_violation_time: Option<f64>,
}

pub fn positivity_monitor(traj: &Trajectory) -> PositivityReport {
    let mins: Vec<f64> = traj.diagnostics.iter().map(|d| d.min_eig).collect();
    let flagged: Vec<usize> = (0..mins.len()).filter(|&k| mins[k] < tolerances::POSITIVITY_FLAG).collect();
    let contiguous = flagged.windows(2).all(|w| w[1] == w[0] + 1);
    let initial_window_only = !flagged.is_empty() && contiguous && *flagged.last().unwrap() + 1 < mins.len();
    PositivityReport {
        worst: mins.iter().cloned().fold(f64::INFINITY, f64::min),
        last_violation_time: flagged.last().map(|&k| traj.times[k]),
        min_eigenvalues: mins,
        flagged,
        initial_window_only,
    }
}
