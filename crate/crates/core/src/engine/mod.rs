//! Arbitrary-order generators from the recovery-map recursion.
//!
//! `ℛ_r` is kept symbolically as a [`TermSet`]; `𝒢_r = -i Tr_R[𝓛_I ℛ_{r-1}]`
//! is bath-averaged with Wick pairings, grouped by system-operator string,
//! and integrated over the positive orthant in closed form. Grouping happens
//! before integration: single pairings can be non-integrable even when the
//! group sum is finite.

pub mod expoly;
pub mod terms;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use rayon::prelude::*;

use crate::bath::CorrelationMatrix;
use crate::error::{KineticError, Result};
use crate::linalg::{I, ZERO};
use crate::operator::{hamiltonian_superop, sandwich_superop, SpectralData, Superoperator};
use crate::system::System;
use crate::tolerances;

pub use expoly::{integrate_laurent, integrate_orthant, ExpPoly, Laurent, LinearForm, Monomial};
pub use terms::{
    bath_average, generator_terms, recursion_step, wick_integrand, BathOp, Couplings, GenTerm, GeneratorTerms,
    KineticTerm, SysOp, TermSet,
};

type GroupKey = (Vec<(usize, usize)>, Vec<(usize, usize)>);

fn group_label(key: &GroupKey) -> String {
    format!("L{:?} R{:?}", key.0, key.1)
}

/// Sums bath-averaged terms into a superoperator. Terms with the same
/// system-operator string are combined into one integrand first.
pub fn assemble_terms(
    terms: &[GenTerm],
    ctx: &Couplings,
    zero_tol: f64,
    order: Option<&[usize]>,
) -> Result<Superoperator> {
    let d = ctx.dim;
    let num_vars = terms.iter().map(|t| t.num_vars).max().unwrap_or(0);
    let mut groups: BTreeMap<GroupKey, ExpPoly> = BTreeMap::new();
    for t in terms {
        let key: GroupKey = (
            t.left.iter().map(|o| (o.alpha, o.omega)).collect(),
            t.right.iter().map(|o| (o.alpha, o.omega)).collect(),
        );
        let mut f = t.weight.embedded(0, num_vars);
        f.scale(t.scalar);
        // T_α(ω) at t = -Σ c_i s_i carries e^{-iωt} = e^{-Σ (-iω c_i) s_i}
        let mut delta = vec![ZERO; num_vars];
        for op in t.left.iter().chain(&t.right) {
            let w = ctx.frequency(op);
            for (i, &c) in op.time.coeffs.iter().enumerate() {
                if c != 0 {
                    delta[i] += -I * w * c as f64;
                }
            }
        }
        f.shift_exponent(&delta);
        groups.entry(key).or_insert_with(|| ExpPoly::zero(num_vars)).add_assign(&f);
    }

    let default_order: Vec<usize> = (0..num_vars).collect();
    let order = order.unwrap_or(&default_order);
    if order.len() != num_vars {
        return Err(KineticError::InvalidParameter(format!(
            "elimination order has {} entries for {} variables",
            order.len(),
            num_vars
        )));
    }
    let groups: Vec<(GroupKey, ExpPoly)> = groups.into_iter().collect();
    let parts: Vec<Result<Option<Superoperator>>> = groups
        .into_par_iter()
        .map(|(key, mut f)| {
            let to_ops = |k: &[(usize, usize)]| -> Vec<SysOp> {
                k.iter()
                    .map(|&(alpha, omega)| SysOp { alpha, omega, time: LinearForm::zero(0) })
                    .collect()
            };
            let pl = ctx.product(&to_ops(&key.0));
            let pr = ctx.product(&to_ops(&key.1));
            if pl.max_abs() == 0.0 || pr.max_abs() == 0.0 {
                return Ok(None);
            }
            f.canonicalize();
            if f.is_empty() {
                return Ok(None);
            }
            let value = integrate_orthant(&f, zero_tol, Some(order), &group_label(&key))?;
            Ok(Some(sandwich_superop(&pl, &pr)?.scale(value)))
        })
        .collect();
    let mut total = Superoperator::zeros(d);
    for p in parts {
        if let Some(s) = p? {
            total = total.add(&s);
        }
    }
    Ok(total)
}

#[derive(Default)]
struct State {
    recovery: Vec<Arc<TermSet>>,
    generators: Vec<Arc<GeneratorTerms>>,
}

/// Recursion state for one (system, bath) pair, memoized by order.
pub struct Engine {
    system: System,
    cm: CorrelationMatrix,
    spectral: SpectralData,
    ctx: Couplings,
    zero_tol: f64,
    state: RwLock<State>,
    assembled: RwLock<BTreeMap<usize, Superoperator>>,
}

impl Engine {
    pub fn new(system: System, cm: CorrelationMatrix, degeneracy_tol: Option<f64>) -> Result<Self> {
        Self::with_pruning(system, cm, degeneracy_tol, true)
    }

    /// `prune` drops terms whose system-operator product vanishes; turning it
    /// off keeps the raw term counts of the recursion.
    pub fn with_pruning(system: System, cm: CorrelationMatrix, degeneracy_tol: Option<f64>, prune: bool) -> Result<Self> {
        system.validate()?;
        cm.validate()?;
        if cm.len() != system.couplings.len() {
            return Err(KineticError::DimensionMismatch {
                context: "correlation labels vs coupling operators".into(),
                expected: system.couplings.len(),
                found: cm.len(),
            });
        }
        let spectral = system.spectral(degeneracy_tol)?;
        let eigenops = system.eigenoperators(&spectral)?;
        let bohr_scale = eigenops
            .iter()
            .flat_map(|s| s.frequencies())
            .fold(0.0f64, |m, w| m.max(w.abs()));
        let scale = cm.max_rate().max(bohr_scale);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let ctx = Couplings { dim: system.dim(), eigenops, prune };
        Ok(Engine {
            system,
            cm,
            spectral,
            ctx,
            zero_tol: tolerances::ZERO_EXPONENT_RELATIVE * scale,
            state: RwLock::new(State::default()),
            assembled: RwLock::new(BTreeMap::new()),
        })
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn correlations(&self) -> &CorrelationMatrix {
        &self.cm
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    pub fn couplings(&self) -> &Couplings {
        &self.ctx
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    fn ensure(&self, r: usize) -> Result<()> {
        if self.state.read().expect("lock").recovery.len() > r {
            return Ok(());
        }
        let mut st = self.state.write().expect("lock");
        if st.generators.is_empty() {
            st.generators.push(Arc::new(GeneratorTerms { order: 0, terms: Vec::new() }));
        }
        while st.recovery.len() <= r {
            let k = st.recovery.len();
            if k > 0 && st.generators.len() <= k {
                let g = generator_terms(k, &st.recovery[k - 1], &self.cm, &self.ctx)?;
                st.generators.push(Arc::new(g));
            }
            let prior: Vec<&TermSet> = st.recovery.iter().map(|a| a.as_ref()).collect();
            let gens: Vec<&GeneratorTerms> = st.generators.iter().map(|a| a.as_ref()).collect();
            let next = recursion_step(k, &prior, &gens, &self.ctx)?;
            st.recovery.push(Arc::new(next));
        }
        Ok(())
    }

    /// Symbolic `ℛ_r`.
    pub fn recovery_terms(&self, r: usize) -> Result<Arc<TermSet>> {
        self.ensure(r)?;
        Ok(self.state.read().expect("lock").recovery[r].clone())
    }

    /// Symbolic `𝒢_r` for `r >= 1`.
    pub fn generator_terms(&self, r: usize) -> Result<Arc<GeneratorTerms>> {
        if r == 0 {
            return Err(KineticError::InvalidParameter("𝒢₀ = -i𝓛_S has no symbolic terms".into()));
        }
        self.ensure(r - 1)?;
        {
            let st = self.state.read().expect("lock");
            if st.generators.len() > r {
                return Ok(st.generators[r].clone());
            }
        }
        let mut st = self.state.write().expect("lock");
        while st.generators.len() <= r {
            let k = st.generators.len();
            let g = generator_terms(k, &st.recovery[k - 1], &self.cm, &self.ctx)?;
            st.generators.push(Arc::new(g));
        }
        Ok(st.generators[r].clone())
    }

    /// `𝒢_r` as a `d² × d²` matrix; `r = 0` gives `-i𝓛_S`.
    pub fn generator(&self, r: usize) -> Result<Superoperator> {
        if let Some(s) = self.assembled.read().expect("lock").get(&r) {
            return Ok(s.clone());
        }
        let s = self.generator_with_order(r, None)?;
        self.assembled.write().expect("lock").insert(r, s.clone());
        Ok(s)
    }

    /// Like [`Engine::generator`] but with an explicit variable elimination
    /// order and no memoization.
    pub fn generator_with_order(&self, r: usize, order: Option<&[usize]>) -> Result<Superoperator> {
        if r == 0 {
            return Ok(hamiltonian_superop(&self.system.hamiltonian));
        }
        let g = self.generator_terms(r)?;
        assemble_terms(&g.terms, &self.ctx, self.zero_tol, order)
    }

    /// Max-abs of `Tr_R ℛ_r` as a superoperator; zero for `r >= 1`.
    pub fn reduced_trace_residual(&self, r: usize) -> Result<f64> {
        let ts = self.recovery_terms(r)?;
        reduced_trace_check(&ts, &self.cm, &self.ctx, self.zero_tol)
    }
}

/// Max-abs of the bath-averaged term set (no extra insertion).
pub fn reduced_trace_check(ts: &TermSet, cm: &CorrelationMatrix, ctx: &Couplings, zero_tol: f64) -> Result<f64> {
    let terms = bath_average(ts, cm, ctx, false)?;
    Ok(assemble_terms(&terms, ctx, zero_tol, None)?.max_abs())
}

type CacheKey = (String, String, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<Engine>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<Engine>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared engine for a (system, bath, tolerance) triple.
pub fn engine_for(system: &System, cm: &CorrelationMatrix, degeneracy_tol: Option<f64>) -> Result<Arc<Engine>> {
    let key = (
        system.fingerprint(),
        cm.fingerprint(),
        degeneracy_tol.map(f64::to_bits).unwrap_or(u64::MAX),
    );
    if let Some(e) = cache().lock().expect("lock").get(&key) {
        return Ok(e.clone());
    }
    let engine = Arc::new(Engine::new(system.clone(), cm.clone(), degeneracy_tol)?);
    Ok(cache().lock().expect("lock").entry(key).or_insert(engine).clone())
}

/// `𝒢_r` through the symbolic recursion, memoized across calls.
pub fn assemble_generator(
    r: usize,
    system: &System,
    cm: &CorrelationMatrix,
    degeneracy_tol: Option<f64>,
) -> Result<Superoperator> {
    engine_for(system, cm, degeneracy_tol)?.generator(r)
}
