//! Experiment configuration files and their dry-run checks.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bath::{CorrelationMatrix, ExpSum, ExpTerm};
use crate::error::{KineticError, Result};
use crate::operator::OperatorMatrix;
use crate::oracles::{joint_dimension, JointOptions};
use crate::random::{random_correlation_matrix, random_system, rng};
use crate::system::System;
use crate::tolerances;

/// Largest system dimension accepted; superoperators are `d² × d²`.
pub const SYSTEM_DIMENSION_CAP: usize = 32;

/// Either `{"dim": d, "entries": [[re, im], ...]}` in row-major order or a
/// plain real matrix `[[...], ...]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Complex { dim: usize, entries: Vec<[f64; 2]> },
    Real(Vec<Vec<f64>>),
}

impl MatrixSpec {
    pub fn to_operator(&self) -> std::result::Result<OperatorMatrix, String> {
        let (d, data): (usize, Vec<C64>) = match self {
            MatrixSpec::Complex { dim, entries } => {
                if entries.len() != dim * dim {
                    return Err(format!("expected {} entries for dim {dim}, found {}", dim * dim, entries.len()));
                }
                (*dim, entries.iter().map(|p| C64::new(p[0], p[1])).collect())
            }
            MatrixSpec::Real(rows) => {
                let d = rows.len();
                if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
                    return Err(format!("row {i} has {} entries, expected {d}", r.len()));
                }
                (d, rows.iter().flatten().map(|&x| C64::new(x, 0.0)).collect())
            }
        };
        if d == 0 {
            return Err("matrix is empty".into());
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err("non-finite entry".into());
        }
        let a = Array2::from_shape_vec((d, d), data).map_err(|e| e.to_string())?;
        OperatorMatrix::new(a).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub hamiltonian: MatrixSpec,
    pub couplings: Vec<MatrixSpec>,
}

/// Same layout as the serialized [`CorrelationMatrix`], checked term by term.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    pub labels: Vec<String>,
    pub entries: BTreeMap<String, Vec<ExpTerm>>,
    #[serde(default)]
    pub beta: Option<f64>,
}

/// A random system and bath drawn from `--seed`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub dim: usize,
    pub couplings: usize,
    pub terms: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorPath {
    /// Closed forms: Redfield for order 2, the single-coupling formula for order 4.
    #[default]
    Fast,
    /// The recursive engine, any order.
    Engine,
    /// Secular GKLS form of the order-2 generator.
    Secular,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    Uniform { start: f64, stop: f64, steps: usize },
    List(Vec<f64>),
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            TimeGrid::List(v) => v.clone(),
            TimeGrid::Uniform { start, stop, steps } => {
                if *steps == 0 {
                    return vec![*start];
                }
                (0..=*steps).map(|k| start + (stop - start) * k as f64 / *steps as f64).collect()
            }
        }
    }
}

/// Discretized bath for the exact finite-bath reference: `B_α = w_α b + w̄_α b^dagger`
/// with `<b(t) b^dagger> ≈ target`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteBathConfig {
    pub target: Vec<ExpTerm>,
    pub weights: Vec<C64>,
    pub modes: usize,
    pub window: (f64, f64),
    pub t_max: f64,
    #[serde(default = "default_n_total")]
    pub n_total: usize,
    #[serde(default)]
    pub system_quanta: Option<Vec<usize>>,
    #[serde(default = "default_dimension_cap")]
    pub dimension_cap: usize,
}

fn default_n_total() -> usize {
    1
}

fn default_dimension_cap() -> usize {
    tolerances::FINITE_BATH_DIMENSION_CAP
}

impl FiniteBathConfig {
    pub fn joint_options(&self) -> JointOptions {
        JointOptions {
            n_total: self.n_total,
            system_quanta: self.system_quanta.clone(),
            dimension_cap: self.dimension_cap,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OracleModel {
    /// `T = σ_z`-type coupling commuting with `H_S`; the exact coherence is
    /// compared on its late-time slope.
    Dephasing {
        #[serde(default = "default_fit_window")]
        fit_window: (f64, f64),
    },
    /// Two-level emitter with `σ_x ⊗ X + σ_y ⊗ Y` coupling to a resonant
    /// Lorentzian bath `c(t) = (γ₀κ/2) e^{-(κ + iω₀)t}`.
    DampedQubit { gamma0: f64, kappa: f64 },
}

fn default_fit_window() -> (f64, f64) {
    (40.0, 60.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    Generator {},
    Propagate {
        initial_state: MatrixSpec,
        times: TimeGrid,
        /// Replace the initial state by its slipped version at this `t₀`.
        #[serde(default)]
        slip_t0: Option<f64>,
    },
    SteadyState {},
    Slippage {
        initial_state: MatrixSpec,
        t0: f64,
    },
    OracleCompare {
        model: OracleModel,
    },
    Qrt {
        initial_state: MatrixSpec,
        a1: MatrixSpec,
        a2: MatrixSpec,
        pairs: Vec<(f64, f64)>,
        finite_bath: FiniteBathConfig,
    },
    KineticCorrelator {
        initial_state: MatrixSpec,
        observable: MatrixSpec,
        label: String,
        times: Vec<f64>,
        taus: Vec<f64>,
        finite_bath: FiniteBathConfig,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Generator {} => "generator",
            Task::Propagate { .. } => "propagate",
            Task::SteadyState {} => "steady-state",
            Task::Slippage { .. } => "slippage",
            Task::OracleCompare { .. } => "oracle-compare",
            Task::Qrt { .. } => "qrt",
            Task::KineticCorrelator { .. } => "kinetic-correlator",
        }
    }
}

/// Tolerances a run may override; the rest are fixed in [`crate::tolerances`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default)]
    pub degeneracy: Option<f64>,
    #[serde(default)]
    pub grouping: Option<f64>,
    #[serde(default = "default_odd_order")]
    pub odd_order_zero: f64,
}

fn default_odd_order() -> f64 {
    1e-12
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            degeneracy: None,
            grouping: None,
            odd_order_zero: default_odd_order(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub bath: Option<BathSpec>,
    #[serde(default)]
    pub random: Option<RandomSpec>,
    pub lambdas: Vec<f64>,
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    #[serde(default)]
    pub generator: GeneratorPath,
    pub task: Task,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_orders() -> Vec<usize> {
    vec![2]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Dotted field path, `$` for the whole file.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.path, self.message)
    }
}

/// The model a configuration resolves to.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub system: System,
    pub bath: CorrelationMatrix,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, Diagnostic> {
        serde_json::from_str(text).map_err(|e| Diagnostic {
            severity: Severity::Error,
            path: "$".into(),
            message: e.to_string(),
        })
    }

    /// Builds system and bath, drawing random ones from `seed` when requested.
    pub fn resolve(&self, seed: u64) -> Result<Resolved> {
        if let Some(r) = &self.random {
            let mut g = rng(seed);
            let system = random_system(&mut g, r.dim, r.couplings);
            let bath = random_correlation_matrix(&mut g, r.couplings, r.terms);
            return Ok(Resolved { system, bath });
        }
        let spec = self
            .system
            .as_ref()
            .ok_or_else(|| KineticError::InvalidParameter("system is missing".into()))?;
        let h = spec.hamiltonian.to_operator().map_err(KineticError::InvalidParameter)?;
        let couplings = spec
            .couplings
            .iter()
            .map(|m| m.to_operator().map_err(KineticError::InvalidParameter))
            .collect::<Result<Vec<_>>>()?;
        let system = System::new(h, couplings)?;
        let bath = build_bath(self.bath.as_ref().ok_or_else(|| KineticError::InvalidParameter("bath is missing".into()))?)?;
        Ok(Resolved { system, bath })
    }
}

pub fn build_bath(spec: &BathSpec) -> Result<CorrelationMatrix> {
    let mut cm = CorrelationMatrix::new(spec.labels.clone(), spec.beta);
    for (key, terms) in &spec.entries {
        let (a, b) = key
            .split_once(',')
            .ok_or_else(|| KineticError::InvalidParameter(format!("entry key {key:?} is not \"alpha,beta\"")))?;
        let ia = cm
            .index_of(a.trim())
            .ok_or_else(|| KineticError::InvalidParameter(format!("unknown label {a:?}")))?;
        let ib = cm
            .index_of(b.trim())
            .ok_or_else(|| KineticError::InvalidParameter(format!("unknown label {b:?}")))?;
        cm.insert(ia, ib, ExpSum::new(terms.clone())?);
    }
    Ok(cm)
}

struct Checker {
    out: Vec<Diagnostic>,
}

impl Checker {
    fn error(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.out.push(Diagnostic {
            severity: Severity::Error,
            path: path.into(),
            message: message.into(),
        });
    }

    fn warning(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.out.push(Diagnostic {
            severity: Severity::Warning,
            path: path.into(),
            message: message.into(),
        });
    }

    fn matrix(&mut self, path: &str, m: &MatrixSpec, dim: Option<usize>) -> Option<OperatorMatrix> {
        match m.to_operator() {
            Err(e) => {
                self.error(path, e);
                None
            }
            Ok(op) => {
                if let Some(d) = dim {
                    if op.dim() != d {
                        self.error(path, format!("dimension {} does not match the system dimension {d}", op.dim()));
                        return None;
                    }
                }
                Some(op)
            }
        }
    }

    fn density(&mut self, path: &str, m: &MatrixSpec, dim: Option<usize>) {
        if let Some(rho) = self.matrix(path, m, dim) {
            if let Err(e) = rho.require_density_matrix(path) {
                self.error(path, e.to_string());
            }
        }
    }

    fn terms(&mut self, path: &str, terms: &[ExpTerm]) {
        if terms.is_empty() {
            self.warning(path, "empty exponential sum (identically zero correlation)");
        }
        for (k, t) in terms.iter().enumerate() {
            if !(t.a.re.is_finite() && t.a.im.is_finite() && t.z.re.is_finite() && t.z.im.is_finite()) {
                self.error(format!("{path}[{k}]"), "non-finite term");
            } else if t.z.re <= 0.0 {
                self.error(
                    format!("{path}[{k}].z"),
                    format!("Re z = {} violates the decay requirement: correlations must decay, Re z > 0", t.z.re),
                );
            }
        }
    }

    fn grid(&mut self, path: &str, times: &[f64]) {
        if times.is_empty() {
            self.error(path, "time grid is empty");
        } else if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            self.error(path, "times must be finite and non-negative");
        } else if times.windows(2).any(|w| w[1] <= w[0]) {
            self.error(path, "time grid is not ascending");
        }
    }
}

/// Dry-run checks without heavy computation. An empty list means the
/// configuration is valid.
pub fn validate(cfg: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut c = Checker { out: Vec::new() };
    let mut dim = None;
    let mut n_couplings = None;
    let mut labels: Vec<String> = Vec::new();

    match (&cfg.random, &cfg.system, &cfg.bath) {
        (Some(r), None, None) => {
            if r.dim < 2 || r.dim > SYSTEM_DIMENSION_CAP {
                c.error("random.dim", format!("must lie in 2..={SYSTEM_DIMENSION_CAP}"));
            }
            if r.couplings == 0 {
                c.error("random.couplings", "at least one coupling is required");
            }
            if r.terms == 0 {
                c.error("random.terms", "at least one exponential term is required");
            }
            dim = Some(r.dim);
            n_couplings = Some(r.couplings);
            labels = (0..r.couplings).map(|i| format!("b{i}")).collect();
        }
        (Some(_), _, _) => c.error("random", "give either random or system and bath, not both"),
        (None, system, bath) => {
            match system {
                None => c.error("system", "missing"),
                Some(s) => {
                    if let Some(h) = c.matrix("system.hamiltonian", &s.hamiltonian, None) {
                        if let Err(KineticError::NotHermitian { deviation, .. }) = h.require_hermitian("H_S") {
                            c.error(
                                "system.hamiltonian",
                                format!("hermiticity violation at H_S (max |A - A^dagger| = {deviation:e})"),
                            );
                        }
                        if h.dim() > SYSTEM_DIMENSION_CAP {
                            c.error("system.hamiltonian", format!("dimension {} exceeds the cap {SYSTEM_DIMENSION_CAP}", h.dim()));
                        }
                        dim = Some(h.dim());
                    }
                    if s.couplings.is_empty() {
                        c.error("system.couplings", "at least one coupling operator is required");
                    }
                    for (i, t) in s.couplings.iter().enumerate() {
                        c.matrix(&format!("system.couplings[{i}]"), t, dim);
                    }
                    n_couplings = Some(s.couplings.len());
                }
            }
            match bath {
                None => c.error("bath", "missing"),
                Some(b) => {
                    labels = b.labels.clone();
                    check_bath(&mut c, b, n_couplings);
                }
            }
        }
    }

    if cfg.lambdas.is_empty() {
        c.error("lambdas", "must not be empty");
    }
    for (i, l) in cfg.lambdas.iter().enumerate() {
        if !(l.is_finite() && *l > 0.0) {
            c.error(format!("lambdas[{i}]"), format!("λ = {l} must be positive"));
        }
    }
    check_orders(&mut c, cfg, n_couplings);
    check_task(&mut c, cfg, dim, n_couplings, &labels);
    c.out
}

fn check_bath(c: &mut Checker, b: &BathSpec, n_couplings: Option<usize>) {
    if let Some(n) = n_couplings {
        if b.labels.len() != n {
            c.error("bath.labels", format!("{} labels for {n} coupling operators", b.labels.len()));
        }
    }
    let mut seen = std::collections::HashSet::new();
    for l in &b.labels {
        if l.contains(',') {
            c.error("bath.labels", format!("label {l:?} contains a comma"));
        }
        if !seen.insert(l) {
            c.error("bath.labels", format!("duplicate label {l:?}"));
        }
    }
    if let Some(beta) = b.beta {
        if !(beta > 0.0) {
            c.error("bath.beta", "inverse temperature must be positive");
        }
    }
    for (key, terms) in &b.entries {
        let path = format!("bath.entries.{key}");
        match key.split_once(',') {
            Some((x, y)) if b.labels.iter().any(|l| l == x.trim()) && b.labels.iter().any(|l| l == y.trim()) => {}
            _ => c.error(&path, "key must be \"alpha,beta\" with known labels"),
        }
        c.terms(&path, terms);
    }
    for x in &b.labels {
        for y in &b.labels {
            if !b.entries.contains_key(&format!("{x},{y}")) {
                c.error("bath.entries", format!("missing correlation entry ({x}, {y})"));
            }
        }
    }
    if c.out.iter().all(|d| d.severity == Severity::Warning) {
        if let Ok(cm) = build_bath(b) {
            if let Err(e) = cm.validate() {
                c.error("bath.entries", format!("correlation symmetry: {e}"));
            }
        }
    }
}

fn check_orders(c: &mut Checker, cfg: &ExperimentConfig, n_couplings: Option<usize>) {
    if cfg.orders.is_empty() {
        c.error("orders", "must not be empty");
    }
    let mut sorted = cfg.orders.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        c.error("orders", "duplicate order");
    }
    match cfg.generator {
        GeneratorPath::Fast => {
            if let Some(&r) = cfg.orders.iter().find(|&&r| r > 4) {
                c.error("orders", format!("order {r} needs the engine path (generator = \"engine\")"));
            }
            if cfg.orders.contains(&4) && n_couplings.is_some_and(|n| n != 1) {
                c.error("orders", "the fast order-4 formula handles one coupling operator; use the engine path");
            }
        }
        GeneratorPath::Secular => {
            if cfg.orders.iter().any(|&r| r != 2) {
                c.error("orders", "the secular path provides order 2 only");
            }
        }
        GeneratorPath::Engine => {
            if let Some(&r) = cfg.orders.iter().find(|&&r| r > 4) {
                c.warning("orders", format!("order {r} is experimental"));
            }
        }
    }
}

fn check_task(c: &mut Checker, cfg: &ExperimentConfig, dim: Option<usize>, n_couplings: Option<usize>, labels: &[String]) {
    match &cfg.task {
        Task::Generator {} | Task::SteadyState {} => {}
        Task::Propagate { initial_state, times, slip_t0 } => {
            c.density("task.initial_state", initial_state, dim);
            c.grid("task.times", &times.points());
            if let Some(t0) = slip_t0 {
                if !(t0.is_finite() && *t0 >= 0.0) {
                    c.error("task.slip_t0", "t₀ must be finite and non-negative");
                }
            }
        }
        Task::Slippage { initial_state, t0 } => {
            c.density("task.initial_state", initial_state, dim);
            if !(t0.is_finite() && *t0 >= 0.0) {
                c.error("task.t0", "t₀ must be finite and non-negative");
            }
        }
        Task::OracleCompare { model } => {
            if !cfg.orders.contains(&2) {
                c.error("orders", "oracle comparison needs order 2");
            }
            if dim.is_some_and(|d| d != 2) {
                c.error("task.model", "the oracle models are qubits");
            }
            match model {
                OracleModel::Dephasing { fit_window } => {
                    if n_couplings.is_some_and(|n| n != 1) {
                        c.error("task.model", "dephasing needs exactly one coupling operator");
                    }
                    if !(fit_window.0 >= 0.0 && fit_window.1 > fit_window.0) {
                        c.error("task.model.fit_window", "needs 0 <= start < stop");
                    }
                    if let (Some(s), true) = (&cfg.system, dim == Some(2)) {
                        if let (Ok(h), Some(Ok(t))) = (s.hamiltonian.to_operator(), s.couplings.first().map(|t| t.to_operator())) {
                            if h.dot(&t).max_abs_diff(&t.dot(&h)) > 1e-12 {
                                c.error("system.couplings[0]", "dephasing requires a coupling that commutes with H_S");
                            }
                        }
                    }
                }
                OracleModel::DampedQubit { gamma0, kappa } => {
                    if !(*gamma0 > 0.0 && *kappa > 0.0) {
                        c.error("task.model", "γ₀ and κ must be positive");
                    }
                    if n_couplings.is_some_and(|n| n != 2) {
                        c.error("task.model", "the damped qubit has couplings σ_x ⊗ X and σ_y ⊗ Y");
                    }
                }
            }
        }
        Task::Qrt { initial_state, a1, a2, pairs, finite_bath } => {
            c.density("task.initial_state", initial_state, dim);
            c.matrix("task.a1", a1, dim);
            c.matrix("task.a2", a2, dim);
            if pairs.is_empty() {
                c.error("task.pairs", "no (t₁, τ) pairs");
            }
            if pairs.iter().any(|(t, s)| !(t.is_finite() && s.is_finite() && *t >= 0.0 && *s >= 0.0)) {
                c.error("task.pairs", "times must be finite and non-negative");
            }
            check_finite_bath(c, finite_bath, dim, n_couplings);
        }
        Task::KineticCorrelator { initial_state, observable, label, times, taus, finite_bath } => {
            c.density("task.initial_state", initial_state, dim);
            c.matrix("task.observable", observable, dim);
            if !labels.iter().any(|l| l == label) {
                c.error("task.label", format!("unknown bath label {label:?}"));
            }
            c.grid("task.times", times);
            if taus.is_empty() || taus.iter().any(|t| !t.is_finite()) {
                c.error("task.taus", "needs at least one finite τ");
            }
            check_finite_bath(c, finite_bath, dim, n_couplings);
        }
    }
}

fn check_finite_bath(c: &mut Checker, fb: &FiniteBathConfig, dim: Option<usize>, n_couplings: Option<usize>) {
    c.terms("task.finite_bath.target", &fb.target);
    if fb.modes == 0 {
        c.error("task.finite_bath.modes", "at least one mode is required");
    }
    if !(fb.window.1 > fb.window.0) {
        c.error("task.finite_bath.window", "needs low < high");
    }
    if !(fb.t_max > 0.0) {
        c.error("task.finite_bath.t_max", "must be positive");
    }
    if let Some(n) = n_couplings {
        if fb.weights.len() != n {
            c.error("task.finite_bath.weights", format!("{} weights for {n} coupling operators", fb.weights.len()));
        }
    }
    if let Some(d) = dim {
        if let Some(q) = &fb.system_quanta {
            if q.len() != d {
                c.error("task.finite_bath.system_quanta", format!("{} entries for dimension {d}", q.len()));
                return;
            }
        }
        let size = joint_dimension(d, fb.modes, &fb.joint_options());
        if size > fb.dimension_cap as f64 {
            c.error(
                "task.finite_bath",
                format!("joint dimension {size} exceeds the cap {}", fb.dimension_cap),
            );
        }
    }
}

/// Density matrix from a configuration entry.
pub fn state(m: &MatrixSpec) -> Result<OperatorMatrix> {
    let rho = m.to_operator().map_err(KineticError::InvalidParameter)?;
    rho.require_density_matrix("initial state")?;
    Ok(rho)
}
