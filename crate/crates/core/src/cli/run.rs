//! Executes a validated configuration and writes its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::config::{state, ExperimentConfig, FiniteBathConfig, GeneratorPath, OracleModel, Resolved, Task};
use crate::bath::{CorrelationMatrix, ExpSum};
use crate::dynamics::{positivity_monitor, propagate, slipped_initial_state, steady_state};
use crate::engine::engine_for;
use crate::error::{KineticError, Result};
use crate::generators::{fourth_order_fast, redfield_superop, secular_gkls, total_generator, GKLSData, GeneratorBundle};
use crate::linalg::{self, ZERO};
use crate::operator::{OperatorMatrix, Superoperator};
use crate::oracles::{
    damped_qubit_population_rate, dephasing_asymptotic_rate, dephasing_decay, discretize_bath, finite_bath_evolve,
    kinetic_correlator, qrt_compare, EvolveOptions, FiniteBathSpec, JointModel, TwoTimeRequest,
};
use crate::system::System;
use crate::tolerances;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Worker threads for the λ sweep; `None` uses every core.
    pub jobs: Option<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub name: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RunReport {
    pub files: Vec<Artifact>,
    /// Numerical warnings (tolerance breaches, truncation leakage).
    pub flags: Vec<String>,
}

struct Writer {
    dir: PathBuf,
    report: RunReport,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Writer {
    fn bytes(&mut self, name: &str, data: Vec<u8>) -> Result<()> {
        fs::write(self.dir.join(name), &data)?;
        self.report.files.push(Artifact {
            name: name.to_string(),
            sha256: sha256_hex(&data),
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut data = serde_json::to_vec_pretty(value)?;
        data.push(b'\n');
        self.bytes(name, data)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.iter().map(|x| format!("{x:e}")))?;
        }
        let data = w.into_inner().map_err(|e| KineticError::Io(e.into_error()))?;
        self.bytes(name, data)
    }
}

/// Generator parts shared by every λ.
struct Parts {
    hamiltonian: OperatorMatrix,
    even: Vec<(usize, Superoperator)>,
    /// Requested odd orders with their max-abs entry.
    odd: Vec<(usize, f64)>,
    gkls: Option<GKLSData>,
}

impl Parts {
    fn build(cfg: &ExperimentConfig, model: &Resolved) -> Result<Self> {
        let (sys, cm) = (&model.system, &model.bath);
        let tol = &cfg.tolerances;
        let mut even = Vec::new();
        let mut odd = Vec::new();
        let mut gkls = None;
        let mut orders = cfg.orders.clone();
        orders.sort_unstable();
        match cfg.generator {
            GeneratorPath::Fast => {
                for &r in &orders {
                    match r {
                        0 => {}
                        1 | 3 => odd.push((r, 0.0)),
                        2 => even.push((2, redfield_superop(sys, cm, tol.degeneracy)?)),
                        4 => even.push((4, fourth_order_fast(sys, cm)?)),
                        _ => return Err(KineticError::Unsupported(format!("fast path has no order {r}"))),
                    }
                }
            }
            GeneratorPath::Engine => {
                let engine = engine_for(sys, cm, tol.degeneracy)?;
                for &r in &orders {
                    if r == 0 {
                        continue;
                    }
                    let g = engine.generator(r)?;
                    if r % 2 == 1 {
                        odd.push((r, g.max_abs()));
                    } else {
                        even.push((r, g));
                    }
                }
            }
            GeneratorPath::Secular => {
                let g = secular_gkls(sys, cm, tol.grouping)?;
                even.push((2, g.superoperator()));
                gkls = Some(g);
            }
        }
        Ok(Parts {
            hamiltonian: sys.hamiltonian.clone(),
            even,
            odd,
            gkls,
        })
    }

    /// Bundle with every part up to `max_order`.
    fn bundle(&self, lambda: f64, max_order: usize) -> Result<GeneratorBundle> {
        let parts = self.even.iter().filter(|(r, _)| *r <= max_order).cloned().collect();
        total_generator(&self.hamiltonian, parts, lambda)
    }

    fn full(&self, lambda: f64) -> Result<GeneratorBundle> {
        self.bundle(lambda, usize::MAX)
    }
}

/// Runs the configured task, writing every artifact and finally
/// `manifest.json` into `opts.out`.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let model = cfg.resolve(opts.seed)?;
    fs::create_dir_all(&opts.out)?;
    let mut w = Writer {
        dir: opts.out.clone(),
        report: RunReport::default(),
    };
    let parts = Parts::build(cfg, &model)?;
    for &(r, m) in &parts.odd {
        if m > cfg.tolerances.odd_order_zero {
            return Err(KineticError::Divergent {
                group: format!("odd order {r}"),
                residue: m,
            });
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| KineticError::InvalidParameter(e.to_string()))?;
    pool.install(|| dispatch(cfg, &model, &parts, &mut w))?;
    write_manifest(cfg, &model, opts, &mut w)?;
    Ok(w.report)
}

fn sweep<T: Send>(lambdas: &[f64], f: impl Fn(f64) -> Result<T> + Sync) -> Result<Vec<T>> {
    lambdas.par_iter().map(|&l| f(l)).collect()
}

fn dispatch(cfg: &ExperimentConfig, model: &Resolved, parts: &Parts, w: &mut Writer) -> Result<()> {
    let (sys, cm) = (&model.system, &model.bath);
    match &cfg.task {
        Task::Generator {} => {
            for (r, g) in &parts.even {
                w.json(&format!("g{r}.json"), &json!({ "order": r, "dim": sys.dim(), "superoperator": g }))?;
            }
            if let Some(g) = &parts.gkls {
                w.json("gkls.json", g)?;
            }
            let rows = sweep(&cfg.lambdas, |l| {
                let b = parts.full(l)?;
                Ok(json!({ "lambda": l, "spectral_abscissa": b.spectral_abscissa()? }))
            })?;
            let omitted: Vec<_> = parts.odd.iter().map(|(r, m)| json!({ "order": r, "max_abs": m })).collect();
            w.json("summary.json", &json!({ "lambdas": rows, "omitted_odd_orders": omitted }))?;
        }
        Task::Propagate { initial_state, times, slip_t0 } => {
            let rho0 = state(initial_state)?;
            let grid = times.points();
            let runs = sweep(&cfg.lambdas, |l| {
                let start = match slip_t0 {
                    Some(t0) => slipped_initial_state(&rho0, sys, cm, l, *t0, 2)?,
                    None => rho0.clone(),
                };
                let traj = propagate(&parts.full(l)?, &start, &grid)?;
                let pos = positivity_monitor(&traj);
                Ok((l, traj, pos))
            })?;
            let mut rows = Vec::new();
            for (k, (l, traj, pos)) in runs.iter().enumerate() {
                let name = format!("trajectory_{k}.csv");
                let mut buf = Vec::new();
                traj.write_csv(&mut buf)?;
                w.bytes(&name, buf)?;
                if traj.max_trace_deviation() > tolerances::TRAJECTORY {
                    w.report.flags.push(format!("λ = {l}: trace drift {:e}", traj.max_trace_deviation()));
                }
                if traj.step_doubling > tolerances::STEP_DOUBLING {
                    w.report.flags.push(format!("λ = {l}: step-doubling mismatch {:e}", traj.step_doubling));
                }
                rows.push(json!({
                    "lambda": l,
                    "file": name,
                    "max_trace_deviation": traj.max_trace_deviation(),
                    "max_hermiticity_deviation": traj.max_hermiticity_deviation(),
                    "step_doubling": traj.step_doubling,
                    "min_eigenvalue": pos.worst,
                    "positivity_flagged": pos.flagged.len(),
                    "positivity_initial_window_only": pos.initial_window_only,
                    "last_violation_time": pos.last_violation_time,
                }));
            }
            w.json("summary.json", &json!({ "slip_t0": slip_t0, "runs": rows }))?;
        }
        Task::SteadyState {} => {
            let rows = sweep(&cfg.lambdas, |l| {
                let ss = steady_state(&parts.full(l)?)?;
                Ok(json!({ "lambda": l, "steady_state": ss }))
            })?;
            w.json("steady_state.json", &rows)?;
        }
        Task::Slippage { initial_state, t0 } => {
            let rho0 = state(initial_state)?;
            let rows = sweep(&cfg.lambdas, |l| {
                let s = slipped_initial_state(&rho0, sys, cm, l, *t0, 2)?;
                Ok(json!({ "lambda": l, "t0": t0, "state": s }))
            })?;
            w.json("slipped.json", &rows)?;
        }
        Task::OracleCompare { model: oracle } => oracle_compare(cfg, sys, cm, parts, oracle, w)?,
        Task::Qrt { initial_state, a1, a2, pairs, finite_bath } => {
            let rho0 = state(initial_state)?;
            let a1 = a1.to_operator().map_err(KineticError::InvalidParameter)?;
            let a2 = a2.to_operator().map_err(KineticError::InvalidParameter)?;
            let fb = finite_bath_spec(finite_bath)?;
            let runs = sweep(&cfg.lambdas, |l| {
                let opts = EvolveOptions {
                    joint: finite_bath.joint_options(),
                    two_time: vec![TwoTimeRequest { a1: a1.clone(), a2: a2.clone(), pairs: pairs.clone() }],
                    mean_force_beta: None,
                };
                let exact = finite_bath_evolve(sys, &finite_bath.weights, &fb, l, &rho0, &[0.0], &opts)?;
                let report = qrt_compare(&parts.full(l)?, &rho0, &a1, &a2, pairs, &exact.correlators[0])?;
                Ok((l, exact.leakage, exact.leakage_flag, report))
            })?;
            let mut rows = Vec::new();
            let mut summary = Vec::new();
            for (l, leakage, flag, report) in &runs {
                if *flag {
                    w.report.flags.push(format!("λ = {l}: finite-bath leakage {leakage:e}"));
                }
                for (k, &(t1, tau)) in pairs.iter().enumerate() {
                    let (p, e) = (report.predicted[k], report.exact[k]);
                    rows.push(vec![*l, t1, tau, p.re, p.im, e.re, e.im]);
                }
                summary.push(json!({
                    "lambda": l,
                    "max_abs": report.max_abs,
                    "max_rel": report.max_rel,
                    "leakage": leakage,
                }));
            }
            w.csv("qrt.csv", &["lambda", "t1", "tau", "predicted_re", "predicted_im", "exact_re", "exact_im"], &rows)?;
            w.json(
                "summary.json",
                &json!({ "reconstruction_error": fb.reconstruction_error, "dimension_modes": fb.modes.len(), "runs": summary }),
            )?;
        }
        Task::KineticCorrelator { initial_state, observable, label, times, taus, finite_bath } => {
            let rho0 = state(initial_state)?;
            let t_op = observable.to_operator().map_err(KineticError::InvalidParameter)?;
            let beta = cm
                .index_of(label)
                .ok_or_else(|| KineticError::InvalidParameter(format!("unknown label {label:?}")))?;
            let fb = finite_bath_spec(finite_bath)?;
            let runs = sweep(&cfg.lambdas, |l| {
                kinetic_rows(sys, cm, &fb, finite_bath, l, &rho0, &t_op, beta, times, taus)
            })?;
            let rows: Vec<Vec<f64>> = runs.into_iter().flatten().collect();
            w.csv(
                "kinetic.csv",
                &["lambda", "t", "tau", "predicted_re", "predicted_im", "measured_re", "measured_im", "abs_diff", "band"],
                &rows,
            )?;
        }
    }
    Ok(())
}

fn finite_bath_spec(c: &FiniteBathConfig) -> Result<FiniteBathSpec> {
    discretize_bath(&ExpSum::new(c.target.clone())?, c.modes, c.window, c.t_max)
}

/// Eigen-decomposition of `ρ` into weighted pure branches.
fn branches(rho: &OperatorMatrix) -> Result<Vec<(f64, Vec<C64>)>> {
    let (p, v) = linalg::eigh(&rho.view())?;
    Ok((0..p.len()).filter(|&k| p[k] > 1e-15).map(|k| (p[k], v.column(k).to_vec())).collect())
}

/// Band for the order-1 kinetic correlator: `λ² |C_ββ(0)|` for the neglected
/// orders plus the relative reconstruction error of the discretized bath.
pub fn kinetic_band(cm: &CorrelationMatrix, beta: usize, lambda: f64, reconstruction_error: f64, predicted: C64) -> Result<f64> {
    Ok(lambda * lambda * cm.eval(beta, beta, 0.0)?.norm() + reconstruction_error * predicted.norm())
}

#[allow(clippy::too_many_arguments)]
fn kinetic_rows(
    sys: &System,
    cm: &CorrelationMatrix,
    fb: &FiniteBathSpec,
    fc: &FiniteBathConfig,
    lambda: f64,
    rho0: &OperatorMatrix,
    t_op: &OperatorMatrix,
    beta: usize,
    times: &[f64],
    taus: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let model = JointModel::new(sys, &fc.weights, fb, lambda, &fc.joint_options())?;
    let start: Vec<(f64, ndarray::Array1<C64>)> = branches(rho0)?
        .into_iter()
        .map(|(p, phi)| Ok((p, model.product_with_vacuum(&phi)?)))
        .collect::<Result<_>>()?;
    let w = fc.weights[beta];
    let mut rows = Vec::new();
    for &t in times {
        let evolved: Vec<(f64, ndarray::Array1<C64>)> = start.iter().map(|(p, psi)| (*p, model.evolve(psi, t))).collect();
        let mut rho = OperatorMatrix::zeros(sys.dim());
        for (p, psi) in &evolved {
            rho = rho.add(&model.reduce(psi, psi).scale(C64::new(*p, 0.0)));
        }
        for &tau in taus {
            let measured: C64 = evolved
                .iter()
                .map(|(p, psi)| model.coupling_matrix_element(t_op, w, tau, psi, psi) * *p)
                .fold(ZERO, |a, b| a + b);
            let predicted = kinetic_correlator(&rho, t_op, beta, tau, sys, cm, lambda, 1)?;
            let band = kinetic_band(cm, beta, lambda, fb.reconstruction_error, predicted)?;
            rows.push(vec![
                lambda,
                t,
                tau,
                predicted.re,
                predicted.im,
                measured.re,
                measured.im,
                (predicted - measured).norm(),
                band,
            ]);
        }
    }
    Ok(rows)
}

fn oracle_compare(
    cfg: &ExperimentConfig,
    sys: &System,
    cm: &CorrelationMatrix,
    parts: &Parts,
    oracle: &OracleModel,
    w: &mut Writer,
) -> Result<()> {
    let with_four = parts.even.iter().any(|(r, _)| *r == 4);
    let d = sys.dim();
    // population ρ₀₀ for the damped qubit, coherence ρ₀₁ for dephasing
    let (index, exact): (usize, Box<dyn Fn(f64) -> Result<f64> + Sync>) = match oracle {
        OracleModel::DampedQubit { gamma0, kappa } => {
            let (g, k) = (*gamma0, *kappa);
            (0, Box::new(move |l| damped_qubit_population_rate(g, k, l)))
        }
        OracleModel::Dephasing { fit_window } => {
            let c = cm.entry(0, 0)?.clone();
            let (t1, t2) = *fit_window;
            (d, Box::new(move |l| Ok((dephasing_decay(&c, l, t2) - dephasing_decay(&c, l, t1)) / (t2 - t1))))
        }
    };
    let rows = sweep(&cfg.lambdas, |l| {
        let rate = |b: GeneratorBundle| -b.total.matrix()[[index, index]].re;
        let mut row = vec![l, exact(l)?, rate(parts.bundle(l, 2)?)];
        if with_four {
            row.push(rate(parts.bundle(l, 4)?));
        }
        if let OracleModel::Dephasing { .. } = oracle {
            row.push(dephasing_asymptotic_rate(cm, l)?);
        }
        Ok(row)
    })?;
    let mut header = vec!["lambda", "rate_exact", "rate_order2"];
    if with_four {
        header.push("rate_order4");
    }
    if let OracleModel::Dephasing { .. } = oracle {
        header.push("rate_formula");
    }
    w.csv("oracle_compare.csv", &header, &rows)
}

fn write_manifest(cfg: &ExperimentConfig, model: &Resolved, opts: &RunOptions, w: &mut Writer) -> Result<()> {
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "task": cfg.task.name(),
        "seed": opts.seed,
        "config_sha256": sha256_hex(&serde_json::to_vec(cfg)?),
        "system_fingerprint": model.system.fingerprint(),
        "bath_fingerprint": model.bath.fingerprint(),
        "tolerances": {
            "config": cfg.tolerances,
            "hermitian": tolerances::HERMITIAN,
            "trace": tolerances::TRACE,
            "min_eigenvalue": tolerances::MIN_EIGENVALUE,
            "generator_structure": tolerances::GENERATOR_STRUCTURE,
            "trajectory": tolerances::TRAJECTORY,
            "step_doubling": tolerances::STEP_DOUBLING,
            "null_space": tolerances::NULL_SPACE,
            "positivity_flag": tolerances::POSITIVITY_FLAG,
            "fock_leakage": tolerances::FOCK_LEAKAGE,
        },
        "files": w.report.files,
        "flags": w.report.flags,
    });
    let mut data = serde_json::to_vec_pretty(&manifest)?;
    data.push(b'\n');
    fs::write(w.dir.join("manifest.json"), data)?;
    Ok(())
}

/// Reads `manifest.json` from a run directory.
pub fn read_manifest(dir: &Path) -> Result<serde_json::Value> {
    Ok(serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?)
}
