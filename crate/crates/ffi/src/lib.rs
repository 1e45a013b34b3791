//! C ABI over the `kinetic` crate.
//!
//! Every entry point returns a [`KnStatus`]. On failure the message is kept
//! per thread and can be read with [`kn_last_error`]. Handles are opaque and
//! must be released with their `_free` function. Matrices cross the boundary
//! as interleaved `(re, im)` doubles in row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use kinetic::bath::{CorrelationMatrix, ExpSum, ExpTerm};
use kinetic::dynamics::{propagate, steady_state};
use kinetic::engine::engine_for;
use kinetic::generators::{fourth_order_fast, redfield_superop, secular_gkls, total_generator};
use kinetic::{GeneratorBundle, KineticError, OperatorMatrix, Superoperator, System, C64};
use ndarray::Array2;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotHermitian = 3,
    DimensionMismatch = 4,
    Divergent = 5,
    NonFinite = 6,
    Numerical = 7,
    BufferTooSmall = 8,
    Unsupported = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KnPath {
    /// Closed forms for orders 2 and 4.
    Fast = 0,
    /// Recursive engine, any even order.
    Engine = 1,
    /// Secular GKLS form of order 2.
    Secular = 2,
}

pub struct KnSystem(System);

pub struct KnBath(CorrelationMatrix);

pub struct KnGenerator(GeneratorBundle);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &KineticError) -> KnStatus {
    match e {
        KineticError::NotHermitian { .. } => KnStatus::NotHermitian,
        KineticError::DimensionMismatch { .. } | KineticError::DimensionCap { .. } => KnStatus::DimensionMismatch,
        KineticError::Divergent { .. } => KnStatus::Divergent,
        KineticError::NonFinite(_) => KnStatus::NonFinite,
        KineticError::Linalg(_) | KineticError::Convergence(_) => KnStatus::Numerical,
        KineticError::Unsupported(_) => KnStatus::Unsupported,
        _ => KnStatus::InvalidArgument,
    }
}

struct Failure(KnStatus, String);

impl From<KineticError> for Failure {
    fn from(e: KineticError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            KnStatus::Ok
        }
        Ok(Err(Failure(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("panic inside kinetic".into());
            KnStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(KnStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(KnStatus::InvalidArgument, msg.into())
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn complex(v: &[f64]) -> Vec<C64> {
    v.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect()
}

unsafe fn read_matrix(p: *const f64, d: usize, what: &str) -> Result<OperatorMatrix, Failure> {
    let v = slice(p, 2 * d * d, what)?;
    let a = Array2::from_shape_vec((d, d), complex(v)).map_err(|e| invalid(e.to_string()))?;
    Ok(OperatorMatrix::new(a)?)
}

fn write_array(a: &Array2<C64>, out: *mut f64, len: usize) -> Result<(), Failure> {
    let need = 2 * a.len();
    if len < need {
        return Err(Failure(KnStatus::BufferTooSmall, format!("buffer holds {len} doubles, {need} needed")));
    }
    if out.is_null() {
        return Err(null("output buffer"));
    }
    let dst = unsafe { std::slice::from_raw_parts_mut(out, need) };
    for (k, z) in a.iter().enumerate() {
        dst[2 * k] = z.re;
        dst[2 * k + 1] = z.im;
    }
    Ok(())
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn kn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// System with Hermitian `H_S` and `n_couplings` Hermitian coupling operators,
/// all `dim × dim`. `couplings` holds them back to back.
///
/// # Safety
/// `hamiltonian` must hold `2·dim²` doubles and `couplings` `2·n_couplings·dim²`.
#[no_mangle]
pub unsafe extern "C" fn kn_system_new(
    dim: usize,
    hamiltonian: *const f64,
    n_couplings: usize,
    couplings: *const f64,
    out: *mut *mut KnSystem,
) -> KnStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let h = read_matrix(hamiltonian, dim, "hamiltonian")?;
        let stride = 2 * dim * dim;
        let all = slice(couplings, stride * n_couplings, "couplings")?;
        let ts = (0..n_couplings)
            .map(|k| read_matrix(all[k * stride..].as_ptr(), dim, "coupling"))
            .collect::<Result<Vec<_>, _>>()?;
        put(out, KnSystem(System::new(h, ts)?))
    })
}

/// # Safety
/// `system` must come from [`kn_system_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn kn_system_free(system: *mut KnSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Empty pair-correlation table for `n_labels` bath operators. A finite
/// `beta` is recorded for detailed-balance checks; pass a negative value for
/// none.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kn_bath_new(n_labels: usize, beta: f64, out: *mut *mut KnBath) -> KnStatus {
    guard(|| {
        if n_labels == 0 {
            return Err(invalid("a bath needs at least one operator"));
        }
        let labels = (0..n_labels).map(|k| format!("B{k}")).collect();
        let beta = (beta >= 0.0).then_some(beta);
        put(out, KnBath(CorrelationMatrix::new(labels, beta)))
    })
}

/// Sets `C_{αβ}(t) = Σ_k a_k e^{-z_k t}`; `a` and `z` hold `n_terms`
/// interleaved complex numbers each.
///
/// # Safety
/// `bath` must be a live handle; `a` and `z` must hold `2·n_terms` doubles.
#[no_mangle]
pub unsafe extern "C" fn kn_bath_set(
    bath: *mut KnBath,
    alpha: usize,
    beta: usize,
    n_terms: usize,
    a: *const f64,
    z: *const f64,
) -> KnStatus {
    guard(|| {
        let b = bath.as_mut().ok_or_else(|| null("bath"))?;
        let n = b.0.len();
        if alpha >= n || beta >= n {
            return Err(invalid(format!("index ({alpha}, {beta}) outside {n} labels")));
        }
        let a = complex(slice(a, 2 * n_terms, "a")?);
        let z = complex(slice(z, 2 * n_terms, "z")?);
        let terms = a.into_iter().zip(z).map(|(a, z)| ExpTerm { a, z }).collect();
        b.0.insert(alpha, beta, ExpSum::new(terms)?);
        Ok(())
    })
}

/// # Safety
/// `bath` must come from [`kn_bath_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn kn_bath_free(bath: *mut KnBath) {
    if !bath.is_null() {
        drop(Box::from_raw(bath));
    }
}

/// `-i𝓛_S + Σ_{r even ≤ max_order} λ^r 𝒢_r`. Odd orders vanish for a
/// Gaussian bath and are left out. The fast path supports `max_order` 2 and
/// 4 (the latter for one coupling operator), the secular path only 2.
///
/// # Safety
/// `system` and `bath` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kn_generator_new(
    system: *const KnSystem,
    bath: *const KnBath,
    path: KnPath,
    max_order: usize,
    lambda: f64,
    out: *mut *mut KnGenerator,
) -> KnStatus {
    guard(|| {
        let sys = &handle(system, "system")?.0;
        let cm = &handle(bath, "bath")?.0;
        cm.validate()?;
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(invalid(format!("lambda = {lambda} must be finite and non-negative")));
        }
        let orders: Vec<usize> = (2..=max_order).step_by(2).collect();
        let mut parts: Vec<(usize, Superoperator)> = Vec::new();
        match path {
            KnPath::Fast => {
                for &r in &orders {
                    let g = match r {
                        2 => redfield_superop(sys, cm, None)?,
                        4 => fourth_order_fast(sys, cm)?,
                        _ => return Err(Failure(KnStatus::Unsupported, format!("fast path has no order {r}"))),
                    };
                    parts.push((r, g));
                }
            }
            KnPath::Engine => {
                let engine = engine_for(sys, cm, None)?;
                for &r in &orders {
                    parts.push((r, engine.generator(r)?));
                }
            }
            KnPath::Secular => {
                if max_order > 2 {
                    return Err(Failure(KnStatus::Unsupported, "secular path is order 2 only".into()));
                }
                if max_order == 2 {
                    parts.push((2, secular_gkls(sys, cm, None)?.superoperator()));
                }
            }
        }
        put(out, KnGenerator(total_generator(&sys.hamiltonian, parts, lambda)?))
    })
}

/// # Safety
/// `generator` must come from [`kn_generator_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn kn_generator_free(generator: *mut KnGenerator) {
    if !generator.is_null() {
        drop(Box::from_raw(generator));
    }
}

/// System dimension `d`; 0 for a null handle.
///
/// # Safety
/// `generator` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn kn_generator_dim(generator: *const KnGenerator) -> usize {
    generator.as_ref().map_or(0, |g| g.0.dim())
}

/// Writes the `d² × d²` matrix of order `order` (0 for the total generator)
/// acting on column-stacked density matrices. `len` counts doubles.
///
/// # Safety
/// `generator` must be a live handle and `out` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kn_generator_matrix(
    generator: *const KnGenerator,
    order: usize,
    out: *mut f64,
    len: usize,
) -> KnStatus {
    guard(|| {
        let g = &handle(generator, "generator")?.0;
        let m = if order == 0 {
            &g.total
        } else {
            g.part(order).ok_or_else(|| invalid(format!("order {order} not in this generator")))?
        };
        write_array(m.matrix(), out, len)
    })
}

/// `ρ(t_k) = e^{𝒢t_k} ρ₀` for an ascending grid. `out` receives `n_times`
/// density matrices back to back.
///
/// # Safety
/// `rho0` must hold `2·d²` doubles, `times` `n_times` doubles and `out`
/// `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kn_propagate(
    generator: *const KnGenerator,
    rho0: *const f64,
    n_times: usize,
    times: *const f64,
    out: *mut f64,
    len: usize,
) -> KnStatus {
    guard(|| {
        let g = &handle(generator, "generator")?.0;
        let d = g.dim();
        let rho = read_matrix(rho0, d, "rho0")?;
        let ts = slice(times, n_times, "times")?;
        let need = 2 * d * d * n_times;
        if len < need {
            return Err(Failure(KnStatus::BufferTooSmall, format!("buffer holds {len} doubles, {need} needed")));
        }
        let traj = propagate(g, &rho, ts)?;
        for (k, s) in traj.states.iter().enumerate() {
            write_array(s.as_array(), out.add(2 * d * d * k), 2 * d * d)?;
        }
        Ok(())
    })
}

/// Normalized null vector of the total generator. `unique` (optional) is set
/// to 1 when the null space is one-dimensional.
///
/// # Safety
/// `out` must hold `len` doubles; `unique` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn kn_steady_state(
    generator: *const KnGenerator,
    out: *mut f64,
    len: usize,
    unique: *mut i32,
) -> KnStatus {
    guard(|| {
        let g = &handle(generator, "generator")?.0;
        let ss = steady_state(g)?;
        write_array(ss.state.as_array(), out, len)?;
        if !unique.is_null() {
            *unique = ss.unique as i32;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;
    use std::ptr;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(kn_last_error()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn null_handles_are_rejected() {
        let mut out = ptr::null_mut();
        let st = unsafe { kn_generator_new(ptr::null(), ptr::null(), KnPath::Fast, 2, 0.1, &mut out) };
        assert_eq!(st, KnStatus::NullPointer);
        assert!(out.is_null());
        assert!(last_error().contains("null"));
        assert_eq!(unsafe { kn_generator_dim(ptr::null()) }, 0);
    }

    #[test]
    fn non_hermitian_hamiltonian_is_reported() {
        let h = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let mut out = ptr::null_mut();
        let st = unsafe { kn_system_new(2, h.as_ptr(), 0, ptr::null(), &mut out) };
        assert_eq!(st, KnStatus::NotHermitian);
        assert!(last_error().contains("hermiticity"));
        let ok = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0];
        assert_eq!(unsafe { kn_system_new(2, ok.as_ptr(), 0, ptr::null(), &mut out) }, KnStatus::Ok);
        assert_eq!(last_error(), "");
        unsafe { kn_system_free(out) };
    }

    #[test]
    fn bath_rejects_growing_exponentials() {
        let mut bath = ptr::null_mut();
        assert_eq!(unsafe { kn_bath_new(1, -1.0, &mut bath) }, KnStatus::Ok);
        let a = [1.0, 0.0];
        let z = [-1.0, 0.0];
        assert_eq!(unsafe { kn_bath_set(bath, 0, 0, 1, a.as_ptr(), z.as_ptr()) }, KnStatus::InvalidArgument);
        assert_eq!(unsafe { kn_bath_set(bath, 1, 0, 1, a.as_ptr(), a.as_ptr()) }, KnStatus::InvalidArgument);
        unsafe { kn_bath_free(bath) };
    }

    #[test]
    fn version_is_the_crate_version() {
        let v = unsafe { CStr::from_ptr(kn_version()) }.to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
