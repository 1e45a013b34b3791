//! Numerical tolerances shared across the crate.
//!
//! Every threshold that an invariant check or acceptance criterion relies on
//! lives here so that tests and the CLI pin the same values.

/// Max-abs of `A - A^dagger` accepted for Hamiltonians and density matrices.
pub const HERMITIAN: f64 = 1e-12;

/// Trace deviation accepted for input density matrices.
pub const TRACE: f64 = 1e-12;

/// Lowest eigenvalue accepted for input density matrices.
pub const MIN_EIGENVALUE: f64 = -1e-10;

/// Hermiticity of the static correlation matrix `C(0)`.
pub const STATIC_CORRELATION_HERMITIAN: f64 = 1e-10;

/// Relative degeneracy tolerance, multiplied by `max |eigenvalue|`.
pub const DEGENERACY_RELATIVE: f64 = 1e-9;

/// Absolute floor for the degeneracy tolerance (all-zero spectra).
pub const DEGENERACY_FLOOR: f64 = 1e-12;

/// Relative size of an eta-pole coefficient that is reported as divergent.
pub const POLE_RELATIVE: f64 = 1e-8;

/// Exponent magnitude (relative to the bath/Bohr scale) treated as exactly zero.
pub const ZERO_EXPONENT_RELATIVE: f64 = 1e-10;

/// Structural invariants of assembled generators (trace, Hermiticity).
pub const GENERATOR_STRUCTURE: f64 = 1e-11;

/// Trajectory trace and Hermiticity drift.
pub const TRAJECTORY: f64 = 1e-9;

/// Step-doubling self-consistency of the propagator.
pub const STEP_DOUBLING: f64 = 1e-10;

/// Singular values below this (relative to the largest) span the null space.
pub const NULL_SPACE: f64 = 1e-9;

/// Minimum eigenvalue below which a trajectory sample is flagged.
pub const POSITIVITY_FLAG: f64 = -1e-8;

/// Truncation leakage reported by the finite-bath oracle.
pub const FOCK_LEAKAGE: f64 = 1e-6;

/// Default dimension cap for finite-bath exact evolution.
pub const FINITE_BATH_DIMENSION_CAP: usize = 4096;
