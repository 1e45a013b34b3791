//! Independent references used to validate the generators.

pub mod dephasing;
pub mod finite_bath;
pub mod kinetic;
pub mod memory;
pub mod qrt;
pub mod quadrature;

pub use dephasing::{dephasing_asymptotic_offset, dephasing_asymptotic_rate, dephasing_decay, dephasing_exact};
pub use finite_bath::{
    dephasing_finite_bath, discretize_bath, finite_bath_evolve, EvolveOptions, FiniteBathRun, FiniteBathSpec,
    joint_dimension, JointModel, JointOptions, TwoTimeRequest,
};
pub use memory::{damped_qubit_closed_form, damped_qubit_memory, damped_qubit_population_rate};
pub use kinetic::kinetic_correlator;
pub use qrt::{qrt_compare, qrt_predict, QrtReport};
