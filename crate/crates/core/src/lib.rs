//! Weak-coupling master-equation generators built from bath pair correlation
//! functions.
//!
//! The crate assembles the Redfield generator and its higher-order
//! corrections from a recursion on the recovery map, propagates the resulting
//! autonomous master equation, and ships exact reference solutions (pure
//! dephasing, a damped qubit, a discretized finite bath) to check them
//! against.

pub mod bath;
pub mod cli;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod generators;
pub mod linalg;
pub mod operator;
pub mod oracles;
pub mod random;
pub mod system;
pub mod tolerances;

pub use num_complex::Complex64 as C64;

pub use bath::{CorrelationMatrix, ExpSum, ExpTerm};
pub use error::{KineticError, Result};
pub use generators::GeneratorBundle;
pub use operator::{OperatorMatrix, SpectralData, Superoperator};
pub use system::System;
