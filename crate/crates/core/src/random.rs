//! Seeded random instances for tests, benchmarks and the CLI `--seed` flag.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bath::{CorrelationMatrix, ExpSum, ExpTerm};
use crate::operator::OperatorMatrix;
use crate::system::System;

pub type InstanceRng = ChaCha8Rng;

pub fn rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex(r: &mut impl Rng) -> C64 {
    C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

pub fn random_operator(r: &mut impl Rng, d: usize) -> OperatorMatrix {
    let a = Array2::from_shape_fn((d, d), |_| complex(r));
    OperatorMatrix::new(a).expect("square")
}

pub fn random_hermitian(r: &mut impl Rng, d: usize) -> OperatorMatrix {
    random_operator(r, d).hermitized()
}

/// `A A^dagger / Tr(A A^dagger)`: full rank with probability one.
pub fn random_density(r: &mut impl Rng, d: usize) -> OperatorMatrix {
    let a = random_operator(r, d);
    let p = a.dot(&a.dagger());
    let tr = p.trace();
    p.scale(tr.inv()).hermitized()
}

/// Random pure state `|ψ><ψ|`.
pub fn random_pure(r: &mut impl Rng, d: usize) -> OperatorMatrix {
    let psi: Vec<C64> = (0..d).map(|_| complex(r)).collect();
    OperatorMatrix::projector(&psi)
}

/// Random system with `n_couplings` Hermitian coupling operators.
pub fn random_system(r: &mut impl Rng, d: usize, n_couplings: usize) -> System {
    let h = random_hermitian(r, d);
    let couplings = (0..n_couplings).map(|_| random_hermitian(r, d)).collect();
    System::new(h, couplings).expect("hermitian by construction")
}

/// `C_{αβ}(t) = Σ_k (A_k)_{αβ} e^{-z_k t}` with positive semidefinite `A_k`,
/// so the full spectral matrix is positive and `C(0)` is Hermitian.
pub fn random_correlation_matrix(r: &mut impl Rng, n_labels: usize, n_terms: usize) -> CorrelationMatrix {
    let labels: Vec<String> = (0..n_labels).map(|i| format!("b{i}")).collect();
    let mut entries = vec![vec![Vec::new(); n_labels]; n_labels];
    for _ in 0..n_terms {
        let z = C64::new(r.gen_range(0.5..2.0), r.gen_range(-2.0..2.0));
        let g = random_operator(r, n_labels);
        let a = g.dot(&g.dagger()).scale(C64::new(0.5, 0.0));
        for (alpha, row) in entries.iter_mut().enumerate() {
            for (beta, list) in row.iter_mut().enumerate() {
                list.push(ExpTerm { a: a.get(alpha, beta), z });
            }
        }
    }
    let mut cm = CorrelationMatrix::new(labels, None);
    for (alpha, row) in entries.into_iter().enumerate() {
        for (beta, list) in row.into_iter().enumerate() {
            cm.insert(alpha, beta, ExpSum::new(list).expect("Re z > 0"));
        }
    }
    cm
}

/// A single-label random exponential sum with positive spectral density.
pub fn random_exp_sum(r: &mut impl Rng, n_terms: usize) -> ExpSum {
    let cm = random_correlation_matrix(r, 1, n_terms);
    cm.entry(0, 0).expect("present").clone()
}
