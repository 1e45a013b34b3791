use kinetic::bath::{lorentzian_correlation, quadrature_pair_correlations, CorrelationMatrix};
use kinetic::dynamics::{propagate, steady_state};
use kinetic::generators::{redfield_superop, secular_gkls, total_generator};
use kinetic::linalg::expm;
use kinetic::operator::{partial_trace, Subsystem};
use kinetic::random::{random_correlation_matrix, random_density, random_hermitian, random_system, rng};
use kinetic::system::qubit;
use kinetic::{OperatorMatrix, System, C64};
use ndarray::linalg::kron;
use ndarray::Array2;
use proptest::prelude::*;

#[test]
fn json_round_trip_gives_the_same_generator() {
    let mut r = rng(4);
    let sys = random_system(&mut r, 3, 2);
    let cm = random_correlation_matrix(&mut r, 2, 2);
    let sys2: System = serde_json::from_str(&serde_json::to_string(&sys).unwrap()).unwrap();
    let cm2: CorrelationMatrix = serde_json::from_str(&serde_json::to_string(&cm).unwrap()).unwrap();
    assert_eq!(sys.fingerprint(), sys2.fingerprint());
    assert_eq!(cm.fingerprint(), cm2.fingerprint());
    let a = redfield_superop(&sys, &cm, None).unwrap();
    let b = redfield_superop(&sys2, &cm2, None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn lorentzian_rates_are_nonnegative() {
    for (gamma0, kappa, omega) in [(1.0, 1.0, 1.0), (0.3, 2.5, -0.7), (2.0, 0.1, 4.0)] {
        let c = lorentzian_correlation(gamma0, kappa, omega).unwrap();
        let cm = quadrature_pair_correlations(&c);
        for w in [-10.0, -1.0, 0.0, 0.5, 1.0, 3.0, 10.0] {
            assert!(2.0 * c.half_fourier(w).re >= -1e-10);
            for a in 0..2 {
                assert!(2.0 * cm.half_fourier(a, a, w).unwrap().re >= -1e-10);
            }
        }
    }
}

#[test]
fn order_zero_commutes_with_the_partial_trace() {
    // free joint evolution of ρ_S ⊗ ρ_R with ρ_R stationary under H_R
    let mut r = rng(21);
    let (ds, dr) = (2usize, 3usize);
    let sys = random_system(&mut r, ds, 1);
    let h_r = OperatorMatrix::diagonal(&[0.0, 0.7, 1.9]);
    let rho_r = OperatorMatrix::diagonal(&[0.5, 0.3, 0.2]);
    let rho_s = random_density(&mut r, ds);
    let h = kron(sys.hamiltonian.as_array(), &Array2::eye(dr)) + kron(&Array2::eye(ds), h_r.as_array());
    let free = total_generator(&sys.hamiltonian, vec![], 0.0).unwrap();
    let joint = kron(rho_s.as_array(), rho_r.as_array());
    let times = [0.4, 1.3, 5.0];
    let traj = propagate(&free, &rho_s, &times).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let u = expm(&h.mapv(|z| z * C64::new(0.0, -t)).view()).unwrap();
        let evolved = u.dot(&joint).dot(&u.t().mapv(|z| z.conj()));
        let reduced = partial_trace(&evolved.view(), (ds, dr), Subsystem::System).unwrap();
        let diff = (&reduced - traj.states[k].as_array()).mapv(|z| z.norm()).fold(0.0f64, |a, &b| a.max(b));
        assert!(diff < 1e-12, "t = {t}: {diff}");
    }
}

#[test]
fn damped_qubit_relaxes_to_the_ground_state() {
    let sys = qubit::damped(1.0);
    let cm = quadrature_pair_correlations(&lorentzian_correlation(1.0, 1.0, 1.0).unwrap());
    let b = total_generator(&sys.hamiltonian, vec![(2, redfield_superop(&sys, &cm, None).unwrap())], 0.2).unwrap();
    let ss = steady_state(&b).unwrap();
    assert!(ss.unique);
    assert!((ss.state.get(1, 1).re - 1.0).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn steady_state_is_invariant_under_propagation(seed in 0u64..10_000, d in 2usize..4, lambda in 0.1f64..0.6) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, d, 2);
        let cm = random_correlation_matrix(&mut r, 2, 2);
        let b = secular_gkls(&sys, &cm, None).unwrap().bundle(&sys.hamiltonian, lambda).unwrap();
        let ss = steady_state(&b).unwrap();
        let traj = propagate(&b, &ss.state, &[0.5, 3.0, 20.0]).unwrap();
        for s in &traj.states {
            prop_assert!(s.max_abs_diff(&ss.state) <= 1e-9);
        }
    }

    #[test]
    fn unitary_free_evolution_preserves_density_matrices(seed in 0u64..10_000, d in 2usize..5, t in 0.0f64..10.0) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, d);
        let rho = random_density(&mut r, d);
        let free = total_generator(&h, vec![], 0.0).unwrap();
        let out = &propagate(&free, &rho, &[t]).unwrap().states[0];
        prop_assert!((out.trace() - C64::new(1.0, 0.0)).norm() <= 1e-12);
        prop_assert!(out.hermiticity_deviation() <= 1e-12);
        prop_assert!(out.min_eigenvalue().unwrap() >= -1e-12);
    }
}
