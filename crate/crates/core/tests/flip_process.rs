mod common;

use common::chain2;
use ergodyn_core::clock::{ClockLaw, RandomClock};
use ergodyn_core::flip::*;
use ergodyn_core::observable::Observable;
use ergodyn_core::phase::{PhaseVector, QuadraticHamiltonian};
use nalgebra::DMatrix;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn flips_preserve_energy(seed in any::<u64>(), q1 in -1.0f64..1.0, p2 in -1.0f64..1.0) {
        let h = chain2();
        let psi0 = PhaseVector::from_slices(&[q1, 0.3], &[0.2, p2]).unwrap();
        let clock = RandomClock::exponential(1.0, seed).unwrap();
        let traj = simulate_flip(&h, &psi0, &clock, 200.0).unwrap();
        let e0 = h.energy(&psi0).unwrap();
        for ev in &traj.events {
            let psi = PhaseVector::from_slices(&ev.q, &ev.p).unwrap();
            prop_assert!((h.energy(&psi).unwrap() - e0).abs() <= 1e-10 * e0.max(1e-300));
        }
        let avg = time_average(&h, &psi0, &clock, 200.0, &Observable::energy()).unwrap();
        prop_assert!((avg - e0).abs() <= 1e-10 * e0.max(1e-300));
    }
}

#[test]
fn velocity_flip_negates_first_momentum_only() {
    let psi = PhaseVector::from_slices(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
    let f = velocity_flip(&psi);
    assert_eq!(f.p.as_slice(), &[-3.0, 4.0]);
    assert_eq!(f.q, psi.q);
}

#[test]
fn decoupled_modes_do_not_equilibrate() {
    let h = QuadraticHamiltonian::new(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0]))).unwrap();
    let psi0 = PhaseVector::from_slices(&[0.0, 0.5], &[0.0, 0.0]).unwrap();
    let clock = RandomClock::exponential(1.0, 0).unwrap();
    let avg = time_average(&h, &psi0, &clock, 1e3, &Observable::pp(0, 0)).unwrap();
    // All energy stays in the second mode; the microcanonical value is h/2.
    assert!(avg.abs() < 1e-12);
    let d = ergodicity_diagnostics(&h, &ClockLaw::Exponential { rate: 1.0 });
    assert!(!d.v_plus);
}

#[test]
fn short_ergodicity_run_on_chain() {
    let cfg = ErgodicityConfig { horizon: 2e4, replicas: 2, reference_samples: 100_000, threshold: 0.1, ..ErgodicityConfig::default() };
    let obs = Observable::parse_list("p1^2, p2^2, q1q2").unwrap();
    let r = ergodicity_experiment(&chain2(), &obs, &cfg).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.diagnostics.v_plus);
    assert_eq!(r.diagnostics.covering_bound, Some(6));
}
