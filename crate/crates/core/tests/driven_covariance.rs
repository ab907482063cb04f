mod common;

use common::{chain2, random_spd};
use ergodyn_core::gibbs::*;
use ergodyn_core::phase::QuadraticHamiltonian;
use ergodyn_core::rng::stream_rng;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn random_system(n: usize, seed: u64, alpha: f64, kernel: Kernel) -> DrivenSystem {
    let v = random_spd(n, 0.5, &mut stream_rng(seed, 0));
    build_driven(&QuadraticHamiltonian::new(&v).unwrap(), alpha, kernel).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn white_noise_gives_gibbs(n in 1usize..5, seed in any::<u64>(), alpha in 0.2f64..2.0, sigma2 in 0.5f64..2.0) {
        let sys = random_system(n, seed, alpha, Kernel::White { sigma2 });
        let c = stationary_white(&sys).unwrap();
        let g = gibbs_covariance(&sys.hamiltonian, 2.0 * alpha / sigma2).unwrap();
        prop_assert!((&c.matrix - &g.matrix).amax() <= 1e-9 * g.matrix.amax());
        prop_assert!(sys.stationarity_residual(&c, sigma2) <= 1e-9);
    }

    #[test]
    fn propagator_is_additive_in_the_kernel(seed in any::<u64>(), s in -1.0f64..1.0) {
        let k1 = Kernel::Gaussian { amplitude: 0.8, scale: 1.3 };
        let k2 = Kernel::CubicBSpline { amplitude: 0.5, width: 0.7 };
        let sys = |k: Kernel| random_system(2, seed, 1.0, k);
        let w1 = memory_propagator(&sys(k1.clone()), s).unwrap();
        let w2 = memory_propagator(&sys(k2.clone()), s).unwrap();
        let w12 = memory_propagator(&sys(Kernel::Sum(vec![k1, k2])), s).unwrap();
        prop_assert!((&w12 - (w1 + w2)).amax() <= 1e-9 * w12.amax());
    }

    #[test]
    fn colored_covariance_is_psd_with_zero_cross_block(seed in any::<u64>(), scale in 0.3f64..3.0) {
        let sys = random_system(3, seed, 1.0, Kernel::Gaussian { amplitude: 1.0, scale });
        let c = stationary_colored(&sys).unwrap();
        prop_assert!(c.is_psd(1e-9));
        prop_assert!(c.relative_cross_block() <= 1e-8);
        let cv = c_v_matrix(&sys.hamiltonian, 1.0, &sys.kernel).unwrap();
        prop_assert!(cv.is_psd(1e-9));
        let v = sys.hamiltonian.matrix();
        prop_assert!((v * cv.pp_block() - cv.pp_block() * v).amax() < 1e-10);
        prop_assert!((v * cv.qq_block() - cv.qq_block() * v).amax() < 1e-10);
    }
}

#[test]
fn memory_produces_velocity_correlations() {
    let sys = build_driven(&chain2(), 1.0, Kernel::default_gaussian()).unwrap();
    let c = stationary_colored(&sys).unwrap();
    assert!(c.qp_block().amax() <= 1e-8);
    assert!(c.pp(0, 1).abs() >= 1e-3);
    assert_eq!(gibbs_covariance(&sys.hamiltonian, 1.0).unwrap().pp(0, 1), 0.0);
}

#[test]
fn undamped_mode_is_reported_unstable() {
    let h = QuadraticHamiltonian::new(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0]))).unwrap();
    let sys = build_driven(&h, 0.5, Kernel::default_gaussian()).unwrap();
    assert_eq!(sys.l0_dim, 2);
    assert!(sys.spectral_abscissa.abs() < 1e-12);
    assert!(matches!(stationary_colored(&sys), Err(ergodyn_core::Error::Unstable { .. })));
}

#[test]
fn colored_oracle_reproduces_velocity_correlation() {
    let sys = build_driven(&chain2(), 1.0, Kernel::default_gaussian()).unwrap();
    let exact = stationary_colored(&sys).unwrap();
    let cfg = SdeConfig { horizon: 2000.0, dt: 0.02, paths: 8, seed: 1, frequencies: 512 };
    let sim = sde_oracle(&sys, &cfg).unwrap();
    let rel = (sim.covariance.pp(0, 1) - exact.pp(0, 1)).abs() / exact.pp(0, 1);
    assert!(rel < 0.1, "relative error {rel}");
}

#[test]
fn thermodynamic_scan_converges_on_chains() {
    let graphs: Vec<_> = [8, 16, 32].iter().map(|&n| LocalGraph::chain(n).unwrap()).collect();
    let t = NearestNeighbourTemplate { diag: 3.0, off: -1.0 };
    let k = Kernel::Gaussian { amplitude: 1.0, scale: 5.0 };
    let r = thermo_scan(&graphs, t, 1.0, &k, &[(0, 1)]).unwrap();
    assert!(r.convergence[0].pp_strictly_decreasing);
    assert!(r.stages.iter().all(|s| s.perturbation == 0.0));
}
