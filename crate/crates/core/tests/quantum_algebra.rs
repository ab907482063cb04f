use ergodyn_core::linalg::CMatrix;
use ergodyn_core::quantum::*;
use ergodyn_core::rng::stream_rng;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn pair(n: usize, seed: u64) -> (HermitianMatrix, HermitianMatrix) {
    let mut rng = stream_rng(seed, 0);
    (random_hermitian(n, &mut rng), random_hermitian(n, &mut rng))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bracket_is_antisymmetric_and_hermitian(n in 1usize..5, seed in any::<u64>()) {
        let (a, b) = pair(n, seed);
        let ab = bracket(&a, &b).unwrap();
        let ba = bracket(&b, &a).unwrap();
        prop_assert!((ab.matrix() + ba.matrix()).norm() < 1e-12 * (1.0 + ab.norm()));
        prop_assert!((ab.matrix() - ab.matrix().adjoint()).norm() < 1e-12 * (1.0 + ab.norm()));
    }

    #[test]
    fn bracket_satisfies_jacobi(n in 1usize..5, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 1);
        let (a, b, c) = (random_hermitian(n, &mut rng), random_hermitian(n, &mut rng), random_hermitian(n, &mut rng));
        let cyc = |x: &HermitianMatrix, y: &HermitianMatrix, z: &HermitianMatrix| {
            bracket(x, &bracket(y, z).unwrap()).unwrap().into_matrix()
        };
        let sum = cyc(&a, &b, &c) + cyc(&b, &c, &a) + cyc(&c, &a, &b);
        prop_assert!(sum.norm() < 1e-10);
    }

    #[test]
    fn closure_is_invariant_under_unitary_conjugation(n in 2usize..4, seed in any::<u64>()) {
        let (h1, h2) = pair(n, seed);
        let w = reference_haar(n, &mut stream_rng(seed, 2)).into_matrix();
        let c = lie_closure(&h1, &h2).unwrap();
        let d = lie_closure(&h1.conjugate_by(&w), &h2.conjugate_by(&w)).unwrap();
        prop_assert_eq!(c.dim, d.dim);
        prop_assert!(c.closure_defect(&h1, &h2) < 1e-8);
    }

    #[test]
    fn fixed_cesaro_limit_commutes_with_h(n in 2usize..5, seed in any::<u64>(), t in 1.0f64..1e3) {
        let mut rng = stream_rng(seed, 3);
        let h = random_hermitian(n, &mut rng);
        let psi = random_unit_vector(n, &mut rng);
        let r = fixed_hamiltonian_cesaro(&h, &psi, t).unwrap();
        let lim = r.limit.matrix();
        prop_assert!((lim * h.matrix() - h.matrix() * lim).norm() < 1e-10 * (1.0 + h.norm()));
        prop_assert!((lim.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(r.error() <= r.bound_constant / t * (1.0 + 1e-9));
    }

    #[test]
    fn classical_bridge_reproduces_schrodinger(n in 1usize..5, seed in any::<u64>(), t in -3.0f64..3.0) {
        let mut rng = stream_rng(seed, 4);
        let h = random_hermitian(n, &mut rng);
        let f = random_unit_vector(n, &mut rng);
        let gyro = unitary_to_symplectic(&h);
        let classical = gyro.flow(&complex_to_phase(&f), t).unwrap();
        let quantum = complex_to_phase(&schrodinger_forward(&h, &f, t));
        prop_assert!((classical - quantum).amax() < 1e-9);
    }
}

#[test]
fn pauli_closures() {
    let sx = HermitianMatrix::sigma_x();
    assert_eq!(lie_closure(&sx, &HermitianMatrix::sigma_z()).unwrap().dim, 3);
    assert_eq!(lie_closure(&sx, &HermitianMatrix::diagonal(&[1.0, 0.0])).unwrap().dim, 4);
    let d = lie_closure(&HermitianMatrix::diagonal(&[1.0, 2.0]), &HermitianMatrix::diagonal(&[3.0, -1.0])).unwrap();
    assert_eq!(d.dim, 2);
}

/// In the eigenbasis of `H₂` the map `ad_{H₂}²` multiplies the `(k, j)` entry
/// by `−(λₖ − λⱼ)²`. With distinct squared gaps a Vandermonde solve combines
/// `ad_{H₂}^{2m}(H₁)` into the component of `H₁` on `{E_kj, E_jk}` alone, which
/// therefore lies in the generated algebra.
#[test]
fn ad_powers_isolate_matrix_units() {
    let n = 3;
    let (h1, h2) = pair(n, 17);
    let spec = h2.eigen();
    let mut pairs = vec![(0, 0)];
    for k in 0..n {
        for j in (k + 1)..n {
            pairs.push((k, j));
        }
    }
    let u: Vec<f64> = pairs.iter().map(|&(k, j)| -(spec.values[k] - spec.values[j]).powi(2)).collect();
    let m = u.len();
    let vander = DMatrix::from_fn(m, m, |r, c| u[r].powi(c as i32));
    let powers: Vec<CMatrix> = (0..m).map(|p| ad_power(&h2, &h1, 2 * p).unwrap().into_matrix()).collect();
    let closure = lie_closure(&h1, &h2).unwrap();
    let rotated = spec.vectors.adjoint() * h1.matrix() * &spec.vectors;
    for (target, &(k, j)) in pairs.iter().enumerate().skip(1) {
        let mut rhs = nalgebra::DVector::zeros(m);
        rhs[target] = 1.0;
        let coeffs = vander.clone().lu().solve(&rhs).unwrap();
        let mut combo = CMatrix::zeros(n, n);
        for (c, p) in coeffs.iter().zip(&powers) {
            combo += p * Complex64::new(*c, 0.0);
        }
        let mut expected = CMatrix::zeros(n, n);
        expected[(k, j)] = rotated[(k, j)];
        expected[(j, k)] = rotated[(j, k)];
        let expected = &spec.vectors * expected * spec.vectors.adjoint();
        assert!((&combo - &expected).norm() < 1e-7 * h1.norm(), "pair ({k}, {j})");
        let isolated = HermitianMatrix::hermitize(combo);
        assert!(closure.membership_residual(&isolated) < 1e-6);
    }
}

#[test]
fn criterion_prediction_matches_closure() {
    for seed in 0..20 {
        for n in 2..=4 {
            let (h1, h2) = pair(n, 100 + seed);
            let report = check_explicit_criterion(&h1, &h2).unwrap();
            assert!(report.applicable);
            assert_eq!(report.predicted_dim, Some(lie_closure(&h1, &h2).unwrap().dim));
        }
    }
}

#[test]
fn switch_products_stay_unitary() {
    let (h1, h2) = pair(3, 5);
    let clock = ergodyn_core::clock::RandomClock::exponential(1.0, 5).unwrap();
    let xs = simulate_switch(&h1, &h2, &clock, 500, 0).unwrap();
    assert_eq!(xs.len(), 501);
    assert!(xs.iter().all(|x| x.defect() < 1e-10));
    let last = switch_product(&h1, &h2, &clock, 500, 0).unwrap();
    assert!((last.matrix() - xs[500].matrix()).norm() < 1e-12);
}

#[test]
fn maximally_mixed_state_is_fixed() {
    let (h1, h2) = pair(3, 6);
    let clock = ergodyn_core::clock::RandomClock::exponential(1.0, 6).unwrap();
    let rho = DensityMatrix::maximally_mixed(3);
    let obs = [HermitianMatrix::diagonal(&[1.0, 0.0, 0.0]), h1.clone()];
    let r = cesaro_density(&h1, &h2, &clock, &rho, &obs, 100.0, 0).unwrap();
    assert!((r.entries[0].time_average - 1.0 / 3.0).abs() < 1e-12);
    assert!((r.entries[1].time_average - h1.trace() / 3.0).abs() < 1e-12);
}
