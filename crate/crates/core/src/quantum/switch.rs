//! Random alternation of `e^{−iτH₁}` and `e^{−iτH₂}` and its long-time laws.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{complex_gaussian, DensityMatrix, HermitianMatrix, Spectrum, UnitaryMatrix};
use crate::clock::RandomClock;
use crate::error::{Error, Result};
use crate::linalg::{oscillatory_integral, polar_unitary, CMatrix, CVector};
use crate::rng::Rng;

/// Products are re-orthonormalised after this many factors.
pub const REORTHONORMALIZE_EVERY: usize = 100;
/// Minimum sample count accepted by [`haar_moment_test`].
pub const MIN_HAAR_SAMPLES: usize = 100;
/// Default `|z|` threshold of the Haar moment test.
pub const HAAR_Z_THRESHOLD: f64 = 4.0;

fn check_pair(h1: &HermitianMatrix, h2: &HermitianMatrix) -> Result<()> {
    if h1.dim() != h2.dim() {
        return Err(Error::DimensionMismatch { expected: h1.dim(), found: h2.dim() });
    }
    Ok(())
}

/// `X₁, …, X_n` with `X_k = e^{−iτ_k H_{σ(k)}} X_{k−1}`, `σ` alternating
/// `1, 2, 1, …`; element 0 is `E`.
pub fn simulate_switch(
    h1: &HermitianMatrix,
    h2: &HermitianMatrix,
    clock: &RandomClock,
    n_steps: usize,
    stream: u64,
) -> Result<Vec<UnitaryMatrix>> {
    check_pair(h1, h2)?;
    let spectra = [h1.eigen(), h2.eigen()];
    let n = h1.dim();
    let mut x = CMatrix::identity(n, n);
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(UnitaryMatrix::from_trusted(x.clone()));
    for (k, tau) in clock.ticks(stream).take(n_steps).enumerate() {
        x = spectra[k % 2].propagator(tau) * x;
        if (k + 1) % REORTHONORMALIZE_EVERY == 0 {
            x = polar_unitary(&x);
        }
        out.push(UnitaryMatrix::from_trusted(x.clone()));
    }
    Ok(out)
}

/// Only the final product `X_n` of [`simulate_switch`].
pub fn switch_product(
    h1: &HermitianMatrix,
    h2: &HermitianMatrix,
    clock: &RandomClock,
    n_steps: usize,
    stream: u64,
) -> Result<UnitaryMatrix> {
    check_pair(h1, h2)?;
    let spectra = [h1.eigen(), h2.eigen()];
    let n = h1.dim();
    let mut x = CMatrix::identity(n, n);
    for (k, tau) in clock.ticks(stream).take(n_steps).enumerate() {
        x = spectra[k % 2].propagator(tau) * x;
        if (k + 1) % REORTHONORMALIZE_EVERY == 0 {
            x = polar_unitary(&x);
        }
    }
    Ok(UnitaryMatrix::from_trusted(x))
}

/// `X_n` for runs `0..runs` (one clock stream per run).
pub fn switch_samples(
    h1: &HermitianMatrix,
    h2: &HermitianMatrix,
    clock: &RandomClock,
    n_steps: usize,
    runs: usize,
) -> Result<Vec<UnitaryMatrix>> {
    (0..runs as u64).into_par_iter().map(|r| switch_product(h1, h2, clock, n_steps, r)).collect()
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of `diag R` moved into `Q`.
pub fn reference_haar(n: usize, rng: &mut Rng) -> UnitaryMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix::from_trusted(q)
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentZ {
    pub statistic: String,
    pub empirical: f64,
    pub expected: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub dim: usize,
    pub samples: usize,
    pub moments: Vec<MomentZ>,
    pub max_abs_z: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// z-scores of first and second moments against their Haar values.
///
/// Statistics: `Re/Im E[u_ij]` (Haar 0, variance `1/(2N)`), `E|u_ij|²`
/// (Haar `1/N`, variance `(N−1)/(N²(N+1))`), and `Re/Im E[u_ij ū_kl]` for
/// distinct index pairs (Haar 0, variance half of `E|u_ij u_kl|²`, which is
/// `1/(N(N+1))` on a shared row or column and `1/(N²−1)` otherwise).
pub fn haar_moment_test(samples: &[UnitaryMatrix]) -> Result<MomentReport> {
    if samples.len() < MIN_HAAR_SAMPLES {
        return Err(Error::TooFewSamples { required: MIN_HAAR_SAMPLES, found: samples.len() });
    }
    let n = samples[0].dim();
    if let Some(bad) = samples.iter().find(|u| u.dim() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: bad.dim() });
    }
    let m = samples.len() as f64;
    let nf = n as f64;
    let mut moments = Vec::new();
    let mut push = |statistic: String, values: &mut dyn Iterator<Item = f64>, expected: f64, var: f64| {
        let empirical = values.sum::<f64>() / m;
        let z = (empirical - expected) / (var / m).sqrt();
        moments.push(MomentZ { statistic, empirical, expected, z });
    };
    for i in 0..n {
        for j in 0..n {
            let var = 1.0 / (2.0 * nf);
            push(format!("Re u{}{}", i + 1, j + 1), &mut samples.iter().map(|u| u.matrix()[(i, j)].re), 0.0, var);
            push(format!("Im u{}{}", i + 1, j + 1), &mut samples.iter().map(|u| u.matrix()[(i, j)].im), 0.0, var);
            let var = (nf - 1.0) / (nf * nf * (nf + 1.0));
            let var = if n == 1 { f64::MIN_POSITIVE } else { var };
            push(format!("|u{}{}|^2", i + 1, j + 1), &mut samples.iter().map(|u| u.matrix()[(i, j)].norm_sqr()), 1.0 / nf, var);
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for &(k, l) in &pairs[a + 1..] {
            let shared = i == k || j == l;
            let second = if shared { 1.0 / (nf * (nf + 1.0)) } else { 1.0 / (nf * nf - 1.0) };
            let prod = |u: &UnitaryMatrix| u.matrix()[(i, j)] * u.matrix()[(k, l)].conj();
            let label = format!("u{}{}*conj(u{}{})", i + 1, j + 1, k + 1, l + 1);
            push(format!("Re {label}"), &mut samples.iter().map(|u| prod(u).re), 0.0, 0.5 * second);
            push(format!("Im {label}"), &mut samples.iter().map(|u| prod(u).im), 0.0, 0.5 * second);
        }
    }
    let max_abs_z = moments.iter().map(|s| s.z.abs()).fold(0.0, f64::max);
    Ok(MomentReport {
        dim: n,
        samples: samples.len(),
        moments,
        max_abs_z,
        threshold: HAAR_Z_THRESHOLD,
        pass: max_abs_z <= HAAR_Z_THRESHOLD,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CesaroEntry {
    pub observable: usize,
    pub time_average: f64,
    /// `Tr(A)/N`.
    pub reference: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CesaroReport {
    pub horizon: f64,
    pub segments: usize,
    pub entries: Vec<CesaroEntry>,
    /// Largest deviation of `Tr ρ` (or of `‖ψ‖`) from 1 at segment ends.
    pub normalization_defect: f64,
}

/// `∫₀^τ Tr(e^{−iHt}ρe^{iHt}A) dt` in closed form, with `ρ̃ = V*ρV` and
/// `Ã = V*AV` in the eigenbasis of `H`.
fn segment_integral(spec: &Spectrum, rho_t: &CMatrix, a_t: &CMatrix, tau: f64) -> f64 {
    let n = spec.values.len();
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..n {
        for l in 0..n {
            let w = spec.values[k] - spec.values[l];
            sum += rho_t[(k, l)] * a_t[(l, k)] * oscillatory_integral(w, tau);
        }
    }
    sum.re
}

fn reports(
    sums: Vec<f64>,
    observables: &[HermitianMatrix],
    horizon: f64,
    segments: usize,
    defect: f64,
) -> CesaroReport {
    let entries = sums
        .into_iter()
        .zip(observables)
        .enumerate()
        .map(|(k, (s, a))| {
            let time_average = s / horizon;
            let reference = a.trace() / a.dim() as f64;
            CesaroEntry { observable: k, time_average, reference, abs_error: (time_average - reference).abs() }
        })
        .collect();
    CesaroReport { horizon, segments, entries, normalization_defect: defect }
}

/// `(1/T)∫₀ᵀ Tr(ρ(t)A) dt` with `ρ(t) = X(t)ρ₀X*(t)` along switch run `stream`.
pub fn cesaro_density(
    h1: &HermitianMatrix,
    h2: &HermitianMatrix,
    clock: &RandomClock,
    rho0: &DensityMatrix,
    observables: &[HermitianMatrix],
    horizon: f64,
    stream: u64,
) -> Result<CesaroReport> {
    check_pair(h1, h2)?;
    if rho0.dim() != h1.dim() {
        return Err(Error::DimensionMismatch { expected: h1.dim(), found: rho0.dim() });
    }
    if let Some(a) = observables.iter().find(|a| a.dim() != h1.dim()) {
        return Err(Error::DimensionMismatch { expected: h1.dim(), found: a.dim() });
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("time horizon must be positive, got {horizon}")));
    }
    let spectra = [h1.eigen(), h2.eigen()];
    let rotated: Vec<Vec<CMatrix>> = spectra
        .iter()
        .map(|s| observables.iter().map(|a| s.vectors.adjoint() * a.matrix() * &s.vectors).collect())
        .collect();
    let mut rho = rho0.matrix().clone();
    let mut sums = vec![0.0; observables.len()];
    let mut t = 0.0;
    let mut segments = 0;
    let mut defect: f64 = 0.0;
    let mut ticks = clock.ticks(stream);
    while t < horizon {
        let which = segments % 2;
        let tau = ticks.next().expect("clock is infinite").min(horizon - t);
        let spec = &spectra[which];
        let rho_t = spec.vectors.adjoint() * &rho * &spec.vectors;
        for (s, a_t) in sums.iter_mut().zip(&rotated[which]) {
            *s += segment_integral(spec, &rho_t, a_t, tau);
        }
        let u = spec.propagator(tau);
        rho = &u * rho * u.adjoint();
        rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        let trace = rho.trace().re;
        defect = defect.max((trace - 1.0).abs());
        rho /= Complex64::new(trace, 0.0);
        t = if horizon - t <= tau { horizon } else { t + tau };
        segments += 1;
    }
    Ok(reports(sums, observables, horizon, segments, defect))
}

/// `(1/T)∫₀ᵀ (Aψ(t), ψ(t)) dt` with `ψ(t) = X(t)ψ₀`, propagating the vector.
pub fn pure_state_switch(
    h1: &HermitianMatrix,
    h2: &HermitianMatrix,
    clock: &RandomClock,
    psi0: &CVector,
    observables: &[HermitianMatrix],
    horizon: f64,
    stream: u64,
) -> Result<CesaroReport> {
    check_pair(h1, h2)?;
    if psi0.len() != h1.dim() {
        return Err(Error::DimensionMismatch { expected: h1.dim(), found: psi0.len() });
    }
    if (psi0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("state vector has norm {}", psi0.norm())));
    }
    if let Some(a) = observables.iter().find(|a| a.dim() != h1.dim()) {
        return Err(Error::DimensionMismatch { expected: h1.dim(), found: a.dim() });
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("time horizon must be positive, got {horizon}")));
    }
    let spectra = [h1.eigen(), h2.eigen()];
    let rotated: Vec<Vec<CMatrix>> = spectra
        .iter()
        .map(|s| observables.iter().map(|a| s.vectors.adjoint() * a.matrix() * &s.vectors).collect())
        .collect();
    let mut psi = psi0.clone();
    let mut sums = vec![0.0; observables.len()];
    let mut t = 0.0;
    let mut segments = 0;
    let mut defect: f64 = 0.0;
    let mut ticks = clock.ticks(stream);
    while t < horizon {
        let which = segments % 2;
        let tau = ticks.next().expect("clock is infinite").min(horizon - t);
        let spec = &spectra[which];
        let c = spec.vectors.adjoint() * &psi;
        let rho_t = &c * c.adjoint();
        for (s, a_t) in sums.iter_mut().zip(&rotated[which]) {
            *s += segment_integral(spec, &rho_t, a_t, tau);
        }
        psi = spec.propagator(tau) * psi;
        defect = defect.max((psi.norm() - 1.0).abs());
        t = if horizon - t <= tau { horizon } else { t + tau };
        segments += 1;
    }
    Ok(reports(sums, observables, horizon, segments, defect))
}

/// Cesàro average of `P_{e^{−iHt}ψ}` over `[0, T]`, its `T → ∞` limit
/// `Σ|(ψ, ψₖ)|² P_{ψₖ}`, and a constant `C` with `‖average − limit‖_F ≤ C/T`.
#[derive(Debug, Clone, Serialize)]
pub struct FixedCesaro {
    pub average: DensityMatrix,
    pub limit: DensityMatrix,
    /// `C = 2·(Σ_{k≠l} |cₖ|²|cₗ|² / (λₖ − λₗ)²)^{1/2}`, from `|∫₀ᵀ e^{−iωt}dt| ≤ 2/|ω|`.
    pub bound_constant: f64,
    pub horizon: f64,
}

impl FixedCesaro {
    pub fn error(&self) -> f64 {
        (self.average.matrix() - self.limit.matrix()).norm()
    }
}

/// Relative gap below which eigenvalues are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

pub fn fixed_hamiltonian_cesaro(h: &HermitianMatrix, psi: &CVector, horizon: f64) -> Result<FixedCesaro> {
    if psi.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: psi.len() });
    }
    if (psi.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("state vector has norm {}", psi.norm())));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("time horizon must be positive, got {horizon}")));
    }
    let spec = h.eigen();
    let n = h.dim();
    let gap = spec.min_gap();
    if n > 1 && gap <= DEGENERACY_TOL * spec.radius().max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateSpectrum { gap });
    }
    let c = spec.vectors.adjoint() * psi;
    let mut avg = CMatrix::zeros(n, n);
    let mut lim = CMatrix::zeros(n, n);
    let mut bound_sq = 0.0;
    for k in 0..n {
        for l in 0..n {
            let amp = c[k] * c[l].conj();
            if k == l {
                avg[(k, l)] = amp;
                lim[(k, l)] = amp;
            } else {
                let w = spec.values[k] - spec.values[l];
                avg[(k, l)] = amp * oscillatory_integral(w, horizon) / horizon;
                bound_sq += amp.norm_sqr() / (w * w);
            }
        }
    }
    let v = &spec.vectors;
    let back = |m: CMatrix| DensityMatrix(HermitianMatrix::hermitize(v * m * v.adjoint()).into_matrix());
    Ok(FixedCesaro { average: back(avg), limit: back(lim), bound_constant: 2.0 * bound_sq.sqrt(), horizon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::random_hermitian;
    use crate::rng::stream_rng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn zero_steps_is_identity() {
        let clock = RandomClock::exponential(1.0, 0).unwrap();
        let x = simulate_switch(&HermitianMatrix::sigma_x(), &HermitianMatrix::sigma_z(), &clock, 0, 0).unwrap();
        assert_eq!(x.len(), 1);
        assert_eq!(x[0], UnitaryMatrix::identity(2));
    }

    #[test]
    fn equal_hamiltonians_collapse() {
        let mut rng = stream_rng(5, 0);
        let h = random_hermitian(3, &mut rng);
        let clock = RandomClock::exponential(1.0, 2).unwrap();
        let xs = simulate_switch(&h, &h, &clock, 25, 0).unwrap();
        let total: f64 = clock.ticks(0).take(25).sum();
        let direct = h.eigen().propagator(total);
        assert!((xs[25].matrix() - direct).norm() < 1e-11);
    }

    #[test]
    fn long_products_stay_unitary() {
        let mut rng = stream_rng(6, 0);
        let h1 = random_hermitian(3, &mut rng);
        let h2 = random_hermitian(3, &mut rng);
        let clock = RandomClock::exponential(1.0, 3).unwrap();
        let x = switch_product(&h1, &h2, &clock, 10_000, 0).unwrap();
        assert!(x.defect() <= 1e-9);
    }

    #[test]
    fn identity_samples_fail_the_haar_test() {
        let samples = vec![UnitaryMatrix::identity(2); 200];
        let r = haar_moment_test(&samples).unwrap();
        assert!(!r.pass);
        assert!(matches!(haar_moment_test(&samples[..50]), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn fixed_cesaro_examples() {
        let h = HermitianMatrix::diagonal(&[0.0, 1.0]);
        let e1 = CVector::from_vec(vec![c(1.0), c(0.0)]);
        let r = fixed_hamiltonian_cesaro(&h, &e1, 50.0).unwrap();
        assert!((r.limit.matrix() - HermitianMatrix::projector(&e1).matrix()).norm() < 1e-15);
        assert!(r.error() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = CVector::from_vec(vec![c(s), c(s)]);
        for t in [1e2, 1e3, 1e4] {
            let r = fixed_hamiltonian_cesaro(&h, &psi, t).unwrap();
            let half = CMatrix::identity(2, 2) * c(0.5);
            assert!((r.limit.matrix() - half).norm() < 1e-15);
            assert!(r.error() <= r.bound_constant / t);
        }
        let degenerate = HermitianMatrix::identity(2);
        assert!(matches!(fixed_hamiltonian_cesaro(&degenerate, &psi, 1.0), Err(Error::DegenerateSpectrum { .. })));
    }

    #[test]
    fn maximally_mixed_state_is_fixed() {
        let clock = RandomClock::exponential(1.0, 8).unwrap();
        let h1 = HermitianMatrix::sigma_x();
        let h2 = HermitianMatrix::diagonal(&[1.0, 0.0]);
        let obs = [HermitianMatrix::sigma_z(), HermitianMatrix::identity(2), HermitianMatrix::diagonal(&[0.3, -2.0])];
        let r = cesaro_density(&h1, &h2, &clock, &DensityMatrix::maximally_mixed(2), &obs, 100.0, 0).unwrap();
        for e in &r.entries {
            assert!(e.abs_error < 1e-12, "{e:?}");
        }
    }
}
