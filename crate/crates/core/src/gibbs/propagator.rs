//! The memory propagator `W(s) = ∫₀^∞ e^{τA} C_f(τ + s) dτ` and the
//! stationary covariances it produces under smooth forcing.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{DrivenSystem, Kernel, StationaryCovariance};
use crate::error::{Error, Result};
use crate::linalg::UnitRule;

const NODES: usize = 16;
/// Relative size of the neglected tail of the integral.
pub const TAIL_TOL: f64 = 1e-14;
/// Relative change between two panel widths accepted as converged.
pub const REFINE_TOL: f64 = 1e-12;
const MAX_REFINEMENTS: usize = 8;
const MAX_PANELS: usize = 2_000_000;

/// Diagnostics of one evaluation of `W(s)`.
#[derive(Debug, Clone, Serialize)]
pub struct PropagatorInfo {
    pub horizon: f64,
    pub panel_width: f64,
    pub panels: usize,
    /// Largest sampled `‖e^{τA}‖_F`, used as the transient bound.
    pub transient_bound: f64,
    pub refinement_change: f64,
}

/// `e^{xA}` for each Gauss node `x` of a panel of the given width.
struct PanelRule {
    width: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    node_exps: Vec<DMatrix<f64>>,
    step: DMatrix<f64>,
}

impl PanelRule {
    fn new(a: &DMatrix<f64>, rule: &UnitRule, width: f64) -> Self {
        PanelRule {
            width,
            nodes: rule.nodes.iter().map(|x| x * width).collect(),
            weights: rule.weights.iter().map(|w| w * width).collect(),
            node_exps: rule.nodes.iter().map(|x| (a * (x * width)).exp()).collect(),
            step: (a * width).exp(),
        }
    }
}

/// One quadrature pass with nominal panel width `h`.
fn integrate(system: &DrivenSystem, s: f64, h: f64) -> Result<(DMatrix<f64>, PropagatorInfo)> {
    let a = &system.drift;
    let kernel = &system.kernel;
    let dim = a.nrows();
    let rule = UnitRule::new(NODES);
    let standard = PanelRule::new(a, &rule, h);
    let mut breaks: Vec<f64> = kernel.breakpoints().into_iter().map(|b| b - s).filter(|&t| t > 0.0).collect();
    breaks.reverse();
    let mut w = DMatrix::zeros(dim, dim);
    let mut p = DMatrix::identity(dim, dim);
    let mut tau = 0.0;
    let mut transient: f64 = p.norm();
    let mut panels = 0;
    loop {
        while breaks.last().is_some_and(|&b| b <= tau + 1e-12 * h) {
            breaks.pop();
        }
        let end = breaks.last().map_or(tau + h, |&b| b.min(tau + h));
        let width = end - tau;
        let odd;
        let panel = if (width - h).abs() <= 1e-12 * h {
            &standard
        } else {
            odd = PanelRule::new(a, &rule, width);
            &odd
        };
        let mut local = DMatrix::<f64>::zeros(dim, dim);
        for ((x, wt), e) in panel.nodes.iter().zip(&panel.weights).zip(&panel.node_exps) {
            let c = kernel.eval(tau + x + s);
            if c != 0.0 {
                let k = wt * c;
                local.zip_apply(e, |l, x| *l += k * x);
            }
        }
        w += &p * local;
        p = &p * &panel.step;
        tau += panel.width;
        panels += 1;
        transient = transient.max(p.norm());
        let tail = kernel.tail_mass(tau + s);
        if tail == 0.0 || transient * tail <= TAIL_TOL * w.norm() {
            break;
        }
        if panels >= MAX_PANELS || !p.norm().is_finite() {
            return Err(Error::KernelNotIntegrable { horizon: tau });
        }
    }
    Ok((w, PropagatorInfo { horizon: tau, panel_width: h, panels, transient_bound: transient, refinement_change: 0.0 }))
}

/// `W(s)` by composite 16-point Gauss–Legendre panels aligned with the
/// kernel's breakpoints, halving the panel width until two passes agree.
///
/// Each panel costs two products: `W += e^{τA}·Σᵢ wᵢC_f(τ+xᵢ+s)e^{xᵢA}` and
/// `e^{(τ+h)A} = e^{τA}e^{hA}`. The horizon is reached when the transient
/// bound times `∫_{τ+s}^∞ |C_f|` falls below `TAIL_TOL·‖W‖`.
pub fn memory_propagator_with_info(system: &DrivenSystem, s: f64) -> Result<(DMatrix<f64>, PropagatorInfo)> {
    if system.kernel.is_white() {
        return Err(Error::UnsupportedKernel { expected: "smooth" });
    }
    system.require_stable()?;
    let dim = system.drift.nrows();
    if system.kernel.tail_mass(f64::NEG_INFINITY) == 0.0 || system.kernel.tail_mass(s) == 0.0 {
        let info = PropagatorInfo { horizon: 0.0, panel_width: 0.0, panels: 0, transient_bound: 1.0, refinement_change: 0.0 };
        return Ok((DMatrix::zeros(dim, dim), info));
    }
    let rate = system.drift.norm().max(1e-300);
    let mut h = 0.5 * system.kernel.time_scale().min(1.0 / rate).min(1.0);
    let (mut prev, _) = integrate(system, s, h)?;
    for _ in 0..MAX_REFINEMENTS {
        h *= 0.5;
        let (next, mut info) = integrate(system, s, h)?;
        let change = (&next - &prev).norm() / next.norm().max(f64::MIN_POSITIVE);
        info.refinement_change = change;
        if change <= REFINE_TOL {
            return Ok((next, info));
        }
        prev = next;
    }
    let (w, mut info) = integrate(system, s, h)?;
    info.refinement_change = (&w - &prev).norm() / w.norm().max(f64::MIN_POSITIVE);
    Ok((w, info))
}

pub fn memory_propagator(system: &DrivenSystem, s: f64) -> Result<DMatrix<f64>> {
    Ok(memory_propagator_with_info(system, s)?.0)
}

/// `C_{G,1} = diag(V⁻¹, E)`.
fn unit_gibbs(system: &DrivenSystem) -> DMatrix<f64> {
    let n = system.dim();
    let mut c = DMatrix::zeros(2 * n, 2 * n);
    c.view_mut((0, 0), (n, n)).copy_from(&system.hamiltonian.inverse());
    for i in 0..n {
        c[(n + i, n + i)] = 1.0;
    }
    c
}

/// `E[ψ(t)ψ(t+s)ᵀ]` in the stationary regime:
/// `(1/2α)·(W(s)C_{G,1} + C_{G,1}W(−s)ᵀ)`.
///
/// The factor `1/(2α)` comes from `AC_{G,1} + C_{G,1}Aᵀ = −2α·e_{p₁}e_{p₁}ᵀ`;
/// with white noise (`W(0) = σ²E/2`) it reproduces the Gibbs matrix.
///
/// White noise has no memory, so there the lag acts through the drift alone:
/// `C e^{sAᵀ}` for `s ≥ 0` and `e^{−sA}C` for `s < 0`.
pub fn lagged_covariance(system: &DrivenSystem, s: f64) -> Result<DMatrix<f64>> {
    if system.kernel.is_white() {
        let c = super::stationary_white(system)?.matrix;
        return Ok(if s >= 0.0 { &c * (system.drift.transpose() * s).exp() } else { (&system.drift * -s).exp() * &c });
    }
    let cg = unit_gibbs(system);
    let w_plus = memory_propagator(system, s)?;
    let w_minus = if s == 0.0 { w_plus.clone() } else { memory_propagator(system, -s)? };
    Ok((w_plus * &cg + cg * w_minus.transpose()) / (2.0 * system.alpha))
}

/// Stationary covariance `C_ψ(0)` under smooth forcing.
pub fn stationary_colored(system: &DrivenSystem) -> Result<StationaryCovariance> {
    let c = lagged_covariance(system, 0.0)?;
    Ok(StationaryCovariance::new((&c + c.transpose()) * 0.5))
}

/// Stationary covariance for any kernel: exact Gibbs matrix for white noise,
/// the memory formula otherwise.
pub fn stationary_covariance(system: &DrivenSystem) -> Result<StationaryCovariance> {
    match system.kernel {
        Kernel::White { .. } => super::stationary_white(system),
        _ => stationary_colored(system),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::build_driven;
    use crate::linalg::gauss_legendre;
    use crate::phase::QuadraticHamiltonian;

    fn one(w2: f64, alpha: f64, kernel: Kernel) -> DrivenSystem {
        let h = QuadraticHamiltonian::new(&DMatrix::from_element(1, 1, w2)).unwrap();
        build_driven(&h, alpha, kernel).unwrap()
    }

    #[test]
    fn zero_kernel_gives_zero() {
        let s = one(1.0, 0.5, Kernel::zero());
        assert_eq!(memory_propagator(&s, 0.0).unwrap().amax(), 0.0);
        assert_eq!(stationary_colored(&s).unwrap().matrix.amax(), 0.0);
    }

    #[test]
    fn vanishes_beyond_compact_support() {
        let s = one(1.0, 0.5, Kernel::CubicBSpline { amplitude: 1.0, width: 0.5 });
        assert_eq!(memory_propagator(&s, 1.2).unwrap().amax(), 0.0);
        assert!(memory_propagator(&s, 0.8).unwrap().amax() > 0.0);
    }

    #[test]
    fn white_lags_are_stationary() {
        let h = QuadraticHamiltonian::new(&DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0])).unwrap();
        let sys = build_driven(&h, 0.7, Kernel::White { sigma2: 1.3 }).unwrap();
        let c0 = lagged_covariance(&sys, 0.0).unwrap();
        assert_eq!(c0, crate::gibbs::stationary_white(&sys).unwrap().matrix);
        let plus = lagged_covariance(&sys, 0.8).unwrap();
        let minus = lagged_covariance(&sys, -0.8).unwrap();
        assert!((plus.transpose() - minus).amax() < 1e-12);
    }

    #[test]
    fn white_kernel_is_rejected() {
        let s = one(1.0, 0.5, Kernel::White { sigma2: 1.0 });
        assert!(matches!(memory_propagator(&s, 0.0), Err(Error::UnsupportedKernel { .. })));
    }

    #[test]
    fn matches_fine_riemann_sum_for_gaussian() {
        let s = one(1.0, 0.5, Kernel::default_gaussian());
        let w = memory_propagator(&s, 0.0).unwrap();
        // Independent oracle: midpoint rule with an exact per-step exponential
        // on a much finer grid, extrapolated (Richardson) to remove O(h²).
        let riemann = |h: f64| {
            let steps = (12.0 / h) as usize;
            let e = (&s.drift * h).exp();
            let mut p = (&s.drift * (0.5 * h)).exp();
            let mut acc = DMatrix::zeros(2, 2);
            for k in 0..steps {
                let t = (k as f64 + 0.5) * h;
                acc += &p * ((-t * t).exp() * h);
                p = &p * &e;
            }
            acc
        };
        let coarse = riemann(2e-3);
        let fine = riemann(1e-3);
        let extrapolated = (&fine * 4.0 - coarse) / 3.0;
        assert!((w - extrapolated).amax() < 1e-8);
    }

    #[test]
    fn additive_in_the_kernel() {
        let h = QuadraticHamiltonian::new(&DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0])).unwrap();
        let k1 = Kernel::default_gaussian();
        let k2 = Kernel::CubicBSpline { amplitude: 0.7, width: 1.3 };
        let w = |k: Kernel| memory_propagator(&build_driven(&h, 0.9, k).unwrap(), 0.3).unwrap();
        let sum = w(Kernel::Sum(vec![k1.clone(), k2.clone()]));
        let parts = w(k1) + w(k2);
        assert!((&sum - &parts).amax() <= 1e-9 * parts.amax());
    }

    #[test]
    fn one_particle_closed_form_at_zero_lag() {
        // For N = 1 with C_f = e^{−r|t|}, E[p²] has the closed form below
        // (stationary OU forcing of a damped oscillator, by residues).
        let (w2, alpha, r) = (1.7_f64, 0.6_f64, 1.3_f64);
        let s = one(w2, alpha, Kernel::Exponential { amplitude: 1.0, rate: r });
        let c = stationary_colored(&s).unwrap();
        // Spectral route: E[p²] = ∫ a(λ) λ² / |ω² − λ² + iαλ|² dλ, integrated
        // numerically over the real line.
        let (x, wts) = gauss_legendre(40);
        let mut pp = 0.0;
        let mut qq = 0.0;
        let panels = 4000;
        let lmax = 400.0;
        let hh = 2.0 * lmax / panels as f64;
        for p in 0..panels {
            let a0 = -lmax + p as f64 * hh;
            for (xi, wi) in x.iter().zip(&wts) {
                let l = a0 + 0.5 * hh * (xi + 1.0);
                let dens = r / (std::f64::consts::PI * (r * r + l * l));
                let denom = (w2 - l * l).powi(2) + (alpha * l).powi(2);
                pp += 0.5 * hh * wi * dens * l * l / denom;
                qq += 0.5 * hh * wi * dens / denom;
            }
        }
        assert!((c.pp(0, 0) - pp).abs() < 1e-6 * pp, "{} vs {pp}", c.pp(0, 0));
        assert!((c.qq(0, 0) - qq).abs() < 1e-6 * qq, "{} vs {qq}", c.qq(0, 0));
    }

    /// An exponential kernel is the autocovariance of an OU process, so the
    /// augmented state `(ψ, f)` is a linear SDE whose lagged covariance
    /// `P e^{sMᵀ}` follows from one Lyapunov solve.
    #[test]
    fn lagged_covariance_matches_augmented_ou() {
        let (amp, rate, alpha) = (0.7, 0.9, 0.6);
        let h = QuadraticHamiltonian::new(&DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0])).unwrap();
        let sys = build_driven(&h, alpha, Kernel::Exponential { amplitude: amp, rate }).unwrap();
        let d = 4;
        let mut m = DMatrix::zeros(d + 1, d + 1);
        m.view_mut((0, 0), (d, d)).copy_from(&sys.drift);
        m[(sys.forced_index(), d)] = 1.0;
        m[(d, d)] = -rate;
        let mut q = DMatrix::zeros(d + 1, d + 1);
        q[(d, d)] = 2.0 * rate * amp;
        let id = DMatrix::<f64>::identity(d + 1, d + 1);
        let lyap = id.kronecker(&m) + m.kronecker(&id);
        let vec_q = nalgebra::DVector::from_column_slice((-q).as_slice());
        let p = DMatrix::from_column_slice(d + 1, d + 1, lyap.lu().solve(&vec_q).unwrap().as_slice());
        for s in [0.0, 0.4, 1.7] {
            let exact = (&p * (m.transpose() * s).exp()).view((0, 0), (d, d)).clone_owned();
            let got = lagged_covariance(&sys, s).unwrap();
            assert!((&got - &exact).amax() < 1e-8 * exact.amax(), "s = {s}: {got} vs {exact}");
        }
    }
}
