//! Monte-Carlo integration of the driven system, used to cross-check the
//! analytic covariances.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erf_inv;

use super::scan::least_squares_slope;
use super::{DrivenSystem, Kernel, StationaryCovariance};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Rng};

/// Largest accepted `dt·ρ(A)`.
pub const MAX_STEP_RATIO: f64 = 0.1;
/// Smallest number of cosines in the synthesized forcing.
pub const MIN_FREQUENCIES: usize = 512;
const RESYNC_EVERY: usize = 1024;
/// Batches per path for the standard error (batch means).
pub const BATCHES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdeConfig {
    pub horizon: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    /// Cosines per path for smooth kernels.
    pub frequencies: usize,
}

impl Default for SdeConfig {
    fn default() -> Self {
        SdeConfig { horizon: 1e4, dt: 0.02, paths: 32, seed: 0, frequencies: MIN_FREQUENCIES }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SdeReport {
    /// Time- and path-averaged `ψψᵀ` after burn-in.
    pub covariance: StationaryCovariance,
    /// Entrywise standard error from batch means (`BATCHES` per path).
    pub std_error: DMatrix<f64>,
    pub paths: usize,
    pub horizon: f64,
    pub dt: f64,
    pub burn_in: f64,
}

impl SdeReport {
    /// `|C_sim − C| / |C|` on the diagonal.
    pub fn diagonal_relative_errors(&self, analytic: &StationaryCovariance) -> Vec<f64> {
        (0..analytic.matrix.nrows())
            .map(|i| (self.covariance.matrix[(i, i)] - analytic.matrix[(i, i)]).abs() / analytic.matrix[(i, i)].abs())
            .collect()
    }
}

fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Inverse of the one-sided spectral CDF `∫₀^λ 2a / C_f(0)`.
enum InverseCdf {
    Gaussian { scale: f64 },
    Exponential { rate: f64 },
    Table { lambda: Vec<f64>, cdf: Vec<f64> },
}

impl InverseCdf {
    fn new(kernel: &Kernel) -> Self {
        match *kernel {
            Kernel::Gaussian { scale, .. } => InverseCdf::Gaussian { scale },
            Kernel::Exponential { rate, .. } => InverseCdf::Exponential { rate },
            Kernel::CubicBSpline { width, .. } => {
                // Density ∝ sinc⁴(wλ/2); the tail beyond x = 1000 carries ~1e-10
                // of the mass.
                let (x_max, steps) = (1000.0, 200_000);
                let dx = x_max / steps as f64;
                let f = |x: f64| if x == 0.0 { 1.0 } else { (x.sin() / x).powi(4) };
                let mut cdf = vec![0.0; steps + 1];
                for k in 1..=steps {
                    let x = k as f64 * dx;
                    cdf[k] = cdf[k - 1] + 0.5 * dx * (f(x - dx) + f(x));
                }
                let total = cdf[steps];
                cdf.iter_mut().for_each(|c| *c /= total);
                let lambda = (0..=steps).map(|k| 2.0 * k as f64 * dx / width).collect();
                InverseCdf::Table { lambda, cdf }
            }
            _ => unreachable!("only single smooth components are sampled"),
        }
    }

    fn eval(&self, u: f64) -> f64 {
        match self {
            InverseCdf::Gaussian { scale } => 2.0 / scale * erf_inv(u),
            InverseCdf::Exponential { rate } => rate * (0.5 * PI * u).tan(),
            InverseCdf::Table { lambda, cdf } => {
                let k = cdf.partition_point(|&c| c < u).clamp(1, cdf.len() - 1);
                let t = (u - cdf[k - 1]) / (cdf[k] - cdf[k - 1]);
                lambda[k - 1] + t * (lambda[k] - lambda[k - 1])
            }
        }
    }
}

/// One smooth summand with its share of the cosines.
struct Component {
    variance: f64,
    count: usize,
    inverse: InverseCdf,
}

fn flatten(kernel: &Kernel, out: &mut Vec<Kernel>) {
    match kernel {
        Kernel::Sum(parts) => parts.iter().for_each(|k| flatten(k, out)),
        k if k.variance() > 0.0 => out.push(k.clone()),
        _ => {}
    }
}

/// Components with cosines split in proportion to their variance.
fn components(kernel: &Kernel, total: usize) -> Vec<Component> {
    let mut parts = Vec::new();
    flatten(kernel, &mut parts);
    let var: f64 = parts.iter().map(Kernel::variance).sum();
    parts
        .iter()
        .map(|k| Component {
            variance: k.variance(),
            count: ((total as f64 * k.variance() / var).round() as usize).max(1),
            inverse: InverseCdf::new(k),
        })
        .collect()
}

/// `f(t) = Σ_m a_m cos(λ_m t + φ_m)` with stratified frequencies
/// `λ_m = F⁻¹((m + u_m)/M)` and uniform phases, so that
/// `E f(t)f(t+s) = C_f(s)` exactly.
struct CosineForcing {
    amp: Vec<f64>,
    lambda: Vec<f64>,
    phase: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    half_cos: Vec<f64>,
    half_sin: Vec<f64>,
}

impl CosineForcing {
    fn new(components: &[Component], dt: f64, rng: &mut Rng) -> Self {
        let (mut amp, mut lambda, mut phase) = (Vec::new(), Vec::new(), Vec::new());
        for c in components {
            let a = (2.0 * c.variance / c.count as f64).sqrt();
            for m in 0..c.count {
                let u = (m as f64 + rng.random::<f64>()) / c.count as f64;
                amp.push(a);
                lambda.push(c.inverse.eval(u));
                phase.push(2.0 * PI * rng.random::<f64>());
            }
        }
        let half_cos = lambda.iter().map(|l| (0.5 * l * dt).cos()).collect();
        let half_sin = lambda.iter().map(|l| (0.5 * l * dt).sin()).collect();
        let n = amp.len();
        let mut f = CosineForcing { amp, lambda, phase, cos: vec![0.0; n], sin: vec![0.0; n], half_cos, half_sin };
        f.sync(0.0);
        f
    }

    fn sync(&mut self, t: f64) {
        for m in 0..self.amp.len() {
            let (s, c) = (self.lambda[m] * t + self.phase[m]).sin_cos();
            self.cos[m] = c;
            self.sin[m] = s;
        }
    }

    fn value(&self) -> f64 {
        self.amp.iter().zip(&self.cos).map(|(a, c)| a * c).sum()
    }

    /// Advances the phasors by `dt/2` and returns the new value.
    fn half_step(&mut self) -> f64 {
        let mut f = 0.0;
        for m in 0..self.amp.len() {
            let c = self.cos[m] * self.half_cos[m] - self.sin[m] * self.half_sin[m];
            let s = self.sin[m] * self.half_cos[m] + self.cos[m] * self.half_sin[m];
            self.cos[m] = c;
            self.sin[m] = s;
            f += self.amp[m] * c;
        }
        f
    }
}

fn matvec(a: &[f64], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..d).map(|j| a[i * d + j] * x[j]).sum();
    }
}

/// Running sums of the upper triangle of `ψψᵀ`, split into consecutive
/// batches of `per_batch` samples.
struct MomentSum {
    dim: usize,
    per_batch: usize,
    sums: Vec<Vec<f64>>,
    count: usize,
}

impl MomentSum {
    fn new(dim: usize, samples: usize) -> Self {
        let per_batch = samples.div_ceil(BATCHES).max(1);
        MomentSum { dim, per_batch, sums: Vec::new(), count: 0 }
    }

    fn add(&mut self, x: &[f64]) {
        if self.count % self.per_batch == 0 {
            self.sums.push(vec![0.0; self.dim * self.dim]);
        }
        let sum = self.sums.last_mut().expect("pushed above");
        for i in 0..self.dim {
            for j in i..self.dim {
                sum[i * self.dim + j] += x[i] * x[j];
            }
        }
        self.count += 1;
    }

    fn batch_means(&self) -> Vec<DMatrix<f64>> {
        let d = self.dim;
        self.sums
            .iter()
            .enumerate()
            .map(|(b, sum)| {
                let k = self.per_batch.min(self.count - b * self.per_batch) as f64;
                DMatrix::from_fn(d, d, |i, j| sum[i.min(j) * d + i.max(j)] / k)
            })
            .collect()
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// `e^{dtA}` in row-major order and the kick direction `e^{dtA/2}e_{p₁}`.
fn exponential_step(system: &DrivenSystem, dt: f64) -> (Vec<f64>, Vec<f64>) {
    let f = row_major(&(&system.drift * dt).exp());
    let g = (&system.drift * (0.5 * dt)).exp().column(system.forced_index()).iter().copied().collect();
    (f, g)
}

/// Exponential Euler–Maruyama with the kick at the midpoint:
/// `ψ ← e^{dtA}ψ + σ√dt·ξ·e^{dtA/2}e_{p₁}`. The drift is exact, so undamped
/// modes neither grow nor decay spuriously, and the noise covariance per step
/// is the midpoint rule for `σ²∫₀^dt e^{sA}e_{p₁}e_{p₁}ᵀe^{sAᵀ}ds`.
fn white_path(system: &DrivenSystem, sigma2: f64, config: &SdeConfig, rng: &mut Rng) -> Vec<DMatrix<f64>> {
    let d = 2 * system.dim();
    let (f, g) = exponential_step(system, config.dt);
    let kick = (sigma2 * config.dt).sqrt();
    let steps = (config.horizon / config.dt).round() as usize;
    let burn = steps / 2;
    let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
    let mut acc = MomentSum::new(d, steps - burn);
    for n in 0..steps {
        matvec(&f, &x, &mut y);
        let xi = kick * rng.sample::<f64, _>(StandardNormal);
        y.iter_mut().zip(&g).for_each(|(y, g)| *y += xi * g);
        std::mem::swap(&mut x, &mut y);
        if n >= burn {
            acc.add(&x);
        }
    }
    acc.batch_means()
}

/// Classical RK4 on `ψ' = Aψ + e_{p₁}f(t)` with a synthesized smooth forcing.
fn colored_path(system: &DrivenSystem, comps: &[Component], config: &SdeConfig, rng: &mut Rng) -> Vec<DMatrix<f64>> {
    let d = 2 * system.dim();
    let p1 = system.forced_index();
    let a = row_major(&system.drift);
    let h = config.dt;
    let mut forcing = CosineForcing::new(comps, h, rng);
    let steps = (config.horizon / h).round() as usize;
    let burn = steps / 2;
    let mut x = vec![0.0; d];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut acc = MomentSum::new(d, steps - burn);
    let mut f0 = forcing.value();
    for n in 0..steps {
        let f_half = forcing.half_step();
        let f1 = if (n + 1) % RESYNC_EVERY == 0 {
            forcing.sync((n + 1) as f64 * h);
            forcing.value()
        } else {
            forcing.half_step()
        };
        matvec(&a, &x, &mut k1);
        k1[p1] += f0;
        tmp.iter_mut().zip(&x).zip(&k1).for_each(|((t, x), k)| *t = x + 0.5 * h * k);
        matvec(&a, &tmp, &mut k2);
        k2[p1] += f_half;
        tmp.iter_mut().zip(&x).zip(&k2).for_each(|((t, x), k)| *t = x + 0.5 * h * k);
        matvec(&a, &tmp, &mut k3);
        k3[p1] += f_half;
        tmp.iter_mut().zip(&x).zip(&k3).for_each(|((t, x), k)| *t = x + h * k);
        matvec(&a, &tmp, &mut k4);
        k4[p1] += f1;
        for i in 0..d {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        f0 = f1;
        if n >= burn {
            acc.add(&x);
        }
    }
    acc.batch_means()
}

fn check_config(config: &SdeConfig) -> Result<()> {
    if !(config.horizon > 0.0 && config.dt > 0.0 && config.dt < config.horizon) {
        return Err(Error::InvalidArgument(format!("need 0 < dt < T, got dt = {}, T = {}", config.dt, config.horizon)));
    }
    if config.paths < 2 {
        return Err(Error::TooFewSamples { required: 2, found: config.paths });
    }
    Ok(())
}

/// Empirical stationary covariance from `paths` independent trajectories
/// started at rest, averaged over `[T/2, T]`.
///
/// Path `k` uses stream `k` of `seed`. Smooth kernels are synthesized as sums
/// of at least [`MIN_FREQUENCIES`] cosines.
pub fn sde_oracle(system: &DrivenSystem, config: &SdeConfig) -> Result<SdeReport> {
    check_config(config)?;
    if !(system.alpha > 0.0) {
        return Err(Error::InvalidArgument("the oracle needs positive damping".into()));
    }
    let ratio = config.dt * spectral_radius(&system.drift);
    if ratio > MAX_STEP_RATIO {
        return Err(Error::InvalidArgument(format!("dt·ρ(A) = {ratio:.3} exceeds {MAX_STEP_RATIO}")));
    }
    let comps = match system.kernel {
        Kernel::White { .. } => Vec::new(),
        ref k => components(k, config.frequencies.max(MIN_FREQUENCIES)),
    };
    let batches: Vec<Vec<DMatrix<f64>>> = (0..config.paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(config.seed, k as u64);
            match system.kernel {
                Kernel::White { sigma2 } => white_path(system, sigma2, config, &mut rng),
                _ => colored_path(system, &comps, config, &mut rng),
            }
        })
        .collect();
    // Batches have equal length up to one sample, so the plain average is the
    // time average.
    let means: Vec<DMatrix<f64>> = batches.into_iter().flatten().collect();
    let p = means.len() as f64;
    let mean = means.iter().fold(DMatrix::zeros(means[0].nrows(), means[0].ncols()), |a, m| a + m) / p;
    let var = means.iter().fold(DMatrix::zeros(mean.nrows(), mean.ncols()), |a, m| a + (m - &mean).map(|x| x * x))
        / (p - 1.0);
    Ok(SdeReport {
        covariance: StationaryCovariance::new(mean),
        std_error: var.map(|v| (v / p).sqrt()),
        paths: config.paths,
        horizon: config.horizon,
        dt: config.dt,
        burn_in: 0.5 * config.horizon,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyGrowthReport {
    pub times: Vec<f64>,
    pub mean_energy: Vec<f64>,
    /// Least-squares slope of the mean energy against time.
    pub slope: f64,
    /// `σ²/2`, from Itô's formula applied to `H`.
    pub expected_slope: f64,
    pub relative_error: f64,
}

/// Mean energy of the undamped system (`α = 0`) under white forcing,
/// started at rest and sampled at `samples` evenly spaced times.
pub fn energy_growth(system: &DrivenSystem, config: &SdeConfig, samples: usize) -> Result<EnergyGrowthReport> {
    check_config(config)?;
    let Kernel::White { sigma2 } = system.kernel else {
        return Err(Error::UnsupportedKernel { expected: "white-noise" });
    };
    if system.alpha != 0.0 {
        return Err(Error::InvalidArgument("energy growth is measured without damping".into()));
    }
    if samples < 2 {
        return Err(Error::TooFewSamples { required: 2, found: samples });
    }
    let n = system.dim();
    let d = 2 * n;
    let (f, g) = exponential_step(system, config.dt);
    let v = system.hamiltonian.matrix();
    let steps = (config.horizon / config.dt).round() as usize;
    let every = (steps / samples).max(1);
    let kick = (sigma2 * config.dt).sqrt();
    let energy = |x: &[f64]| {
        let kinetic: f64 = x[n..].iter().map(|p| p * p).sum();
        let potential: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| v[(i, j)] * x[i] * x[j]).sum();
        0.5 * (kinetic + potential)
    };
    let per_path: Vec<Vec<f64>> = (0..config.paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(config.seed, k as u64);
            let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
            let mut out = Vec::with_capacity(samples);
            for s in 1..=steps {
                matvec(&f, &x, &mut y);
                let xi = kick * rng.sample::<f64, _>(StandardNormal);
                y.iter_mut().zip(&g).for_each(|(y, g)| *y += xi * g);
                std::mem::swap(&mut x, &mut y);
                if s % every == 0 {
                    out.push(energy(&x));
                }
            }
            out
        })
        .collect();
    let len = per_path[0].len();
    let times: Vec<f64> = (1..=len).map(|s| (s * every) as f64 * config.dt).collect();
    let mean_energy: Vec<f64> =
        (0..len).map(|s| per_path.iter().map(|p| p[s]).sum::<f64>() / config.paths as f64).collect();
    let pts: Vec<(f64, f64)> = times.iter().copied().zip(mean_energy.iter().copied()).collect();
    let slope = least_squares_slope(&pts);
    let expected_slope = 0.5 * sigma2;
    Ok(EnergyGrowthReport {
        times,
        mean_energy,
        slope,
        expected_slope,
        relative_error: (slope - expected_slope).abs() / expected_slope,
    })
}
