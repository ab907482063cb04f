//! The velocity-flip process: exact Hamiltonian flow interrupted at random
//! times by `p₁ ↦ −p₁`.

use rayon::prelude::*;
use serde::Serialize;

use crate::clock::{ClockLaw, RandomClock};
use crate::error::{Error, Result};
use crate::linalg::UnitRule;
use crate::observable::Observable;
use crate::phase::{
    covering_bound, is_v_plus, rational_independence, sample_microcanonical, NormalState, PhaseVector,
    QuadraticHamiltonian, RelationReport, DEFAULT_MAX_COEFF, DEFAULT_RELATION_TOL,
};
use crate::rng::stream_rng;

/// Gauss–Legendre points per quadrature panel.
pub const QUADRATURE_POINTS: usize = 16;
/// Flow segments longer than this are split into several panels.
pub const MAX_PANEL: f64 = 1.0;

/// `p₁ ↦ −p₁`.
pub fn velocity_flip(psi: &PhaseVector) -> PhaseVector {
    let mut out = psi.clone();
    if out.dim() > 0 {
        out.p[0] = -out.p[0];
    }
    out
}

/// State right after the flip at `time` (or the initial state at time 0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlipEvent {
    pub time: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlipTrajectory {
    pub events: Vec<FlipEvent>,
    /// Energy of the initial state, conserved along the path.
    pub energy: f64,
    pub clock: RandomClock,
    pub horizon: f64,
}

impl FlipTrajectory {
    /// State at time `t ∈ [0, horizon]`.
    pub fn state_at(&self, h: &QuadraticHamiltonian, t: f64) -> Result<PhaseVector> {
        let k = self.events.partition_point(|e| e.time <= t).max(1) - 1;
        let e = &self.events[k];
        h.flow(&PhaseVector::from_slices(&e.q, &e.p)?, t - e.time)
    }
}

/// Deterministic walk over the flow segments of one replica, in normal
/// coordinates so that the flip is a reflection `p̃ ↦ p̃ − 2p₁β`.
struct SegmentWalker<'a, I: Iterator<Item = f64>> {
    h: &'a QuadraticHamiltonian,
    beta: Vec<f64>,
    ticks: I,
    state: NormalState,
    time: f64,
    horizon: f64,
}

/// One deterministic flow piece `[start, start + duration]`.
struct Segment {
    start: f64,
    duration: f64,
    initial: NormalState,
    /// State right after the closing flip; `None` when the segment ends at
    /// the horizon.
    after_flip: Option<NormalState>,
}

impl<I: Iterator<Item = f64>> Iterator for SegmentWalker<'_, I> {
    type Item = Segment;

    fn next(&mut self) -> Option<Segment> {
        if self.time >= self.horizon {
            return None;
        }
        let tau = self.ticks.next().expect("clock is infinite");
        let remaining = self.horizon - self.time;
        let (duration, flipped) = if tau < remaining { (tau, true) } else { (remaining, false) };
        let initial = self.state.clone();
        let mut next = self.h.advance_normal(&self.state, duration);
        if flipped {
            let p1: f64 = self.beta.iter().zip(next.p.iter()).map(|(b, p)| b * p).sum();
            for (pk, b) in next.p.iter_mut().zip(&self.beta) {
                *pk -= 2.0 * p1 * b;
            }
        }
        let seg = Segment { start: self.time, duration, initial, after_flip: flipped.then(|| next.clone()) };
        self.state = next;
        self.time = if flipped { self.time + duration } else { self.horizon };
        Some(seg)
    }
}

fn walker<'a>(
    h: &'a QuadraticHamiltonian,
    psi0: &PhaseVector,
    clock: &RandomClock,
    stream: u64,
    horizon: f64,
) -> Result<SegmentWalker<'a, crate::clock::Ticks>> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("time horizon must be positive, got {horizon}")));
    }
    Ok(SegmentWalker {
        h,
        beta: h.overlaps().iter().copied().collect(),
        ticks: clock.ticks(stream),
        state: h.to_normal(psi0)?,
        time: 0.0,
        horizon,
    })
}

/// Runs replica `stream` of the flip process up to time `horizon`.
pub fn simulate_flip_stream(
    h: &QuadraticHamiltonian,
    psi0: &PhaseVector,
    clock: &RandomClock,
    horizon: f64,
    stream: u64,
) -> Result<FlipTrajectory> {
    let energy = h.energy(psi0)?;
    let mut events = vec![FlipEvent { time: 0.0, q: psi0.q.iter().copied().collect(), p: psi0.p.iter().copied().collect() }];
    for seg in walker(h, psi0, clock, stream, horizon)? {
        if let Some(state) = seg.after_flip {
            let psi = h.from_normal(&state);
            events.push(FlipEvent {
                time: seg.start + seg.duration,
                q: psi.q.iter().copied().collect(),
                p: psi.p.iter().copied().collect(),
            });
        }
    }
    Ok(FlipTrajectory { events, energy, clock: *clock, horizon })
}

/// Runs the flip process (replica stream 0) up to time `horizon`.
pub fn simulate_flip(
    h: &QuadraticHamiltonian,
    psi0: &PhaseVector,
    clock: &RandomClock,
    horizon: f64,
) -> Result<FlipTrajectory> {
    simulate_flip_stream(h, psi0, clock, horizon, 0)
}

/// `(1/T)∫₀ᵀ f(ψ(t)) dt` for every observable, along replica `stream`.
pub fn time_averages_stream(
    h: &QuadraticHamiltonian,
    psi0: &PhaseVector,
    clock: &RandomClock,
    horizon: f64,
    observables: &[Observable],
    stream: u64,
) -> Result<Vec<f64>> {
    for f in observables {
        f.check_dim(h.dim())?;
    }
    let rule = UnitRule::new(QUADRATURE_POINTS);
    let mut sums = vec![0.0; observables.len()];
    for seg in walker(h, psi0, clock, stream, horizon)? {
        let panels = (seg.duration / MAX_PANEL).ceil().max(1.0) as usize;
        let width = seg.duration / panels as f64;
        for k in 0..panels {
            let a = k as f64 * width;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let psi = h.from_normal(&h.advance_normal(&seg.initial, a + x * width));
                for (s, f) in sums.iter_mut().zip(observables) {
                    *s += w * width * f.eval(h, &psi);
                }
            }
        }
    }
    Ok(sums.into_iter().map(|s| s / horizon).collect())
}

pub fn time_averages(
    h: &QuadraticHamiltonian,
    psi0: &PhaseVector,
    clock: &RandomClock,
    horizon: f64,
    observables: &[Observable],
) -> Result<Vec<f64>> {
    time_averages_stream(h, psi0, clock, horizon, observables, 0)
}

pub fn time_average(
    h: &QuadraticHamiltonian,
    psi0: &PhaseVector,
    clock: &RandomClock,
    horizon: f64,
    f: &Observable,
) -> Result<f64> {
    Ok(time_averages(h, psi0, clock, horizon, std::slice::from_ref(f))?[0])
}

/// Monte-Carlo microcanonical means and their standard errors.
pub fn microcanonical_reference(
    h: &QuadraticHamiltonian,
    energy: f64,
    observables: &[Observable],
    samples: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if samples < 2 {
        return Err(Error::TooFewSamples { required: 2, found: samples });
    }
    let mut rng = stream_rng(seed, u64::MAX);
    let mut sum = vec![0.0; observables.len()];
    let mut sum_sq = vec![0.0; observables.len()];
    for _ in 0..samples {
        let psi = sample_microcanonical(h, energy, &mut rng)?;
        for (k, f) in observables.iter().enumerate() {
            let v = f.eval(h, &psi);
            sum[k] += v;
            sum_sq[k] += v * v;
        }
    }
    let n = samples as f64;
    Ok(sum
        .iter()
        .zip(&sum_sq)
        .map(|(s, s2)| {
            let mean = s / n;
            let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
            (mean, (var / n).sqrt())
        })
        .collect())
}

/// Where each replica starts.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// The same state for every replica; its own energy is used.
    Given(PhaseVector),
    /// An independent microcanonical draw per replica.
    RandomMicrocanonical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicityConfig {
    pub energy: f64,
    pub clock: ClockLaw,
    pub horizon: f64,
    pub replicas: usize,
    pub seed: u64,
    pub initial: InitialCondition,
    pub reference_samples: usize,
    /// Largest accepted relative deviation.
    pub threshold: f64,
}

impl Default for ErgodicityConfig {
    fn default() -> Self {
        ErgodicityConfig {
            energy: 1.0,
            clock: ClockLaw::default(),
            horizon: 1e5,
            replicas: 8,
            seed: 0,
            initial: InitialCondition::RandomMicrocanonical,
            reference_samples: 1_000_000,
            threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableReport {
    pub observable: Observable,
    /// One entry per replica, ordered by replica index.
    pub time_averages: Vec<f64>,
    pub reference: f64,
    pub reference_std_error: f64,
    /// Worst deviation over replicas, relative to [`ObservableReport::scale`].
    pub rel_error: f64,
    /// `|reference|`, or the energy per degree of freedom when the reference
    /// is (close to) zero.
    pub scale: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErgodicityDiagnostics {
    pub v_plus: bool,
    pub covering_bound: Option<u64>,
    pub independence_certificate: Option<RelationReport>,
    pub condition_d: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErgodicityReport {
    pub observables: Vec<ObservableReport>,
    pub diagnostics: ErgodicityDiagnostics,
    pub energy: f64,
    pub horizon: f64,
    pub replicas: usize,
    pub threshold: f64,
    pub pass: bool,
}

pub fn ergodicity_diagnostics(h: &QuadraticHamiltonian, clock: &ClockLaw) -> ErgodicityDiagnostics {
    let freqs: Vec<f64> = h.frequencies().iter().copied().collect();
    ErgodicityDiagnostics {
        v_plus: is_v_plus(h),
        covering_bound: covering_bound(h).ok(),
        independence_certificate: rational_independence(&freqs, DEFAULT_MAX_COEFF, DEFAULT_RELATION_TOL).ok(),
        condition_d: clock.satisfies_condition_d(),
    }
}

/// Compares flip-process time averages with microcanonical averages over
/// independent replicas.
pub fn ergodicity_experiment(
    h: &QuadraticHamiltonian,
    observables: &[Observable],
    config: &ErgodicityConfig,
) -> Result<ErgodicityReport> {
    if config.replicas == 0 {
        return Err(Error::InvalidArgument("at least one replica is required".into()));
    }
    let clock = RandomClock::new(config.clock, config.seed)?;
    let energy = match &config.initial {
        InitialCondition::Given(psi) => h.energy(psi)?,
        InitialCondition::RandomMicrocanonical => config.energy,
    };
    if !(energy > 0.0) {
        return Err(Error::NonPositiveEnergy(energy));
    }
    let per_replica: Vec<Vec<f64>> = (0..config.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let psi0 = match &config.initial {
                InitialCondition::Given(psi) => psi.clone(),
                InitialCondition::RandomMicrocanonical => {
                    sample_microcanonical(h, energy, &mut stream_rng(config.seed, (1 << 32) + r))?
                }
            };
            time_averages_stream(h, &psi0, &clock, config.horizon, observables, r)
        })
        .collect::<Result<_>>()?;
    let reference = microcanonical_reference(h, energy, observables, config.reference_samples, config.seed)?;
    let floor = energy / h.dim() as f64;
    let reports: Vec<ObservableReport> = observables
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let (mean, se) = reference[k];
            let scale = if mean.abs() > 1e-3 * floor { mean.abs() } else { floor };
            let averages: Vec<f64> = per_replica.iter().map(|v| v[k]).collect();
            let rel_error = averages.iter().map(|a| (a - mean).abs() / scale).fold(0.0, f64::max);
            ObservableReport {
                observable: f.clone(),
                time_averages: averages,
                reference: mean,
                reference_std_error: se,
                rel_error,
                scale,
                pass: rel_error <= config.threshold,
            }
        })
        .collect();
    Ok(ErgodicityReport {
        pass: reports.iter().all(|r| r.pass),
        observables: reports,
        diagnostics: ergodicity_diagnostics(h, &config.clock),
        energy,
        horizon: config.horizon,
        replicas: config.replicas,
        threshold: config.threshold,
    })
}
