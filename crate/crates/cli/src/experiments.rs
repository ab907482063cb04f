//! One function per subcommand: load inputs, call the library, collect the
//! payload and its tolerance checks.

use std::path::Path;
use std::time::Instant;

use ergodyn_core::clock::{ClockLaw, RandomClock};
use ergodyn_core::flip::{ergodicity_experiment, ErgodicityConfig};
use ergodyn_core::gibbs::{
    build_driven, lagged_covariance, sample_local_hamiltonians, sde_oracle, stationary_covariance,
    thermo_scan, Kernel, LocalGraph, NearestNeighbourTemplate, SdeConfig,
};
use ergodyn_core::linalg::CVector;
use ergodyn_core::matrix_io::{format_csv, read_complex_matrix, read_real_matrix};
use ergodyn_core::observable::Observable;
use ergodyn_core::phase::{covering_bound, is_v_plus, is_v_plus_spectral, mixing_subspace, QuadraticHamiltonian};
use ergodyn_core::quantum::{
    cesaro_density, check_explicit_criterion, haar_moment_test, lie_closure, pure_state_switch, sample_generic_pairs,
    switch_samples, DensityMatrix, HermitianMatrix,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::envelope::{Check, ResultEnvelope};
use crate::error::{CliError, Result};

/// Payload, checks and an optional CSV rendering of the main table.
pub struct Outcome {
    pub checks: Vec<Check>,
    pub payload: Value,
    pub csv: Option<String>,
}

impl Outcome {
    fn new(payload: impl Serialize, checks: Vec<Check>) -> Result<Self> {
        Ok(Outcome { checks, payload: serde_json::to_value(payload)?, csv: None })
    }

    fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }
}

/// The rendered result and the bytes to write for the requested format.
pub struct Rendered {
    pub envelope: ResultEnvelope,
    pub bytes: Vec<u8>,
}

pub fn run(experiment: &Experiment) -> Result<Rendered> {
    let start = Instant::now();
    let outcome = match experiment {
        Experiment::FlipSim(a) => flip_sim(a)?,
        Experiment::QcCheck(a) => qc_check(a)?,
        Experiment::QcSim(a) => qc_sim(a)?,
        Experiment::Cov(a) => cov(a)?,
        Experiment::CovVerify(a) => cov_verify(a)?,
        Experiment::ThermoScan(a) => thermo(a)?,
        Experiment::Ldim(a) => ldim(a)?,
        Experiment::GenericSample(a) => generic_sample(a)?,
    };
    let mut envelope =
        ResultEnvelope::new(experiment.name(), serde_json::to_value(experiment)?, outcome.checks, outcome.payload);
    envelope.wall_clock_seconds = start.elapsed().as_secs_f64();
    let bytes = match experiment.output().effective_format() {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&envelope)?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => outcome
            .csv
            .ok_or_else(|| CliError::config("format", format!("`{}` has no CSV output", experiment.name())))?
            .into_bytes(),
    };
    Ok(Rendered { envelope, bytes })
}

fn hamiltonian(path: &Path) -> Result<QuadraticHamiltonian> {
    let v = read_real_matrix(require_path("matrix", path)?)?;
    QuadraticHamiltonian::new(&v).map_err(|e| CliError::config("matrix", format!("{}: {e}", path.display())))
}

fn hermitian(key: &str, path: &Path) -> Result<HermitianMatrix> {
    let m = read_complex_matrix(require_path(key, path)?)?;
    HermitianMatrix::new(m).map_err(|e| CliError::config(key, format!("{}: {e}", path.display())))
}

fn kernel(spec: &str) -> Result<Kernel> {
    Kernel::parse(spec).map_err(|e| CliError::config("kernel", e.to_string()))
}

fn clock(spec: &str) -> Result<ClockLaw> {
    ClockLaw::parse(spec).map_err(|e| CliError::config("clock", e.to_string()))
}

fn flip_sim(a: &FlipSimArgs) -> Result<Outcome> {
    let h = hamiltonian(&a.matrix)?;
    let observables = Observable::parse_list(&a.observables).map_err(|e| CliError::config("observables", e.to_string()))?;
    let config = ErgodicityConfig {
        energy: a.energy,
        clock: clock(&a.clock)?,
        horizon: a.time,
        replicas: a.replicas,
        seed: a.seed,
        reference_samples: a.reference_samples,
        threshold: a.threshold,
        ..ErgodicityConfig::default()
    };
    let report = ergodicity_experiment(&h, &observables, &config)?;
    let checks = report
        .observables
        .iter()
        .map(|o| Check::at_most(format!("rel_error {}", o.observable.label()), o.rel_error, a.threshold))
        .collect();
    let mut csv = String::from("observable,replica,time_average,reference,rel_error\n");
    for o in &report.observables {
        for (r, t) in o.time_averages.iter().enumerate() {
            csv += &format!("{},{r},{t:?},{:?},{:?}\n", o.observable.label(), o.reference, o.rel_error);
        }
    }
    Ok(Outcome::new(&report, checks)?.with_csv(csv))
}

fn qc_check(a: &QcCheckArgs) -> Result<Outcome> {
    let h1 = hermitian("h1", &a.h1)?;
    let h2 = hermitian("h2", &a.h2)?;
    if h1.dim() != h2.dim() {
        return Err(CliError::config("h2", format!("dimension {} differs from h1 ({})", h2.dim(), h1.dim())));
    }
    let closure = lie_closure(&h1, &h2)?;
    let criterion = check_explicit_criterion(&h1, &h2)?;
    let n = h1.dim();
    let payload = json!({
        "dim": n,
        "closure": closure,
        "full_dim": n * n,
        "u_controllable": closure.dim == n * n,
        "closure_defect": closure.closure_defect(&h1, &h2),
        "criterion": criterion,
    });
    Outcome::new(payload, vec![])
}

fn basis_projector(n: usize, k: usize) -> HermitianMatrix {
    let mut d = vec![0.0; n];
    d[k] = 1.0;
    HermitianMatrix::diagonal(&d)
}

fn qc_sim(a: &QcSimArgs) -> Result<Outcome> {
    let h1 = hermitian("h1", &a.h1)?;
    let h2 = hermitian("h2", &a.h2)?;
    if h1.dim() != h2.dim() {
        return Err(CliError::config("h2", format!("dimension {} differs from h1 ({})", h2.dim(), h1.dim())));
    }
    let n = h1.dim();
    let clock = RandomClock::new(clock(&a.clock)?, a.seed)?;
    let samples = switch_samples(&h1, &h2, &clock, a.steps, a.runs)?;
    let moments = haar_moment_test(&samples)?;
    let projectors: Vec<HermitianMatrix> = (0..n).map(|k| basis_projector(n, k)).collect();
    let e1 = CVector::from_fn(n, |i, _| Complex64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0));
    let mixed = cesaro_density(&h1, &h2, &clock, &DensityMatrix::pure(&e1)?, &projectors, a.horizon, 0)?;
    let pure = pure_state_switch(&h1, &h2, &clock, &e1, &projectors, a.horizon, 0)?;
    let worst = |r: &ergodyn_core::quantum::CesaroReport| r.entries.iter().map(|e| e.abs_error).fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("haar max |z|", moments.max_abs_z, a.z_threshold),
        Check::at_most("density cesaro error", worst(&mixed), a.cesaro_tolerance),
        Check::at_most("pure-state cesaro error", worst(&pure), a.cesaro_tolerance),
    ];
    let closure_dim = lie_closure(&h1, &h2)?.dim;
    let payload = json!({
        "dim": n,
        "closure_dim": closure_dim,
        "u_controllable": closure_dim == n * n,
        "moments": moments,
        "cesaro_observables": (1..=n).map(|k| format!("P_e{k}")).collect::<Vec<_>>(),
        "cesaro_density": mixed,
        "cesaro_pure_state": pure,
    });
    Outcome::new(payload, checks)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn cov(a: &CovArgs) -> Result<Outcome> {
    let h = hamiltonian(&a.matrix)?;
    let system = build_driven(&h, a.alpha, kernel(&a.kernel)?)?;
    let c = if a.lag == 0.0 { stationary_covariance(&system)?.matrix } else { lagged_covariance(&system, a.lag)? };
    let n = h.dim();
    let cross = c.view((0, n), (n, n)).amax().max(c.view((n, 0), (n, n)).amax());
    let payload = json!({
        "dim": n,
        "lag": a.lag,
        "l0_dim": system.l0_dim,
        "spectral_abscissa": system.spectral_abscissa,
        "matrix": rows(&c),
        "max_abs_cross_block": cross,
    });
    Ok(Outcome::new(payload, vec![])?.with_csv(format_csv(&c)))
}

#[derive(Serialize)]
struct EntryError {
    row: usize,
    col: usize,
    analytic: f64,
    simulated: f64,
    std_error: f64,
    rel_error: f64,
}

/// Entries compared in `cov-verify`: the diagonal and every off-diagonal
/// entry above this fraction of the largest one.
const SIGNIFICANT: f64 = 1e-2;

fn cov_verify(a: &CovVerifyArgs) -> Result<Outcome> {
    let h = hamiltonian(&a.matrix)?;
    let system = build_driven(&h, a.alpha, kernel(&a.kernel)?)?;
    let analytic = stationary_covariance(&system)?;
    let cfg = SdeConfig { horizon: a.time, dt: a.dt, paths: a.paths, seed: a.seed, frequencies: a.frequencies };
    let sim = sde_oracle(&system, &cfg)?;
    let d = analytic.matrix.nrows();
    let floor = SIGNIFICANT * analytic.matrix.amax();
    let mut entries = Vec::new();
    for i in 0..d {
        for j in i..d {
            let x = analytic.matrix[(i, j)];
            if i == j || x.abs() >= floor {
                let y = sim.covariance.matrix[(i, j)];
                entries.push(EntryError {
                    row: i,
                    col: j,
                    analytic: x,
                    simulated: y,
                    std_error: sim.std_error[(i, j)],
                    rel_error: (y - x).abs() / x.abs(),
                });
            }
        }
    }
    let worst = entries.iter().map(|e| e.rel_error).fold(0.0, f64::max);
    let checks = vec![Check::at_most("max rel_error", worst, a.tolerance)];
    let mut csv = String::from("row,col,analytic,simulated,std_error,rel_error\n");
    for e in &entries {
        csv += &format!("{},{},{:?},{:?},{:?},{:?}\n", e.row, e.col, e.analytic, e.simulated, e.std_error, e.rel_error);
    }
    let payload = json!({
        "analytic": rows(&analytic.matrix),
        "simulated": rows(&sim.covariance.matrix),
        "std_error": rows(&sim.std_error),
        "entries": entries,
        "burn_in": sim.burn_in,
    });
    Ok(Outcome::new(payload, checks)?.with_csv(csv))
}

/// `kind:N1,N2,...` into one graph per size.
fn graph_family(spec: &str) -> Result<Vec<LocalGraph>> {
    let bad = |m: String| CliError::config("graph", m);
    let (kind, sizes) = spec.split_once(':').ok_or_else(|| bad(format!("`{spec}` lacks `kind:N1,N2,...`")))?;
    sizes
        .split(',')
        .map(|s| LocalGraph::parse(&format!("{}:{}", kind.trim(), s.trim())).map_err(|e| bad(e.to_string())))
        .collect()
}

/// `i,j` with 1-based labels, returned 0-based.
fn probe(spec: &str) -> Result<(usize, usize)> {
    let bad = || CliError::config("probe", format!("`{spec}` is not a pair `i,j` of 1-based vertices"));
    let (i, j) = spec.split_once(',').ok_or_else(bad)?;
    let i: usize = i.trim().parse().map_err(|_| bad())?;
    let j: usize = j.trim().parse().map_err(|_| bad())?;
    if i == 0 || j == 0 {
        return Err(bad());
    }
    Ok((i - 1, j - 1))
}

fn thermo(a: &ThermoScanArgs) -> Result<Outcome> {
    let graphs = graph_family(&a.graph)?;
    let probes: Vec<(usize, usize)> = a.probes.iter().map(|p| probe(p)).collect::<Result<_>>()?;
    let template = NearestNeighbourTemplate { diag: a.diag, off: a.off };
    let report = thermo_scan(&graphs, template, a.alpha, &kernel(&a.kernel)?, &probes)?;
    let label = |(i, j): (usize, usize)| format!("{},{}", i + 1, j + 1);
    let mut csv = String::from("stage,vertices,driven,perturbation,probe,c_pp,c_qq,cv_pp,cv_qq\n");
    let mut stages = Vec::new();
    for s in &report.stages {
        let probes: Vec<Value> = s
            .probes
            .iter()
            .map(|p| {
                csv += &format!(
                    "{},{},{},{:?},\"{}\",{:?},{:?},{:?},{:?}\n",
                    s.stage,
                    s.vertices,
                    s.driven + 1,
                    s.perturbation,
                    label(p.pair),
                    p.c_pp,
                    p.c_qq,
                    p.cv_pp,
                    p.cv_qq
                );
                json!({ "probe": label(p.pair), "c_pp": p.c_pp, "c_qq": p.c_qq, "cv_pp": p.cv_pp, "cv_qq": p.cv_qq })
            })
            .collect();
        stages.push(json!({
            "stage": s.stage,
            "vertices": s.vertices,
            "driven_vertex": s.driven + 1,
            "perturbation": s.perturbation,
            "probes": probes,
        }));
    }
    let convergence: Vec<Value> = report
        .convergence
        .iter()
        .map(|c| {
            json!({
                "probe": label(c.pair),
                "pp_differences": c.pp_differences,
                "qq_differences": c.qq_differences,
                "pp_strictly_decreasing": c.pp_strictly_decreasing,
            })
        })
        .collect();
    let checks = report
        .convergence
        .iter()
        .map(|c| {
            // Observed: largest ratio of consecutive differences; below 1 means decreasing.
            let ratio = c.pp_differences.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
            Check { name: format!("pp differences decrease at {}", label(c.pair)), observed: ratio, tolerance: 1.0, pass: c.pp_strictly_decreasing }
        })
        .collect();
    let payload = json!({ "vertex_labels": "1-based", "stages": stages, "convergence": convergence });
    Ok(Outcome::new(payload, checks)?.with_csv(csv))
}

fn ldim(a: &LdimArgs) -> Result<Outcome> {
    let h = hamiltonian(&a.matrix)?;
    let system = build_driven(&h, a.alpha, Kernel::White { sigma2: 1.0 })?;
    let m = mixing_subspace(&h);
    let payload = json!({
        "dim": h.dim(),
        "l0_dim": system.l0_dim,
        "mixing_dim": m.dim,
        "v_plus": is_v_plus(&h),
        "v_plus_spectral": is_v_plus_spectral(&h),
        "frequencies": h.frequencies().as_slice(),
        "overlaps": m.overlaps.as_slice(),
        "covering_bound": covering_bound(&h).ok(),
        "alpha": a.alpha,
        "spectral_abscissa": system.spectral_abscissa,
        "stable": system.is_stable(),
    });
    Outcome::new(payload, vec![])
}

fn generic_sample(a: &GenericSampleArgs) -> Result<Outcome> {
    match (a.dim, &a.graph) {
        (Some(n), None) => {
            let r = sample_generic_pairs(n, a.samples, a.seed)?;
            let checks = vec![Check::at_least("controllable fraction", r.fraction, 1.0)];
            Outcome::new(&r, checks)
        }
        (None, Some(spec)) => {
            let g = LocalGraph::parse(spec).map_err(|e| CliError::config("graph", e.to_string()))?;
            let r = sample_local_hamiltonians(&g, a.samples, a.seed)?;
            let checks = vec![Check::at_least("fraction with L0 = {0}", r.fraction, 1.0)];
            Outcome::new(&r, checks)
        }
        _ => Err(CliError::config("dim", "give exactly one of `dim` (Hermitian pairs) or `graph` (local Hamiltonians)")),
    }
}
