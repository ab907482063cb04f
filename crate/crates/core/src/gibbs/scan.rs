//! Locality studies on graphs: remainder decay away from the driven vertex,
//! genericity of `L₀ = {0}`, and growing truncations.

use nalgebra::DMatrix;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use super::{build_driven, c_v_matrix, stationary_covariance, DrivenSystem, Kernel, LocalGraph, StationaryCovariance};
use crate::error::{Error, Result};
use crate::phase::{mixing_subspace, QuadraticHamiltonian};
use crate::rng::stream_rng;

/// `order[k]` is the graph vertex placed at internal index `k`; index 0 is
/// the driven coordinate.
fn permute(v: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    let n = order.len();
    DMatrix::from_fn(n, n, |i, j| v[(order[i], order[j])])
}

fn inverse_order(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; order.len()];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    pos
}

/// Driven system with `source` moved to internal index 0.
fn driven_at(v: &DMatrix<f64>, order: &[usize], alpha: f64, kernel: &Kernel) -> Result<DrivenSystem> {
    let h = QuadraticHamiltonian::new(&permute(v, order))?;
    build_driven(&h, alpha, kernel.clone())
}

#[derive(Debug, Clone, Serialize)]
pub struct RemainderRow {
    pub vertex: usize,
    pub distance: usize,
    /// `|Y_V(pᵢ, pᵢ)|`.
    pub y_pp: f64,
    /// `|Y_V(qᵢ, qᵢ)|`.
    pub y_qq: f64,
    pub c_pp: f64,
    pub cv_pp: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceProfile {
    pub distance: usize,
    /// `max |Y_V(pᵢ, pᵢ)|` over vertices at this distance.
    pub diag_pp: f64,
    pub diag_qq: f64,
    /// `max |Y_V(pᵢ, pⱼ)|` over pairs with `min(r(i), r(j))` equal to this distance.
    pub pair_pp: f64,
    pub pair_qq: f64,
    /// Three-point moving average of `diag_pp`.
    pub smoothed_pp: f64,
}

/// Relative level below which remainder entries are indistinguishable from
/// roundoff in `C_ψ − C_V`.
pub const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct RemainderReport {
    pub source: usize,
    pub locality_radius: usize,
    pub rows: Vec<RemainderRow>,
    pub profile: Vec<DistanceProfile>,
    /// Least-squares slope of `ln diag_pp` against distance.
    pub decay_exponent: f64,
    /// Values below `NOISE_FLOOR·max|C_ψ|` are roundoff.
    pub noise_floor: f64,
    /// Whether the smoothed profile is non-increasing until it reaches the
    /// noise floor.
    pub smoothed_monotone: bool,
}

impl RemainderReport {
    /// `smoothed_pp(0) / smoothed_pp(d)`.
    pub fn smoothed_ratio(&self, d: usize) -> Option<f64> {
        let far = self.profile.get(d)?.smoothed_pp;
        Some(self.profile.first()?.smoothed_pp / far)
    }
}

/// Tabulates `Y_V = C_ψ − C_V` against the graph distance from the driven vertex.
pub fn remainder_scan(
    graph: &LocalGraph,
    v: &DMatrix<f64>,
    alpha: f64,
    kernel: &Kernel,
    source: usize,
) -> Result<RemainderReport> {
    let n = graph.len();
    let locality_radius = graph.locality_radius(v)?;
    let dist: Vec<usize> = graph.distances_from(source)?.into_iter().map(|d| d.expect("connected")).collect();
    let order: Vec<usize> = std::iter::once(source).chain((0..n).filter(|&i| i != source)).collect();
    let pos = inverse_order(&order);
    let system = driven_at(v, &order, alpha, kernel)?;
    system.require_stable()?;
    let c = stationary_covariance(&system)?;
    let cv = c_v_matrix(&system.hamiltonian, alpha, kernel)?;
    let y = StationaryCovariance::new(&c.matrix - &cv.matrix);
    let rows: Vec<RemainderRow> = (0..n)
        .map(|i| {
            let k = pos[i];
            RemainderRow {
                vertex: i,
                distance: dist[i],
                y_pp: y.pp(k, k).abs(),
                y_qq: y.qq(k, k).abs(),
                c_pp: c.pp(k, k),
                cv_pp: cv.pp(k, k),
            }
        })
        .collect();
    let max_d = dist.iter().copied().max().unwrap_or(0);
    let mut profile: Vec<DistanceProfile> = (0..=max_d)
        .map(|d| DistanceProfile { distance: d, diag_pp: 0.0, diag_qq: 0.0, pair_pp: 0.0, pair_qq: 0.0, smoothed_pp: 0.0 })
        .collect();
    for r in &rows {
        let p = &mut profile[r.distance];
        p.diag_pp = p.diag_pp.max(r.y_pp);
        p.diag_qq = p.diag_qq.max(r.y_qq);
    }
    for i in 0..n {
        for j in 0..n {
            let d = dist[i].min(dist[j]);
            let p = &mut profile[d];
            p.pair_pp = p.pair_pp.max(y.pp(pos[i], pos[j]).abs());
            p.pair_qq = p.pair_qq.max(y.qq(pos[i], pos[j]).abs());
        }
    }
    for d in 0..=max_d {
        let lo = d.saturating_sub(1);
        let hi = (d + 1).min(max_d);
        profile[d].smoothed_pp = (lo..=hi).map(|k| profile[k].diag_pp).sum::<f64>() / (hi - lo + 1) as f64;
    }
    let noise_floor = NOISE_FLOOR * c.matrix.amax();
    let smoothed_monotone =
        profile.windows(2).all(|w| w[1].smoothed_pp <= w[0].smoothed_pp || w[0].smoothed_pp <= noise_floor);
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|p| p.diag_pp > noise_floor)
        .map(|p| (p.distance as f64, p.diag_pp.ln()))
        .collect();
    let decay_exponent = least_squares_slope(&pts);
    Ok(RemainderReport { source, locality_radius, rows, profile, decay_exponent, noise_floor, smoothed_monotone })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize)]
pub struct L0Failure {
    pub index: usize,
    pub l0_dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct L0Report {
    pub samples: usize,
    pub l0_zero: usize,
    pub fraction: f64,
    pub failures: Vec<L0Failure>,
}

/// Margin added on the diagonal beyond diagonal dominance.
pub const DOMINANCE_MARGIN: f64 = 0.1;

/// Random positive-definite `V` supported on the graph: edge weights
/// `U(−1, 1)`, `V(i, i) = Σⱼ|V(i, j)| + 0.1 + U(0, 1)`.
pub fn random_local_hamiltonian(graph: &LocalGraph, rng: &mut crate::rng::Rng) -> DMatrix<f64> {
    let n = graph.len();
    let mut v = DMatrix::<f64>::zeros(n, n);
    for (i, j) in graph.edges() {
        let w: f64 = rng.random_range(-1.0..1.0);
        v[(i, j)] = w;
        v[(j, i)] = w;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| v[(i, j)].abs()).sum();
        v[(i, i)] = off + DOMINANCE_MARGIN + rng.random::<f64>();
    }
    v
}

/// Fraction of random local Hamiltonians driven at vertex 0 with `dim L₀ = 0`.
pub fn sample_local_hamiltonians(graph: &LocalGraph, n_samples: usize, seed: u64) -> Result<L0Report> {
    graph.require_connected()?;
    if n_samples == 0 {
        return Err(Error::TooFewSamples { required: 1, found: 0 });
    }
    let dims: Vec<usize> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let v = random_local_hamiltonian(graph, &mut stream_rng(seed, k as u64));
            let h = QuadraticHamiltonian::new(&v)?;
            Ok(2 * (h.dim() - mixing_subspace(&h).dim))
        })
        .collect::<Result<_>>()?;
    let failures: Vec<L0Failure> =
        dims.iter().enumerate().filter(|(_, &d)| d != 0).map(|(index, &l0_dim)| L0Failure { index, l0_dim }).collect();
    let l0_zero = n_samples - failures.len();
    Ok(L0Report { samples: n_samples, l0_zero, fraction: l0_zero as f64 / n_samples as f64, failures })
}

/// Nearest-neighbour template restricted to each truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NearestNeighbourTemplate {
    pub diag: f64,
    pub off: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeValue {
    /// Vertex pair `(i, j)`.
    pub pair: (usize, usize),
    pub c_pp: f64,
    pub c_qq: f64,
    pub cv_pp: f64,
    pub cv_qq: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThermoStage {
    pub stage: usize,
    pub vertices: usize,
    /// Driven vertex of this truncation (the last one).
    pub driven: usize,
    /// `‖V_n − V'_n‖_∞`; zero when no perturbation was needed.
    pub perturbation: f64,
    pub probes: Vec<ProbeValue>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeConvergence {
    pub pair: (usize, usize),
    /// `|C^{(k+1)}(pᵢ,pⱼ) − C^{(k)}(pᵢ,pⱼ)|`.
    pub pp_differences: Vec<f64>,
    pub qq_differences: Vec<f64>,
    pub pp_strictly_decreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThermoReport {
    pub stages: Vec<ThermoStage>,
    pub convergence: Vec<ProbeConvergence>,
}

/// Stationary covariances on growing truncations `Λ₁ ⊂ Λ₂ ⊂ …`, each driven
/// at its last vertex, at fixed probe pairs.
///
/// Internally vertex `Nₙ − 1 − k` becomes index `k`, so the driven vertex is
/// index 0. When `L₀(Vₙ) ≠ {0}` the diagonal is shifted by distinct amounts
/// below `10⁻ⁿ` (stage `n` counted from 1).
pub fn thermo_scan(
    graphs: &[LocalGraph],
    template: NearestNeighbourTemplate,
    alpha: f64,
    kernel: &Kernel,
    probes: &[(usize, usize)],
) -> Result<ThermoReport> {
    if graphs.is_empty() {
        return Err(Error::Empty);
    }
    for w in graphs.windows(2) {
        let nested = w[1].len() > w[0].len() && w[0].edges().iter().all(|e| w[1].edges().contains(e));
        if !nested {
            return Err(Error::InvalidArgument("truncations must be strictly increasing and nested".into()));
        }
    }
    for &(i, j) in probes {
        for v in [i, j] {
            if v >= graphs[0].len() {
                return Err(Error::VertexOutOfRange { vertex: v, size: graphs[0].len() });
            }
        }
    }
    let stages: Vec<ThermoStage> = graphs
        .iter()
        .enumerate()
        .map(|(k, g)| {
            g.require_connected()?;
            let n = g.len();
            let stage = k + 1;
            let order: Vec<usize> = (0..n).rev().collect();
            let pos = inverse_order(&order);
            let mut v = g.nearest_neighbour_matrix(template.diag, template.off);
            let mut system = driven_at(&v, &order, alpha, kernel)?;
            let mut perturbation = 0.0;
            if system.l0_dim != 0 {
                let eps = 10f64.powi(-(stage as i32));
                for i in 0..n {
                    v[(i, i)] += eps * (i + 1) as f64 / (n + 1) as f64;
                }
                perturbation = eps * n as f64 / (n + 1) as f64;
                system = driven_at(&v, &order, alpha, kernel)?;
            }
            system.require_stable()?;
            let c = stationary_covariance(&system)?;
            let cv = c_v_matrix(&system.hamiltonian, alpha, kernel)?;
            let probes = probes
                .iter()
                .map(|&(i, j)| {
                    let (a, b) = (pos[i], pos[j]);
                    ProbeValue { pair: (i, j), c_pp: c.pp(a, b), c_qq: c.qq(a, b), cv_pp: cv.pp(a, b), cv_qq: cv.qq(a, b) }
                })
                .collect();
            Ok(ThermoStage { stage, vertices: n, driven: n - 1, perturbation, probes })
        })
        .collect::<Result<_>>()?;
    let convergence = probes
        .iter()
        .enumerate()
        .map(|(p, &pair)| {
            let diffs = |f: &dyn Fn(&ProbeValue) -> f64| -> Vec<f64> {
                stages.windows(2).map(|w| (f(&w[1].probes[p]) - f(&w[0].probes[p])).abs()).collect()
            };
            let pp_differences = diffs(&|v| v.c_pp);
            let qq_differences = diffs(&|v| v.c_qq);
            let pp_strictly_decreasing = pp_differences.windows(2).all(|w| w[1] < w[0]);
            ProbeConvergence { pair, pp_differences, qq_differences, pp_strictly_decreasing }
        })
        .collect();
    Ok(ThermoReport { stages, convergence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::gibbs_covariance;

    #[test]
    fn white_noise_remainder_vanishes() {
        let g = LocalGraph::chain(8).unwrap();
        let v = g.nearest_neighbour_matrix(3.0, -1.0);
        let r = remainder_scan(&g, &v, 0.7, &Kernel::White { sigma2: 1.2 }, 0).unwrap();
        assert!(r.rows.iter().all(|row| row.y_pp < 1e-12 && row.y_qq < 1e-12));
    }

    #[test]
    fn compact_kernel_remainder_decays() {
        let g = LocalGraph::chain(12).unwrap();
        let v = g.nearest_neighbour_matrix(3.0, -1.0);
        let k = Kernel::CubicBSpline { amplitude: 1.0, width: 1.0 };
        let r = remainder_scan(&g, &v, 1.0, &k, 0).unwrap();
        assert_eq!(r.locality_radius, 1);
        assert!(r.smoothed_monotone);
        assert!(r.decay_exponent < -1.0);
        assert!(r.smoothed_ratio(6).unwrap() > 1e6);
        // Relabelling the source moves the profile with it.
        let mid = remainder_scan(&g, &v, 1.0, &k, 11).unwrap();
        assert!((mid.profile[0].diag_pp - r.profile[0].diag_pp).abs() < 1e-12);
    }

    #[test]
    fn local_samples_on_small_graphs() {
        let r = sample_local_hamiltonians(&LocalGraph::chain(6).unwrap(), 50, 1).unwrap();
        assert_eq!(r.fraction, 1.0);
        let r = sample_local_hamiltonians(&LocalGraph::star(5).unwrap(), 50, 2).unwrap();
        assert_eq!(r.fraction, 1.0);
        let bad = LocalGraph::from_edges(3, &[(0, 1)]).unwrap();
        assert!(matches!(sample_local_hamiltonians(&bad, 5, 0), Err(Error::Disconnected)));
    }

    #[test]
    fn sampled_matrices_are_local_and_positive() {
        let g = LocalGraph::star(6).unwrap();
        let v = random_local_hamiltonian(&g, &mut stream_rng(4, 0));
        assert!(g.is_gamma_local(&v, 1).unwrap());
        assert!(v.clone().symmetric_eigen().eigenvalues.min() > DOMINANCE_MARGIN - 1e-12);
    }

    #[test]
    fn white_thermo_scan_is_gibbs() {
        let graphs: Vec<_> = [4, 6, 8].iter().map(|&n| LocalGraph::chain(n).unwrap()).collect();
        let t = NearestNeighbourTemplate { diag: 3.0, off: -1.0 };
        let (alpha, sigma2) = (0.5, 1.0);
        let r = thermo_scan(&graphs, t, alpha, &Kernel::White { sigma2 }, &[(0, 0), (0, 1)]).unwrap();
        for (stage, g) in r.stages.iter().zip(&graphs) {
            let h = QuadraticHamiltonian::new(&g.nearest_neighbour_matrix(3.0, -1.0)).unwrap();
            let gibbs = gibbs_covariance(&h, 2.0 * alpha / sigma2).unwrap();
            for p in &stage.probes {
                let (i, j) = p.pair;
                assert!((p.c_pp - gibbs.pp(i, j)).abs() < 1e-12);
                assert!((p.c_qq - gibbs.qq(i, j)).abs() < 1e-12);
            }
        }
        let out = thermo_scan(&graphs, t, alpha, &Kernel::White { sigma2 }, &[(0, 5)]);
        assert!(matches!(out, Err(Error::VertexOutOfRange { .. })));
    }
}
