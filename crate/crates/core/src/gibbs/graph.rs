//! Finite graphs carrying local interaction matrices.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Undirected graph on vertices `0..n` (loops implicit).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalGraph {
    n: usize,
    adjacency: Vec<Vec<usize>>,
}

impl LocalGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, size: n });
                }
            }
            if a != b && !adjacency[a].contains(&b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(LocalGraph { n, adjacency })
    }

    /// Path `0 − 1 − … − (n−1)`.
    pub fn chain(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges)
    }

    /// Vertex 0 joined to every other vertex.
    pub fn star(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Self::from_edges(n, &edges)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n).flat_map(|i| self.adjacency[i].iter().filter(move |&&j| j > i).map(move |&j| (i, j))).collect()
    }

    /// Breadth-first distances from `source`; `None` for unreachable vertices.
    pub fn distances_from(&self, source: usize) -> Result<Vec<Option<usize>>> {
        if source >= self.n {
            return Err(Error::VertexOutOfRange { vertex: source, size: self.n });
        }
        let mut dist = vec![None; self.n];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].expect("queued vertices are reached");
            for &u in &self.adjacency[v] {
                if dist[u].is_none() {
                    dist[u] = Some(d + 1);
                    queue.push_back(u);
                }
            }
        }
        Ok(dist)
    }

    pub fn is_connected(&self) -> bool {
        self.distances_from(0).map(|d| d.iter().all(Option::is_some)).unwrap_or(false)
    }

    pub fn require_connected(&self) -> Result<()> {
        if self.is_connected() {
            Ok(())
        } else {
            Err(Error::Disconnected)
        }
    }

    /// All-pairs graph metric `r(i, j)`.
    pub fn distance_matrix(&self) -> Result<Vec<Vec<usize>>> {
        self.require_connected()?;
        (0..self.n)
            .map(|i| Ok(self.distances_from(i)?.into_iter().map(|d| d.expect("connected")).collect()))
            .collect()
    }

    /// Largest `r(i, j)` over entries with `V(i, j) ≠ 0`.
    pub fn locality_radius(&self, v: &DMatrix<f64>) -> Result<usize> {
        if v.nrows() != self.n || v.ncols() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: v.nrows() });
        }
        let r = self.distance_matrix()?;
        let mut radius = 0;
        for i in 0..self.n {
            for j in 0..self.n {
                if v[(i, j)] != 0.0 {
                    radius = radius.max(r[i][j]);
                }
            }
        }
        Ok(radius)
    }

    /// `V(i, j) = 0` whenever `r(i, j) > γ`.
    pub fn is_gamma_local(&self, v: &DMatrix<f64>, gamma: usize) -> Result<bool> {
        Ok(self.locality_radius(v)? <= gamma)
    }

    /// Nearest-neighbour interaction `V(i, i) = diag`, `V(i, j) = off` on edges.
    pub fn nearest_neighbour_matrix(&self, diag: f64, off: f64) -> DMatrix<f64> {
        let mut v = DMatrix::from_diagonal_element(self.n, self.n, diag);
        for (i, j) in self.edges() {
            v[(i, j)] = off;
            v[(j, i)] = off;
        }
        v
    }

    /// Parses `chain:N`, `star:N`, `complete:N`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, n) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("graph spec `{spec}` lacks `kind:N`")))?;
        let n: usize = n.trim().parse().map_err(|_| Error::Parse(format!("graph spec `{spec}`: bad size")))?;
        match kind.trim() {
            "chain" => Self::chain(n),
            "star" => Self::star(n),
            "complete" => Self::complete(n),
            _ => Err(Error::Parse(format!("unrecognised graph `{spec}`"))),
        }
    }
}
