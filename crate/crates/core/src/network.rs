//! Communication graphs and doubly stochastic mixing matrices.
//!
//! Agents are indexed `0..n`. A [`MixingMatrix`] is always symmetric, so its
//! contraction factor `rho = ‖W − (1/n)𝟙𝟙ᵀ‖` is the largest absolute
//! eigenvalue of the deflated matrix and power iteration suffices.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::rng::{RngStream, SetupPurpose};
use crate::stack::{self, AgentStack};

/// Resampling budget for the random geometric construction.
pub const GEOMETRIC_RETRY_BUDGET: u32 = 1000;

/// Tolerance on row and column sums.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("invalid agent count {n}: need at least {min}")]
    InvalidSize { n: usize, min: usize },
    #[error("invalid angle threshold {0}: need 0 < max_angle <= pi")]
    InvalidAngle(f64),
    #[error("no connected geometric graph after {attempts} attempts")]
    ConstructionFailed { attempts: u32 },
    #[error("graph is not connected")]
    Disconnected,
    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(usize, usize),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("shape mismatch: expected {expected} rows, got {got}")]
    Shape { expected: usize, got: usize },
}

/// Undirected simple graph on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    neighbors: Vec<BTreeSet<usize>>,
}

impl Graph {
    /// Graph from an explicit edge list. Duplicate edges collapse; self-loops
    /// and out-of-range endpoints are rejected. Connectivity is not required
    /// here (see [`is_connected`]).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, NetworkError> {
        if n == 0 {
            return Err(NetworkError::InvalidSize { n, min: 1 });
        }
        let mut neighbors = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a == b || a >= n || b >= n {
                return Err(NetworkError::InvalidEdge(a, b));
            }
            neighbors[a].insert(b);
            neighbors[b].insert(a);
        }
        Ok(Self { n, neighbors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[i].iter().copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].contains(&j)
    }

    /// Edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }
}

/// Cycle `0 – 1 – … – (n−1) – 0`. For `n = 2` this is the single edge.
pub fn build_ring(n: usize) -> Result<Graph, NetworkError> {
    if n < 2 {
        return Err(NetworkError::InvalidSize { n, min: 2 });
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::from_edges(n, &edges)
}

/// Path `0 – 1 – … – (n−1)`.
pub fn build_path(n: usize) -> Result<Graph, NetworkError> {
    if n < 2 {
        return Err(NetworkError::InvalidSize { n, min: 2 });
    }
    let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
    Graph::from_edges(n, &edges)
}

pub fn build_complete(n: usize) -> Result<Graph, NetworkError> {
    if n < 2 {
        return Err(NetworkError::InvalidSize { n, min: 2 });
    }
    let edges: Vec<_> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    Graph::from_edges(n, &edges)
}

/// Random geometric graph on the unit 2-sphere: `n` uniform points, an edge
/// whenever the great-circle distance is strictly below `max_angle`. The
/// whole point set is redrawn until the graph is connected, at most
/// [`GEOMETRIC_RETRY_BUDGET`] times.
pub fn build_geometric_sphere(
    n: usize,
    max_angle: f64,
    stream: RngStream,
) -> Result<Graph, NetworkError> {
    build_geometric_sphere_with_budget(n, max_angle, stream, GEOMETRIC_RETRY_BUDGET)
}

pub fn build_geometric_sphere_with_budget(
    n: usize,
    max_angle: f64,
    stream: RngStream,
    budget: u32,
) -> Result<Graph, NetworkError> {
    if n < 2 {
        return Err(NetworkError::InvalidSize { n, min: 2 });
    }
    if !(max_angle > 0.0 && max_angle <= PI) {
        return Err(NetworkError::InvalidAngle(max_angle));
    }
    for attempt in 0..budget {
        let mut rng = stream.with_iteration(attempt).generator();
        let points: Vec<[f64; 3]> = (0..n).map(|_| sphere_point(&mut rng)).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let cos = stack::dot(&points[i], &points[j]).clamp(-1.0, 1.0);
                if cos.acos() < max_angle {
                    edges.push((i, j));
                }
            }
        }
        let graph = Graph::from_edges(n, &edges)?;
        if is_connected(&graph) {
            return Ok(graph);
        }
    }
    Err(NetworkError::ConstructionFailed { attempts: budget })
}

fn sphere_point<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let p: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let r = stack::norm(&p);
        if r > 0.0 {
            return [p[0] / r, p[1] / r, p[2] / r];
        }
    }
}

/// Breadth-first reachability from vertex 0.
pub fn is_connected(g: &Graph) -> bool {
    let mut seen = vec![false; g.n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for u in g.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                count += 1;
                queue.push_back(u);
            }
        }
    }
    count == g.n
}

/// Power-iteration settings for [`spectral_gap`].
#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub max_iter: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            rel_tol: 1e-10,
            seed: 0,
        }
    }
}

/// Symmetric doubly stochastic consensus matrix with its contraction factor.
#[derive(Debug, Clone)]
pub struct MixingMatrix {
    n: usize,
    dense: Vec<f64>,
    // Nonzero entries per row, diagonal included.
    sparse: Vec<Vec<(usize, f64)>>,
    rho: f64,
}

impl MixingMatrix {
    /// Validates a row-major `n × n` matrix against the consensus-matrix
    /// requirements and computes `rho`.
    pub fn from_dense(n: usize, dense: Vec<f64>, power: PowerIteration) -> Result<Self, NetworkError> {
        let rho = spectral_gap(n, &dense, power)?;
        if dense.iter().any(|&w| w < 0.0) {
            return Err(NetworkError::InvalidMatrix("negative entry".into()));
        }
        if (0..n).any(|i| dense[i * n + i] <= 0.0) {
            return Err(NetworkError::InvalidMatrix("non-positive diagonal".into()));
        }
        if rho >= 1.0 {
            return Err(NetworkError::InvalidMatrix(format!(
                "rho = {rho} is not below 1 (disconnected support)"
            )));
        }
        let sparse = (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|j| {
                        let w = dense[i * n + j];
                        (w != 0.0).then_some((j, w))
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            n,
            dense,
            sparse,
            rho,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dense[i * self.n + j]
    }

    pub fn dense(&self) -> &[f64] {
        &self.dense
    }

    /// True iff the off-diagonal support equals the edge set of `g`.
    pub fn matches_graph(&self, g: &Graph) -> bool {
        g.n() == self.n
            && (0..self.n).all(|i| {
                (0..self.n).all(|j| i == j || (self.get(i, j) > 0.0) == g.has_edge(i, j))
            })
    }
}

/// Metropolis–Hastings weights `W_ij = 1/(1 + max(deg_i, deg_j))` on edges,
/// with the diagonal absorbing the remainder of each row.
pub fn metropolis_weights(g: &Graph) -> Result<MixingMatrix, NetworkError> {
    metropolis_weights_with(g, PowerIteration::default())
}

pub fn metropolis_weights_with(g: &Graph, power: PowerIteration) -> Result<MixingMatrix, NetworkError> {
    if !is_connected(g) {
        return Err(NetworkError::Disconnected);
    }
    MixingMatrix::from_dense(g.n(), metropolis_dense(g), power)
}

/// `(I + W_metropolis) / 2`.
pub fn lazy_metropolis_weights(g: &Graph) -> Result<MixingMatrix, NetworkError> {
    lazy_metropolis_weights_with(g, PowerIteration::default())
}

pub fn lazy_metropolis_weights_with(
    g: &Graph,
    power: PowerIteration,
) -> Result<MixingMatrix, NetworkError> {
    if !is_connected(g) {
        return Err(NetworkError::Disconnected);
    }
    let n = g.n();
    let mut dense = metropolis_dense(g);
    for i in 0..n {
        for j in 0..n {
            let identity = if i == j { 1.0 } else { 0.0 };
            dense[i * n + j] = 0.5 * (identity + dense[i * n + j]);
        }
    }
    MixingMatrix::from_dense(n, dense, power)
}

fn metropolis_dense(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut dense = vec![0.0; n * n];
    for i in 0..n {
        let mut off = 0.0;
        for j in g.neighbors(i) {
            let w = 1.0 / (1.0 + g.degree(i).max(g.degree(j)) as f64);
            dense[i * n + j] = w;
            off += w;
        }
        dense[i * n + i] = 1.0 - off;
    }
    dense
}

/// Largest absolute eigenvalue of `W − (1/n)𝟙𝟙ᵀ` for symmetric doubly
/// stochastic `W` (row-major `n × n`).
///
/// Iterates on the square of the deflated matrix so that eigenvalue pairs
/// `±rho` (bipartite supports) do not stall convergence.
pub fn spectral_gap(n: usize, w: &[f64], power: PowerIteration) -> Result<f64, NetworkError> {
    if n == 0 || w.len() != n * n {
        return Err(NetworkError::InvalidMatrix(format!(
            "expected {} entries, got {}",
            n * n,
            w.len()
        )));
    }
    for i in 0..n {
        let row: f64 = (0..n).map(|j| w[i * n + j]).sum();
        let col: f64 = (0..n).map(|j| w[j * n + i]).sum();
        if (row - 1.0).abs() > STOCHASTIC_TOL || (col - 1.0).abs() > STOCHASTIC_TOL {
            return Err(NetworkError::InvalidMatrix(format!(
                "row/column {i} sums to {row}/{col}"
            )));
        }
        for j in 0..i {
            if (w[i * n + j] - w[j * n + i]).abs() > STOCHASTIC_TOL {
                return Err(NetworkError::InvalidMatrix(format!("not symmetric at ({i}, {j})")));
            }
        }
    }
    if n == 1 {
        return Ok(0.0);
    }

    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out: Vec<f64> = (0..n).map(|i| stack::dot(&w[i * n..(i + 1) * n], v)).collect();
        deflate(&mut out);
        out
    };

    let mut rng = RngStream::setup(power.seed, SetupPurpose::PowerIteration).generator();
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    deflate(&mut v);
    if !normalize(&mut v) {
        return Ok(0.0);
    }

    // Rayleigh quotient of B² at unit v is ‖Bv‖².
    let mut estimate = 0.0;
    for _ in 0..power.max_iter {
        let bv = apply(&v);
        let next = stack::norm_sq(&bv);
        if next == 0.0 {
            return Ok(0.0);
        }
        let converged = (next - estimate).abs() <= power.rel_tol * next;
        estimate = next;
        if converged {
            break;
        }
        v = apply(&bv);
        if !normalize(&mut v) {
            break;
        }
    }
    Ok(estimate.sqrt())
}

fn deflate(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

fn normalize(v: &mut [f64]) -> bool {
    let r = stack::norm(v);
    if r == 0.0 || !r.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= r);
    true
}

/// Row `i` of the output is `Σ_j W_ij · row_j(input)`.
pub fn consensus_apply(w: &MixingMatrix, vectors: &AgentStack) -> Result<AgentStack, NetworkError> {
    if vectors.rows() != w.n() {
        return Err(NetworkError::Shape {
            expected: w.n(),
            got: vectors.rows(),
        });
    }
    let mut out = AgentStack::zeros(vectors.rows(), vectors.dim());
    consensus_apply_into(w, vectors, &mut out);
    Ok(out)
}

/// Unchecked variant for the iteration kernels; shapes must already agree.
pub(crate) fn consensus_apply_into(w: &MixingMatrix, input: &AgentStack, out: &mut AgentStack) {
    for (i, row) in w.sparse.iter().enumerate() {
        let target = out.row_mut(i);
        target.iter_mut().for_each(|v| *v = 0.0);
        for &(j, wij) in row {
            for (t, x) in target.iter_mut().zip(input.row(j)) {
                *t += wij * x;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ring_edges() {
        assert_eq!(build_ring(3).unwrap().edges(), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(build_ring(2).unwrap().edges(), vec![(0, 1)]);
        let g = build_ring(4).unwrap();
        assert_eq!(g.edges().len(), 4);
        assert!((0..4).all(|i| g.degree(i) == 2));
        assert!(matches!(build_ring(1), Err(NetworkError::InvalidSize { .. })));
    }

    #[test]
    fn connectivity() {
        assert!(is_connected(&build_ring(4).unwrap()));
        let split = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(!is_connected(&split));
        assert!(is_connected(&Graph::from_edges(1, &[]).unwrap()));
        assert_eq!(metropolis_weights(&split).unwrap_err(), NetworkError::Disconnected);
    }

    #[test]
    fn self_loops_rejected() {
        assert_eq!(
            Graph::from_edges(3, &[(1, 1)]).unwrap_err(),
            NetworkError::InvalidEdge(1, 1)
        );
    }

    #[test]
    fn metropolis_on_path() {
        let w = metropolis_weights(&build_path(3).unwrap()).unwrap();
        let third = 1.0 / 3.0;
        let expected = [2.0 * third, third, 0.0, third, third, third, 0.0, third, 2.0 * third];
        for (a, b) in w.dense().iter().zip(expected) {
            assert!(close(*a, b, 1e-15));
        }
    }

    #[test]
    fn metropolis_on_ring_four() {
        let w = metropolis_weights(&build_ring(4).unwrap()).unwrap();
        assert!(close(w.get(0, 0), 1.0 / 3.0, 1e-15));
        assert!(close(w.get(0, 1), 1.0 / 3.0, 1e-15));
        assert!(close(w.rho(), 1.0 / 3.0, 1e-9));
    }

    #[test]
    fn complete_two_is_averaging() {
        let w = metropolis_weights(&build_complete(2).unwrap()).unwrap();
        assert_eq!(w.dense(), &[0.5, 0.5, 0.5, 0.5]);
        assert_eq!(w.rho(), 0.0);
    }

    #[test]
    fn lazy_metropolis_values() {
        let w = lazy_metropolis_weights(&build_ring(4).unwrap()).unwrap();
        assert!(close(w.get(0, 0), 2.0 / 3.0, 1e-15));
        assert!(close(w.get(0, 1), 1.0 / 6.0, 1e-15));
        assert!(close(w.rho(), 2.0 / 3.0, 1e-9));

        let w = lazy_metropolis_weights(&build_ring(2).unwrap()).unwrap();
        assert_eq!(w.dense(), &[0.75, 0.25, 0.25, 0.75]);
        assert!(close(w.rho(), 0.5, 1e-9));
    }

    #[test]
    fn spectral_gap_edge_cases() {
        let n = 5;
        let avg = vec![1.0 / n as f64; n * n];
        assert!(spectral_gap(n, &avg, PowerIteration::default()).unwrap() < 1e-12);

        let mut identity = vec![0.0; n * n];
        (0..n).for_each(|i| identity[i * n + i] = 1.0);
        let rho = spectral_gap(n, &identity, PowerIteration::default()).unwrap();
        assert!(close(rho, 1.0, 1e-12));
        assert!(matches!(
            MixingMatrix::from_dense(n, identity, PowerIteration::default()),
            Err(NetworkError::InvalidMatrix(_))
        ));

        let skewed = vec![0.9, 0.1, 0.2, 0.8];
        assert!(spectral_gap(2, &skewed, PowerIteration::default()).is_err());
    }

    #[test]
    fn consensus_apply_examples() {
        let w = metropolis_weights(&build_complete(2).unwrap()).unwrap();
        let x = AgentStack::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let out = consensus_apply(&w, &x).unwrap();
        assert_eq!(out.to_rows(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);

        let w = metropolis_weights(&build_ring(4).unwrap()).unwrap();
        let same = AgentStack::broadcast(4, &[0.25, -3.0, 7.5]);
        let out = consensus_apply(&w, &same).unwrap();
        for (a, b) in out.as_slice().iter().zip(same.as_slice()) {
            assert!(close(*a, *b, 1e-14));
        }
        assert!(matches!(
            consensus_apply(&w, &AgentStack::zeros(3, 1)),
            Err(NetworkError::Shape { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn geometric_full_angle_two_points() {
        for seed in 0..5 {
            let g = build_geometric_sphere(2, PI, RngStream::setup(seed, SetupPurpose::Graph)).unwrap();
            assert_eq!(g.edges(), vec![(0, 1)]);
        }
    }

    #[test]
    fn geometric_is_deterministic() {
        let s = RngStream::setup(42, SetupPurpose::Graph);
        let a = build_geometric_sphere(50, PI / 4.0, s).unwrap();
        let b = build_geometric_sphere(50, PI / 4.0, s).unwrap();
        assert!(is_connected(&a));
        assert_eq!(a, b);
    }

    #[test]
    fn geometric_tiny_angle_exhausts_budget() {
        let err = build_geometric_sphere_with_budget(5, 0.01, RngStream::setup(3, SetupPurpose::Graph), 50)
            .unwrap_err();
        assert_eq!(err, NetworkError::ConstructionFailed { attempts: 50 });
        assert!(matches!(
            build_geometric_sphere(5, 0.0, RngStream::setup(3, SetupPurpose::Graph)),
            Err(NetworkError::InvalidAngle(_))
        ));
    }
}
