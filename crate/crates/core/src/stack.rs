//! Row-major storage for one `d`-vector per agent.

use std::ops::{Index, IndexMut};

/// `n` stacked `d`-vectors, one row per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentStack {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl AgentStack {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            rows,
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    /// Builds a stack from row vectors. Returns `None` when the rows are
    /// ragged or empty.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let dim = rows.first()?.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        let data = rows.iter().flatten().copied().collect();
        Some(Self {
            rows: rows.len(),
            dim,
            data,
        })
    }

    /// Every row a copy of `row`.
    pub fn broadcast(rows: usize, row: &[f64]) -> Self {
        let mut data = Vec::with_capacity(rows * row.len());
        for _ in 0..rows {
            data.extend_from_slice(row);
        }
        Self {
            rows,
            dim: row.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(<[f64]>::to_vec).collect()
    }

    /// Componentwise mean over rows.
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for row in self.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let scale = 1.0 / self.rows as f64;
        mean.iter_mut().for_each(|m| *m *= scale);
        mean
    }

    /// `self - 1 ⊗ mean(self)`.
    pub fn deviation(&self) -> AgentStack {
        let mean = self.mean();
        let mut out = self.clone();
        for i in 0..self.rows {
            for (v, m) in out.row_mut(i).iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        out
    }

    /// Frobenius norm of the whole stack.
    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    /// `(1/n) Σ_i ‖row_i − mean‖²`.
    pub fn consensus_error(&self) -> f64 {
        distance_sq_to_mean(self, &self.mean())
    }

    /// First `(row, column)` holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|k| (k / self.dim, k % self.dim))
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &AgentStack) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }
}

impl Index<(usize, usize)> for AgentStack {
    type Output = f64;

    fn index(&self, (i, k): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + k]
    }
}

impl IndexMut<(usize, usize)> for AgentStack {
    fn index_mut(&mut self, (i, k): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + k]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `(1/n) Σ_i ‖row_i − center‖²`.
pub fn distance_sq_to_mean(stack: &AgentStack, center: &[f64]) -> f64 {
    stack.iter_rows().map(|r| distance_sq(r, center)).sum::<f64>() / stack.rows() as f64
}
