use crate::algorithms::Kernel;

/// Metrics at one iteration. Evaluated with the exact oracles, so recording
/// a row never adds to the query count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    /// Cumulative per-agent function-value queries.
    pub m: u64,
    /// `f(x̄(t))`.
    pub f_bar: f64,
    /// `‖∇f(x̄(t))‖²`.
    pub grad_norm_sq: f64,
    /// `(1/n) Σ ‖x^i(t) − x̄(t)‖²`.
    pub consensus_err: f64,
    /// `(1/n) Σ ‖s^i(t) − ∇f(x̄(t−1))‖²`; absent without gradient tracking
    /// and at `t = 0`.
    pub track_err: Option<f64>,
    /// Step size and radius used to reach this row; absent at `t = 0`.
    pub eta_t: Option<f64>,
    pub u_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub kernel: Kernel,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn new(kernel: Kernel) -> Self {
        Self { kernel, rows: Vec::new() }
    }

    pub fn push(&mut self, row: TraceRow) {
        debug_assert!(self.rows.last().is_none_or(|last| last.t < row.t));
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Rows with `1 ≤ t`, i.e. everything after the initial row.
    pub fn steps(&self) -> &[TraceRow] {
        match self.rows.first() {
            Some(first) if first.t == 0 => &self.rows[1..],
            _ => &self.rows,
        }
    }

    /// Last row whose query count does not exceed `m`.
    pub fn at_queries(&self, m: u64) -> Option<&TraceRow> {
        self.rows.iter().take_while(|r| r.m <= m).last()
    }
}
