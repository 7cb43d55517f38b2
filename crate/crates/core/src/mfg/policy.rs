use crate::error::{Error, Result};

/// π(a | j, t) for t < H, stored as `[wait, move]` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    horizon: usize,
    states: usize,
    rows: Vec<[f64; 2]>,
}

impl PolicyTable {
    pub fn uniform(horizon: usize, states: usize) -> Self {
        PolicyTable {
            horizon,
            states,
            rows: vec![[0.5, 0.5]; horizon * states],
        }
    }

    /// Policy that moves with probability `move_prob(t, j)`.
    pub fn from_fn(horizon: usize, states: usize, move_prob: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut rows = Vec::with_capacity(horizon * states);
        for t in 0..horizon {
            for j in 0..states {
                let m = move_prob(t, j);
                if !(m.is_finite() && (0.0..=1.0).contains(&m)) {
                    return Err(Error::invalid(format!("move probability {m} at (t={t}, j={j})")));
                }
                rows.push([1.0 - m, m]);
            }
        }
        Ok(PolicyTable { horizon, states, rows })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn row(&self, t: usize, j: usize) -> [f64; 2] {
        self.rows[t * self.states + j]
    }

    pub fn move_prob(&self, t: usize, j: usize) -> f64 {
        self.row(t, j)[1]
    }

    /// All rows at time `t`, indexed by j.
    pub fn slice(&self, t: usize) -> &[[f64; 2]] {
        &self.rows[t * self.states..(t + 1) * self.states]
    }

    pub(crate) fn set_row(&mut self, t: usize, j: usize, row: [f64; 2]) {
        self.rows[t * self.states + j] = row;
    }

    pub fn max_abs_diff(&self, other: &PolicyTable) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max)
    }

    /// (1 - weight) * self + weight * target, row by row.
    pub(crate) fn blend(&self, target: &PolicyTable, weight: f64) -> PolicyTable {
        let rows = self
            .rows
            .iter()
            .zip(&target.rows)
            .map(|(a, b)| {
                let m = (1.0 - weight) * a[1] + weight * b[1];
                [1.0 - m, m]
            })
            .collect();
        PolicyTable {
            horizon: self.horizon,
            states: self.states,
            rows,
        }
    }
}

/// Temperature-scaled SoftMax over the two action values, max-subtracted.
pub fn softmax_policy(q: [f64; 2], tau: f64) -> Result<[f64; 2]> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!("temperature must be positive, got {tau}")));
    }
    if !q.iter().all(|v| v.is_finite()) {
        return Err(Error::numerical(format!("non-finite action values {q:?}")));
    }
    let top = q[0].max(q[1]);
    let e0 = ((q[0] - top) / tau).exp();
    let e1 = ((q[1] - top) / tau).exp();
    let z = e0 + e1;
    let pm = e1 / z;
    Ok([1.0 - pm, pm])
}
