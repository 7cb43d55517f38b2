use super::kernel::{fill_binomial, TAIL_FLOOR};
use super::params::{MfgParams, StateDistribution};
use super::policy::PolicyTable;
use super::reward::{utility_grid, MOVE, WAIT};
use crate::error::{Error, Result};

/// q(t, j, a) and v(t, j) = max_a q(t, j, a) for t = 0..=H; layer H is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionValueTable {
    horizon: usize,
    states: usize,
    q: Vec<[f64; 2]>,
    v: Vec<f64>,
}

impl ActionValueTable {
    fn zeros(horizon: usize, states: usize) -> Self {
        ActionValueTable {
            horizon,
            states,
            q: vec![[0.0; 2]; (horizon + 1) * states],
            v: vec![0.0; (horizon + 1) * states],
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn q(&self, t: usize, j: usize) -> [f64; 2] {
        self.q[t * self.states + j]
    }

    pub fn v(&self, t: usize, j: usize) -> f64 {
        self.v[t * self.states + j]
    }

    /// Maximizing action; wait wins exact ties.
    pub fn greedy_action(&self, t: usize, j: usize) -> usize {
        let q = self.q(t, j);
        if q[MOVE] > q[WAIT] {
            MOVE
        } else {
            WAIT
        }
    }
}

/// How the continuation value at (t, j) is formed from q(t, j, .).
#[derive(Clone, Copy)]
enum Continuation<'a> {
    Greedy,
    Follow(&'a PolicyTable),
}

fn backward(params: &MfgParams, peers: &PolicyTable, mode: Continuation<'_>) -> Result<ActionValueTable> {
    let (h, n) = (params.horizon, params.n);
    if peers.horizon() != h || peers.states() != n + 1 {
        return Err(Error::invalid(format!(
            "policy covers {} steps over {} states; parameters need {} over {}",
            peers.horizon(),
            peers.states(),
            h,
            n + 1
        )));
    }
    let utilities = utility_grid(params);
    let mut table = ActionValueTable::zeros(h, n + 1);
    let mut pmf = vec![0.0; n];
    for t in (0..h).rev() {
        let (now, later) = table.v.split_at_mut((t + 1) * (n + 1));
        let next_v = &later[..n + 1];
        let now_v = &mut now[t * (n + 1)..];
        for j in 0..=n {
            let support = fill_binomial(n - 1, peers.move_prob(t, j), TAIL_FLOOR, &mut pmf);
            let mut q = [0.0; 2];
            for (a, slot) in q.iter_mut().enumerate() {
                let expected: f64 = support.clone().map(|k| pmf[k] * next_v[k + a]).sum();
                *slot = utilities[j][a] + params.discount * expected;
            }
            if !(q[0].is_finite() && q[1].is_finite()) {
                return Err(Error::numerical(format!("non-finite action value at (t={t}, j={j})")));
            }
            table.q[t * (n + 1) + j] = q;
            now_v[j] = match mode {
                Continuation::Greedy => q[WAIT].max(q[MOVE]),
                Continuation::Follow(own) => {
                    let row = own.row(t, j);
                    row[WAIT] * q[WAIT] + row[MOVE] * q[MOVE]
                }
            };
        }
    }
    Ok(table)
}

/// Backward induction against peers playing `policy`:
/// q(t, j, a) = U(a, j) + δ Σ_j' Pr[j' | j, a, π(move | j, t)] v(t+1, j'), v = max_a q.
///
/// Under the binomial closure the continuation depends on the flow only
/// through the policy, so `flow` is only checked for shape.
pub fn bellman_backward(
    flow: &[StateDistribution],
    policy: &PolicyTable,
    params: &MfgParams,
) -> Result<ActionValueTable> {
    if flow.len() != params.horizon + 1 {
        return Err(Error::invalid(format!(
            "flow has {} layers, expected {}",
            flow.len(),
            params.horizon + 1
        )));
    }
    backward(params, policy, Continuation::Greedy)
}

/// Values of an agent that itself follows `own` while peers play `peers`.
pub fn policy_evaluation(params: &MfgParams, peers: &PolicyTable, own: &PolicyTable) -> Result<ActionValueTable> {
    if own.horizon() != params.horizon || own.states() != params.states() {
        return Err(Error::invalid("evaluated policy shape does not match the parameters"));
    }
    backward(params, peers, Continuation::Follow(own))
}
