use serde::{Deserialize, Serialize};

use super::bellman::{bellman_backward, policy_evaluation, ActionValueTable};
use super::flow::forward_flow;
use super::params::{MfgParams, StateDistribution};
use super::policy::{softmax_policy, PolicyTable};
use crate::error::{Error, Result};

/// Iterations excluded from the monotone-residual check.
pub const WARMUP_ITERATIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Weight λ on the fresh SoftMax policy in π ← (1 - λ) π + λ π_new.
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 500,
            damping: 0.5,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("damping must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub policy: f64,
    pub distribution: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// Tolerance not reached within `max_iter`.
    MaxIterations,
    /// A residual grew after the warm-up iterations.
    NonMonotone,
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub policy: PolicyTable,
    /// P(., t) for t = 0..=H under `policy`.
    pub distribution_flow: Vec<StateDistribution>,
    /// Greedy action values against peers playing `policy`.
    pub values: ActionValueTable,
    pub iterations: usize,
    pub residual_history: Vec<Residual>,
    pub status: SolveStatus,
    pub exploitability: f64,
}

impl EquilibriumResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn final_mean_state(&self) -> f64 {
        self.distribution_flow.last().map(StateDistribution::mean).unwrap_or(0.0)
    }
}

fn softmax_table(values: &ActionValueTable, params: &MfgParams) -> Result<PolicyTable> {
    let mut table = PolicyTable::uniform(params.horizon, params.states());
    for t in 0..params.horizon {
        for j in 0..=params.n {
            table.set_row(t, j, softmax_policy(values.q(t, j), params.temperature)?);
        }
    }
    Ok(table)
}

/// Damped fixed point between the forward flow and backward induction,
/// starting from the uniform policy. Stops once both the policy and the
/// distribution residuals (max norm) fall below `tol`.
pub fn solve_equilibrium(params: &MfgParams, options: &SolverOptions) -> Result<EquilibriumResult> {
    params.validate()?;
    options.validate()?;
    let mut policy = PolicyTable::uniform(params.horizon, params.states());
    let mut flow = forward_flow(params, &policy)?;
    let mut history = Vec::new();
    let mut reached = false;
    for _ in 0..options.max_iter {
        let values = bellman_backward(&flow, &policy, params)?;
        let target = softmax_table(&values, params)?;
        let next = policy.blend(&target, options.damping);
        let next_flow = forward_flow(params, &next)?;
        let residual = Residual {
            policy: next.max_abs_diff(&policy),
            distribution: next_flow
                .iter()
                .zip(&flow)
                .map(|(a, b)| a.max_abs_diff(b))
                .fold(0.0, f64::max),
        };
        if !(residual.policy.is_finite() && residual.distribution.is_finite()) {
            return Err(Error::numerical("non-finite residual in equilibrium iteration"));
        }
        history.push(residual);
        policy = next;
        flow = next_flow;
        if residual.policy < options.tol && residual.distribution < options.tol {
            reached = true;
            break;
        }
    }
    let monotone = history.windows(2).skip(WARMUP_ITERATIONS.saturating_sub(1)).all(|w| {
        w[1].policy <= w[0].policy && w[1].distribution <= w[0].distribution
    });
    let status = match (reached, monotone) {
        (_, false) => SolveStatus::NonMonotone,
        (true, true) => SolveStatus::Converged,
        (false, true) => SolveStatus::MaxIterations,
    };
    let values = bellman_backward(&flow, &policy, params)?;
    let mut result = EquilibriumResult {
        policy,
        distribution_flow: flow,
        values,
        iterations: history.len(),
        residual_history: history,
        status,
        exploitability: 0.0,
    };
    result.exploitability = exploitability(&result, params)?;
    Ok(result)
}

/// Gain of a single agent that best-responds greedily to the population
/// playing the result's policy, over following that policy itself, averaged
/// over the initial distribution.
pub fn exploitability(result: &EquilibriumResult, params: &MfgParams) -> Result<f64> {
    let best = bellman_backward(&result.distribution_flow, &result.policy, params)?;
    let follow = policy_evaluation(params, &result.policy, &result.policy)?;
    let initial = &result.distribution_flow[0];
    let gain: f64 = (0..=params.n)
        .map(|j| initial[j] * (best.v(0, j) - follow.v(0, j)))
        .sum();
    if !gain.is_finite() {
        return Err(Error::numerical("non-finite exploitability"));
    }
    Ok(gain)
}
