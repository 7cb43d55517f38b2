use super::params::{check_normalized, MfgParams, RewardMode};
use crate::error::{Error, Result};

pub const WAIT: usize = 0;
pub const MOVE: usize = 1;

fn logistic_term(action: usize, j: usize, params: &MfgParams) -> f64 {
    let sign = 1.0 - 2.0 * action as f64;
    let exponent = sign * (params.threshold as f64 - j as f64) / params.kappa;
    1.0 / (1.0 + exponent.exp())
}

/// Immediate reward of `action` (0 wait, 1 move) when the move count is `j`.
pub fn per_agent_reward(action: usize, j: usize, params: &MfgParams) -> f64 {
    debug_assert!(action <= 1 && j <= params.n);
    match params.reward_mode {
        RewardMode::Formula => logistic_term(action, j, params) + params.offset,
        RewardMode::Table => {
            let t = &params.reward_table;
            let uncongested = j <= params.threshold;
            match (action == MOVE, uncongested) {
                (true, true) => t.move_uncongested,
                (false, true) => t.wait_uncongested,
                (false, false) => t.wait_congested,
                (true, false) => t.move_congested,
            }
        }
    }
}

/// Expected logistic reward of `action` over the mean field `dist`, plus the offset.
pub fn group_reward(dist: &[f64], action: usize, params: &MfgParams) -> Result<f64> {
    if action > 1 {
        return Err(Error::invalid(format!("action must be 0 or 1, got {action}")));
    }
    if dist.len() != params.states() {
        return Err(Error::invalid(format!(
            "distribution has {} entries, expected {}",
            dist.len(),
            params.states()
        )));
    }
    check_normalized(dist)?;
    let expectation: f64 = dist
        .iter()
        .enumerate()
        .map(|(j, p)| p * logistic_term(action, j, params))
        .sum();
    Ok(expectation + params.offset)
}

/// U(a, j) = reward(a, j) - alpha |j - i| + baseline.
pub fn utility(action: usize, j: usize, params: &MfgParams) -> f64 {
    let gap = (j as f64 - params.threshold as f64).abs();
    per_agent_reward(action, j, params) - params.alpha * gap + params.baseline
}

/// Utilities for every (j, a), indexed `[j][a]`.
pub(crate) fn utility_grid(params: &MfgParams) -> Vec<[f64; 2]> {
    (0..=params.n)
        .map(|j| [utility(WAIT, j, params), utility(MOVE, j, params)])
        .collect()
}
