use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::flow::forward_flow;
use super::params::MfgParams;
use super::policy::PolicyTable;
use super::reward::{utility, MOVE, WAIT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalStats {
    pub episodes: usize,
    /// Empirical P̂(j, t), indexed `[t][j]` for t = 0..=H.
    pub empirical_distribution: Vec<Vec<f64>>,
    pub empirical_mean: Vec<f64>,
    /// E_P[j] from the mean-field flow under the same policy.
    pub mean_field_mean: Vec<f64>,
    /// Undiscounted utility per agent, averaged over episodes.
    pub agent_rewards: Vec<f64>,
    /// sup_t |Ê[j_t] / N - E_P[j_t] / N|.
    pub deviation: f64,
}

/// Generator for one episode; the stream is the episode index so episodes
/// can be replayed or run out of order.
pub fn episode_rng(seed: u64, episode: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode as u64);
    rng
}

fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // u landed in the rounding slack above the last partial sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Simulates N discrete agents for H steps per episode. Every agent observes
/// the realized previous count j and samples its action from π(· | j, t).
pub fn simulate_population(
    params: &MfgParams,
    policy: &PolicyTable,
    episodes: usize,
    seed: u64,
) -> Result<EmpiricalStats> {
    params.validate()?;
    if episodes == 0 {
        return Err(Error::invalid("episodes must be at least 1"));
    }
    let (n, h) = (params.n, params.horizon);
    let flow = forward_flow(params, policy)?;
    let initial = params.initial_distribution()?;

    let mut counts = vec![vec![0usize; n + 1]; h + 1];
    let mut rewards = vec![0.0; n];
    for episode in 0..episodes {
        let mut rng = episode_rng(seed, episode);
        let mut j = sample_index(initial.probs(), rng.gen::<f64>());
        counts[0][j] += 1;
        for t in 0..h {
            let p_move = policy.move_prob(t, j);
            let mut movers = 0;
            for reward in rewards.iter_mut() {
                let action = if rng.gen::<f64>() < p_move { MOVE } else { WAIT };
                movers += action;
                *reward += utility(action, j, params);
            }
            j = movers;
            counts[t + 1][j] += 1;
        }
    }

    let scale = 1.0 / episodes as f64;
    let empirical_distribution: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 * scale).collect())
        .collect();
    let empirical_mean: Vec<f64> = empirical_distribution
        .iter()
        .map(|row| row.iter().enumerate().map(|(j, p)| j as f64 * p).sum())
        .collect();
    let mean_field_mean: Vec<f64> = flow.iter().map(|d| d.mean()).collect();
    let deviation = empirical_mean
        .iter()
        .zip(&mean_field_mean)
        .map(|(e, m)| (e - m).abs() / n as f64)
        .fold(0.0, f64::max);
    for r in rewards.iter_mut() {
        *r *= scale;
    }
    Ok(EmpiricalStats {
        episodes,
        empirical_distribution,
        empirical_mean,
        mean_field_mean,
        agent_rewards: rewards,
        deviation,
    })
}
