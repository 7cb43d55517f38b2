use super::kernel::{fill_binomial, TAIL_FLOOR};
use super::params::{MfgParams, StateDistribution, NORMALIZATION_TOLERANCE};
use super::policy::PolicyTable;
use crate::error::{Error, Result};

/// One step of the mean-field flow:
/// P(j, t+1) = Σ_a Σ_j' Pr[a + Bin(N-1, π(move | j')) = j] P(j', t) π(a | j').
pub fn evolve_distribution(
    current: &StateDistribution,
    policy_slice: &[[f64; 2]],
    params: &MfgParams,
) -> Result<StateDistribution> {
    let n = params.n;
    if current.len() != n + 1 || policy_slice.len() != n + 1 {
        return Err(Error::invalid(format!(
            "distribution and policy slice need {} states, got {} and {}",
            n + 1,
            current.len(),
            policy_slice.len()
        )));
    }
    let mut next = vec![0.0; n + 1];
    let mut peers = vec![0.0; n];
    for (j_prev, (&mass, row)) in current.probs().iter().zip(policy_slice).enumerate() {
        if !((row[0] + row[1] - 1.0).abs() <= NORMALIZATION_TOLERANCE && row.iter().all(|p| (0.0..=1.0).contains(p)))
        {
            return Err(Error::numerical(format!("policy row {row:?} at j = {j_prev} is not a distribution")));
        }
        if mass == 0.0 {
            continue;
        }
        let support = fill_binomial(n - 1, row[1], TAIL_FLOOR, &mut peers);
        for (a, &pa) in row.iter().enumerate() {
            let weight = mass * pa;
            if weight == 0.0 {
                continue;
            }
            for k in support.clone() {
                next[k + a] += weight * peers[k];
            }
        }
    }
    let total: f64 = next.iter().sum();
    if !total.is_finite() || (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::numerical(format!(
            "distribution drifted to total mass {total} before renormalization"
        )));
    }
    Ok(StateDistribution::renormalized(next))
}

/// Flow P(., t) for t = 0..=H from the configured initial distribution.
pub fn forward_flow(params: &MfgParams, policy: &PolicyTable) -> Result<Vec<StateDistribution>> {
    if policy.horizon() != params.horizon || policy.states() != params.states() {
        return Err(Error::invalid("policy shape does not match the parameters"));
    }
    let mut flow = Vec::with_capacity(params.horizon + 1);
    flow.push(params.initial_distribution()?);
    for t in 0..params.horizon {
        let next = evolve_distribution(&flow[t], policy.slice(t), params)?;
        flow.push(next);
    }
    Ok(flow)
}
