use std::path::Path;

use super::simulate::EmpiricalStats;
use super::solver::EquilibriumResult;
use crate::csvio::{self, real};
use crate::error::Result;

pub const POLICY_COLUMNS: [&str; 4] = ["t", "j", "pi_wait", "pi_move"];
pub const FLOW_COLUMNS: [&str; 3] = ["t", "j", "prob"];
pub const VALUE_COLUMNS: [&str; 4] = ["t", "j", "q_wait", "q_move"];
pub const DIAG_COLUMNS: [&str; 3] = ["iter", "policy_residual", "dist_residual"];
pub const SIM_COLUMNS: [&str; 4] = ["t", "empirical_mean_j", "mean_field_mean_j", "abs_gap_fraction"];

/// Writes `policy.csv`, `flow.csv`, `values.csv` and `diag.csv` into `dir`.
pub fn write_equilibrium(result: &EquilibriumResult, dir: &Path) -> Result<()> {
    let mut w = csvio::create(&dir.join("policy.csv"))?;
    w.write_record(POLICY_COLUMNS)?;
    for t in 0..result.policy.horizon() {
        for j in 0..result.policy.states() {
            let row = result.policy.row(t, j);
            w.write_record([t.to_string(), j.to_string(), real(row[0]), real(row[1])])?;
        }
    }
    csvio::finish(w)?;

    let mut w = csvio::create(&dir.join("flow.csv"))?;
    w.write_record(FLOW_COLUMNS)?;
    for (t, dist) in result.distribution_flow.iter().enumerate() {
        for (j, p) in dist.probs().iter().enumerate() {
            w.write_record([t.to_string(), j.to_string(), real(*p)])?;
        }
    }
    csvio::finish(w)?;

    let mut w = csvio::create(&dir.join("values.csv"))?;
    w.write_record(VALUE_COLUMNS)?;
    for t in 0..=result.values.horizon() {
        for j in 0..result.values.states() {
            let q = result.values.q(t, j);
            w.write_record([t.to_string(), j.to_string(), real(q[0]), real(q[1])])?;
        }
    }
    csvio::finish(w)?;

    let mut w = csvio::create(&dir.join("diag.csv"))?;
    w.write_record(DIAG_COLUMNS)?;
    for (k, r) in result.residual_history.iter().enumerate() {
        w.write_record([(k + 1).to_string(), real(r.policy), real(r.distribution)])?;
    }
    csvio::finish(w)
}

/// Writes `simulation.csv` comparing empirical and mean-field mean counts.
pub fn write_simulation(stats: &EmpiricalStats, n: usize, dir: &Path) -> Result<()> {
    let mut w = csvio::create(&dir.join("simulation.csv"))?;
    w.write_record(SIM_COLUMNS)?;
    for (t, (e, m)) in stats.empirical_mean.iter().zip(&stats.mean_field_mean).enumerate() {
        w.write_record([t.to_string(), real(*e), real(*m), real((e - m).abs() / n as f64)])?;
    }
    csvio::finish(w)
}
