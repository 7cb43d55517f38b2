use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on Σ_j P(j) for a distribution to count as normalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// Logistic reward 1 / (1 + exp((1 - 2a)(i - j) / kappa)) + offset.
    Formula,
    /// Four-case table keyed on congestion (j > i) and the agent's action.
    Table,
}

/// Per-agent rewards by congestion regime. The intersection is uncongested
/// when the move count j is at most the threshold i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardTable {
    pub move_uncongested: f64,
    pub wait_uncongested: f64,
    pub wait_congested: f64,
    pub move_congested: f64,
}

impl Default for RewardTable {
    fn default() -> Self {
        RewardTable {
            move_uncongested: 1.0,
            wait_uncongested: 0.6,
            wait_congested: 0.2,
            move_congested: 0.0,
        }
    }
}

impl RewardTable {
    /// move|uncongested > wait|uncongested >= wait|congested > move|congested.
    pub fn check_ranking(&self) -> Result<()> {
        let RewardTable {
            move_uncongested,
            wait_uncongested,
            wait_congested,
            move_congested,
        } = *self;
        if !(move_uncongested > wait_uncongested) {
            return Err(Error::invalid("reward table: move_uncongested must exceed wait_uncongested"));
        }
        if !(wait_uncongested >= wait_congested) {
            return Err(Error::invalid("reward table: wait_uncongested must be at least wait_congested"));
        }
        if !(wait_congested > move_congested) {
            return Err(Error::invalid("reward table: wait_congested must exceed move_congested"));
        }
        Ok(())
    }
}

/// Distribution of the move count at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    PointMass { state: usize },
    Uniform,
    Explicit { probs: Vec<f64> },
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::PointMass { state: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfgParams {
    /// Population size N.
    pub n: usize,
    /// Congestion threshold i, 0 < i < N.
    pub threshold: usize,
    pub discount: f64,
    /// Smoothness of the logistic reward.
    pub kappa: f64,
    /// Constant offset B of the logistic reward.
    pub offset: f64,
    /// Weight on the |j - i| consistency penalty.
    pub alpha: f64,
    /// Utility baseline.
    pub baseline: f64,
    /// SoftMax temperature.
    pub temperature: f64,
    pub horizon: usize,
    pub reward_mode: RewardMode,
    pub reward_table: RewardTable,
    pub initial: InitialState,
}

impl Default for MfgParams {
    fn default() -> Self {
        MfgParams {
            n: 20,
            threshold: 8,
            discount: 0.9,
            kappa: 1.0,
            offset: 0.0,
            alpha: 0.1,
            baseline: 0.0,
            temperature: 0.2,
            horizon: 20,
            reward_mode: RewardMode::Table,
            reward_table: RewardTable::default(),
            initial: InitialState::default(),
        }
    }
}

impl MfgParams {
    /// Validated construction: structural checks plus the reward-table ranking.
    pub fn checked(self) -> Result<Self> {
        self.validate()?;
        if self.reward_mode == RewardMode::Table {
            self.reward_table.check_ranking()?;
        }
        Ok(self)
    }

    /// Domain checks every routine relies on. The reward-table ranking is a
    /// modelling constraint and is left to [`MfgParams::checked`].
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("population n must be at least 2"));
        }
        if self.threshold == 0 || self.threshold >= self.n {
            return Err(Error::invalid(format!(
                "threshold must satisfy 0 < i < n, got i = {} with n = {}",
                self.threshold, self.n
            )));
        }
        if !(self.discount.is_finite() && (0.0..1.0).contains(&self.discount)) {
            return Err(Error::invalid("discount must lie in [0, 1)"));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::invalid("kappa must be positive"));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::invalid("temperature must be positive"));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::invalid("alpha must be non-negative"));
        }
        if !(self.offset.is_finite() && self.baseline.is_finite()) {
            return Err(Error::invalid("offset and baseline must be finite"));
        }
        let t = &self.reward_table;
        if ![t.move_uncongested, t.wait_uncongested, t.wait_congested, t.move_congested]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::invalid("reward table entries must be finite"));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        self.initial_distribution()?;
        Ok(())
    }

    pub fn states(&self) -> usize {
        self.n + 1
    }

    pub fn initial_distribution(&self) -> Result<StateDistribution> {
        match &self.initial {
            InitialState::PointMass { state } => StateDistribution::point_mass(self.n, *state),
            InitialState::Uniform => Ok(StateDistribution::uniform(self.n)),
            InitialState::Explicit { probs } => {
                if probs.len() != self.n + 1 {
                    return Err(Error::invalid(format!(
                        "initial distribution needs {} entries, got {}",
                        self.n + 1,
                        probs.len()
                    )));
                }
                StateDistribution::new(probs.clone())
            }
        }
    }
}

/// Probability vector over move counts j = 0..=N.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    probs: Vec<f64>,
}

impl StateDistribution {
    /// Accepts non-negative finite entries summing to one within 1e-12.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_normalized(&probs)?;
        Ok(StateDistribution { probs })
    }

    pub fn point_mass(n: usize, state: usize) -> Result<Self> {
        if state > n {
            return Err(Error::invalid(format!("state {state} outside 0..={n}")));
        }
        let mut probs = vec![0.0; n + 1];
        probs[state] = 1.0;
        Ok(StateDistribution { probs })
    }

    pub fn uniform(n: usize) -> Self {
        StateDistribution {
            probs: vec![1.0 / (n + 1) as f64; n + 1],
        }
    }

    /// Wraps a vector whose drift was already checked, renormalizing it.
    pub(crate) fn renormalized(mut probs: Vec<f64>) -> Self {
        let total: f64 = probs.iter().sum();
        for p in probs.iter_mut() {
            *p /= total;
        }
        StateDistribution { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
    }

    pub fn max_abs_diff(&self, other: &StateDistribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for StateDistribution {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.probs[j]
    }
}

pub(crate) fn check_normalized(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::invalid("empty distribution"));
    }
    if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::invalid(format!("distribution entry {bad} is not a probability")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::invalid(format!("distribution sums to {total}, not 1")));
    }
    Ok(())
}
