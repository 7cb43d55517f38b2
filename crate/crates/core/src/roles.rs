//! Role rotation and delayed group-reward crediting.
//!
//! Each round a subset of agents holds the rotated role. Depending on the
//! environment that role is either the sacrifice (one agent gives itself up
//! so the others escape) or the maximum-reward role (the k movers allowed
//! through an intersection). The ledger remembers who held the role recently
//! so that assignments can rotate fairly.

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotatedRole {
    Sacrifice,
    MaxReward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord {
    pub id: usize,
    /// Whether the agent held the rotated role, oldest first; at most `window_len` entries.
    pub window: VecDeque<bool>,
    /// Consecutive repeats of the current role; 0 right after a change.
    pub streak: u32,
    pub holds_role: Option<bool>,
    pub times_in_max_reward_role: usize,
    pub times_in_sacrifice_role: usize,
    pub last_selected: Option<usize>,
    pub immediate_reward: f64,
    pub credited_reward: f64,
}

impl AgentRecord {
    fn new(id: usize) -> Self {
        AgentRecord {
            id,
            window: VecDeque::new(),
            streak: 0,
            holds_role: None,
            times_in_max_reward_role: 0,
            times_in_sacrifice_role: 0,
            last_selected: None,
            immediate_reward: 0.0,
            credited_reward: 0.0,
        }
    }

    fn times_selected(&self, rotated: RotatedRole) -> usize {
        match rotated {
            RotatedRole::Sacrifice => self.times_in_sacrifice_role,
            RotatedRole::MaxReward => self.times_in_max_reward_role,
        }
    }
}

/// Agents selected for the rotated role in one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleAssignment {
    /// 1-based.
    pub round: usize,
    /// Sorted ids.
    pub selected: Vec<usize>,
    pub rotated: RotatedRole,
    pub n_agents: usize,
}

impl RoleAssignment {
    pub fn is_selected(&self, id: usize) -> bool {
        self.selected.binary_search(&id).is_ok()
    }

    pub fn in_max_reward_role(&self, id: usize) -> bool {
        self.is_selected(id) == (self.rotated == RotatedRole::MaxReward)
    }

    pub fn max_reward_agents(&self) -> Vec<usize> {
        (0..self.n_agents).filter(|&a| self.in_max_reward_role(a)).collect()
    }

    pub fn sacrifice_agents(&self) -> Vec<usize> {
        (0..self.n_agents).filter(|&a| !self.in_max_reward_role(a)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationLedger {
    agents: Vec<AgentRecord>,
    window_len: usize,
    rotated: RotatedRole,
    rounds: usize,
    history: Vec<RoleAssignment>,
}

impl RotationLedger {
    pub fn new(n_agents: usize, window_len: usize, rotated: RotatedRole) -> Result<Self> {
        if n_agents == 0 {
            return Err(Error::invalid("ledger needs at least one agent"));
        }
        if window_len == 0 {
            return Err(Error::invalid("window length must be at least 1"));
        }
        Ok(RotationLedger {
            agents: (0..n_agents).map(AgentRecord::new).collect(),
            window_len,
            rotated,
            rounds: 0,
            history: Vec::new(),
        })
    }

    /// Ledger whose agents already hold roles with the given streaks, as if
    /// they had been playing before the first recorded round.
    pub fn with_roles(holds_role: &[bool], streaks: &[u32], window_len: usize, rotated: RotatedRole) -> Result<Self> {
        if holds_role.len() != streaks.len() {
            return Err(Error::invalid("roles and streaks must have equal length"));
        }
        let mut ledger = RotationLedger::new(holds_role.len(), window_len, rotated)?;
        for (agent, (&role, &streak)) in ledger.agents.iter_mut().zip(holds_role.iter().zip(streaks)) {
            agent.holds_role = Some(role);
            agent.streak = streak;
        }
        Ok(ledger)
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn rotated(&self) -> RotatedRole {
        self.rotated
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn agents(&self) -> &[AgentRecord] {
        &self.agents
    }

    pub fn history(&self) -> &[RoleAssignment] {
        &self.history
    }

    pub fn add_immediate(&mut self, id: usize, reward: f64) {
        self.agents[id].immediate_reward += reward;
    }

    pub fn apply_credit(&mut self, credits: &[f64]) -> Result<()> {
        if credits.len() != self.agents.len() {
            return Err(Error::invalid("one credit per agent required"));
        }
        for (agent, c) in self.agents.iter_mut().zip(credits) {
            agent.credited_reward += c;
        }
        Ok(())
    }

    /// Records a round in which exactly `selected` hold the rotated role.
    pub fn record(&mut self, mut selected: Vec<usize>) -> Result<RoleAssignment> {
        selected.sort_unstable();
        selected.dedup();
        if let Some(&bad) = selected.iter().find(|&&id| id >= self.agents.len()) {
            return Err(Error::invalid(format!("unknown agent id {bad}")));
        }
        self.rounds += 1;
        let round = self.rounds;
        for agent in self.agents.iter_mut() {
            let sel = selected.binary_search(&agent.id).is_ok();
            agent.window.push_back(sel);
            while agent.window.len() > self.window_len {
                agent.window.pop_front();
            }
            agent.streak = match agent.holds_role {
                Some(prev) if prev == sel => agent.streak + 1,
                _ => 0,
            };
            agent.holds_role = Some(sel);
            let max_reward = sel == (self.rotated == RotatedRole::MaxReward);
            if max_reward {
                agent.times_in_max_reward_role += 1;
            } else {
                agent.times_in_sacrifice_role += 1;
            }
            if sel {
                agent.last_selected = Some(round);
            }
        }
        let assignment = RoleAssignment {
            round,
            selected,
            rotated: self.rotated,
            n_agents: self.agents.len(),
        };
        self.history.push(assignment.clone());
        Ok(assignment)
    }

    /// Rows for the most recent round: `round,agent_id,role,streak,cumulative_sacrifices,credited_reward`.
    pub fn snapshot(&self) -> Vec<LedgerRow> {
        let Some(last) = self.history.last() else {
            return Vec::new();
        };
        self.agents
            .iter()
            .map(|a| LedgerRow {
                round: last.round,
                agent_id: a.id,
                role: if last.in_max_reward_role(a.id) {
                    RotatedRole::MaxReward
                } else {
                    RotatedRole::Sacrifice
                },
                streak: a.streak,
                cumulative_sacrifices: a.times_in_sacrifice_role,
                credited_reward: a.credited_reward,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub round: usize,
    pub agent_id: usize,
    pub role: RotatedRole,
    pub streak: u32,
    pub cumulative_sacrifices: usize,
    pub credited_reward: f64,
}

pub const LEDGER_COLUMNS: [&str; 6] = [
    "round",
    "agent_id",
    "role",
    "streak",
    "cumulative_sacrifices",
    "credited_reward",
];

pub fn write_ledger_csv<W: Write>(rows: &[LedgerRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LEDGER_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.round.to_string(),
            r.agent_id.to_string(),
            match r.role {
                RotatedRole::MaxReward => "max_reward".to_string(),
                RotatedRole::Sacrifice => "sacrifice".to_string(),
            },
            r.streak.to_string(),
            r.cumulative_sacrifices.to_string(),
            csvio::real(r.credited_reward),
        ])?;
    }
    csvio::finish(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchMode {
    DeterministicWindow,
    StochasticSigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchPolicy {
    pub mode: SwitchMode,
    pub window: usize,
    /// Streak at which the switch probability reaches one half.
    pub s0: f64,
    pub tau_s: f64,
}

impl SwitchPolicy {
    /// Stochastic policy for `n` agents and threshold `i`: s0 = C(n - 1, i),
    /// window n - 1, unit sigmoid scale.
    pub fn for_population(n: usize, i: usize) -> Result<Self> {
        if n < 2 || i >= n {
            return Err(Error::invalid(format!("need 0 <= i < n with n >= 2, got n = {n}, i = {i}")));
        }
        let s0 = binomial_coefficient(n as u64 - 1, i as u64)
            .ok_or_else(|| Error::invalid(format!("C({}, {i}) overflows", n - 1)))?;
        let policy = SwitchPolicy {
            mode: SwitchMode::StochasticSigmoid,
            window: n - 1,
            s0: s0 as f64,
            tau_s: 1.0,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::invalid("switch window must be at least 1"));
        }
        if !(self.s0.is_finite() && self.s0 >= 1.0) {
            return Err(Error::invalid("s0 must be at least 1"));
        }
        if !(self.tau_s.is_finite() && self.tau_s > 0.0) {
            return Err(Error::invalid("tau_s must be positive"));
        }
        Ok(())
    }
}

/// C(n, k) in exact integer arithmetic, `None` on overflow.
pub fn binomial_coefficient(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for step in 0..k {
        // acc * (n - step) is divisible by (step + 1) after the multiplication
        acc = acc.checked_mul(n - step)? / (step + 1);
    }
    Some(acc)
}

/// Chooses `k` agents for the rotated role. Agents that held it anywhere in
/// their memory window are skipped while enough others remain; candidates are
/// ranked by times selected, then by how long ago they were last selected,
/// then by id.
pub fn deterministic_assign(ledger: &mut RotationLedger, k: usize) -> Result<RoleAssignment> {
    let n = ledger.n_agents();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("k must satisfy 1 <= k < {n}, got {k}")));
    }
    let rotated = ledger.rotated;
    let mut ranked: Vec<&AgentRecord> = ledger.agents.iter().collect();
    ranked.sort_by_key(|a| (a.times_selected(rotated), a.last_selected.map_or(0, |r| r + 1), a.id));
    let (eligible, resting): (Vec<&AgentRecord>, Vec<&AgentRecord>) =
        ranked.into_iter().partition(|a| !a.window.contains(&true));
    let chosen: Vec<usize> = eligible.iter().chain(resting.iter()).take(k).map(|a| a.id).collect();
    ledger.record(chosen)
}

/// p = 1 / (1 + exp(-(streak - s0) / tau_s)).
pub fn sigmoid_switch_probability(streak: u32, policy: &SwitchPolicy) -> f64 {
    let z = (streak as f64 - policy.s0) / policy.tau_s;
    1.0 / (1.0 + (-z).exp())
}

/// Each agent independently leaves its current role with the sigmoid
/// probability of its streak. Agents without a role yet start outside the
/// rotated role. The selected set may have any size.
pub fn stochastic_assign<R: Rng + ?Sized>(
    ledger: &mut RotationLedger,
    policy: &SwitchPolicy,
    rng: &mut R,
) -> Result<RoleAssignment> {
    if policy.mode != SwitchMode::StochasticSigmoid {
        return Err(Error::invalid("stochastic assignment needs a stochastic_sigmoid policy"));
    }
    policy.validate()?;
    let selected: Vec<usize> = ledger
        .agents
        .iter()
        .filter_map(|a| {
            let current = a.holds_role.unwrap_or(false);
            let switch = rng.gen::<f64>() < sigmoid_switch_probability(a.streak, policy);
            (current != switch).then_some(a.id)
        })
        .collect();
    ledger.record(selected)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareRule {
    /// The outcome is split across beneficiaries in proportion to the rounds
    /// each spent outside the maximum-reward role; credits sum to the outcome.
    EqualSplit,
    /// Every beneficiary receives the whole outcome.
    FullEach,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CreditRule {
    pub share: ShareRule,
    /// Extra credit per round spent in the sacrifice role.
    pub sacrifice_bonus: f64,
}

impl Default for CreditRule {
    fn default() -> Self {
        CreditRule {
            share: ShareRule::EqualSplit,
            sacrifice_bonus: 0.0,
        }
    }
}

/// Delayed credit for one completed episode. Agents that spent rounds outside
/// the maximum-reward role share `group_outcome`; agents that only held the
/// maximum-reward role get nothing here.
pub fn delayed_credit(episode: &[RoleAssignment], group_outcome: f64, rule: &CreditRule) -> Result<Vec<f64>> {
    let first = episode
        .first()
        .ok_or_else(|| Error::invalid("cannot credit an empty episode"))?;
    let n = first.n_agents;
    if episode.iter().any(|a| a.n_agents != n) {
        return Err(Error::invalid("episode mixes agent counts"));
    }
    if !group_outcome.is_finite() {
        return Err(Error::invalid("group outcome must be finite"));
    }
    let mut shares = vec![0usize; n];
    for assignment in episode {
        for id in assignment.sacrifice_agents() {
            shares[id] += 1;
        }
    }
    let total: usize = shares.iter().sum();
    let credits = shares
        .iter()
        .map(|&s| {
            let base = match rule.share {
                _ if total == 0 => 0.0,
                ShareRule::EqualSplit => group_outcome * s as f64 / total as f64,
                ShareRule::FullEach if s > 0 => group_outcome,
                ShareRule::FullEach => 0.0,
            };
            base + rule.sacrifice_bonus * s as f64
        })
        .collect();
    Ok(credits)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessStats {
    pub rounds: usize,
    pub max_reward_counts: Vec<usize>,
    pub sacrifice_counts: Vec<usize>,
    /// max - min of the maximum-reward-role counts.
    pub max_reward_gap: usize,
    pub credited: Vec<f64>,
    pub credited_spread: f64,
    pub credited_std: f64,
}

pub fn fairness_report(ledger: &RotationLedger) -> Result<FairnessStats> {
    if ledger.rounds() == 0 {
        return Err(Error::invalid("fairness needs at least one completed round"));
    }
    let max_reward_counts: Vec<usize> = ledger.agents.iter().map(|a| a.times_in_max_reward_role).collect();
    let sacrifice_counts = ledger.agents.iter().map(|a| a.times_in_sacrifice_role).collect();
    let credited: Vec<f64> = ledger.agents.iter().map(|a| a.credited_reward).collect();
    let gap = max_reward_counts.iter().max().unwrap() - max_reward_counts.iter().min().unwrap();
    let lo = credited.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = credited.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = credited.iter().sum::<f64>() / credited.len() as f64;
    let var = credited.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / credited.len() as f64;
    Ok(FairnessStats {
        rounds: ledger.rounds(),
        max_reward_counts,
        sacrifice_counts,
        max_reward_gap: gap,
        credited,
        credited_spread: hi - lo,
        credited_std: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dungeon(n: usize, window: usize) -> RotationLedger {
        RotationLedger::new(n, window, RotatedRole::Sacrifice).unwrap()
    }

    #[test]
    fn three_agents_take_turns() {
        let mut ledger = dungeon(3, 2);
        let picks: Vec<Vec<usize>> = (0..3)
            .map(|_| deterministic_assign(&mut ledger, 1).unwrap().selected)
            .collect();
        assert_eq!(picks, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn recent_sacrificers_rest() {
        let mut ledger = dungeon(3, 2);
        let mut recent: VecDeque<usize> = VecDeque::new();
        for _ in 0..30 {
            let pick = deterministic_assign(&mut ledger, 1).unwrap().selected[0];
            assert!(!recent.contains(&pick));
            recent.push_back(pick);
            if recent.len() > 2 {
                recent.pop_front();
            }
        }
    }

    #[test]
    fn five_agents_pairs_over_ten_rounds() {
        let mut ledger = dungeon(5, 4);
        for _ in 0..10 {
            deterministic_assign(&mut ledger, 2).unwrap();
        }
        let counts: Vec<usize> = ledger.agents().iter().map(|a| a.times_in_sacrifice_role).collect();
        assert_eq!(counts, vec![4; 5]);
    }

    #[test]
    fn k_out_of_range() {
        let mut ledger = dungeon(3, 2);
        assert!(deterministic_assign(&mut ledger, 0).is_err());
        assert!(deterministic_assign(&mut ledger, 3).is_err());
    }

    #[test]
    fn streak_resets_on_change() {
        let mut ledger = dungeon(2, 1);
        ledger.record(vec![0]).unwrap();
        ledger.record(vec![0]).unwrap();
        assert_eq!(ledger.agents()[0].streak, 1);
        ledger.record(vec![1]).unwrap();
        assert_eq!(ledger.agents()[0].streak, 0);
        assert_eq!(ledger.agents()[1].streak, 0);
        assert!(ledger.agents().iter().all(|a| a.window.len() <= 1));
    }

    #[test]
    fn sigmoid_examples() {
        let policy = SwitchPolicy::for_population(4, 2).unwrap();
        assert_eq!(policy.s0, 3.0);
        assert_eq!(sigmoid_switch_probability(3, &policy), 0.5);
        let tight = SwitchPolicy {
            s0: 50.0,
            tau_s: 0.5,
            ..policy
        };
        assert!(sigmoid_switch_probability(0, &tight) < 1e-40);
        let step = SwitchPolicy { tau_s: 1e-6, ..policy };
        assert!(sigmoid_switch_probability(4, &step) > 1.0 - 1e-12);
    }

    #[test]
    fn binomial_coefficients() {
        assert_eq!(binomial_coefficient(3, 2), Some(3));
        assert_eq!(binomial_coefficient(19, 8), Some(75582));
        assert_eq!(binomial_coefficient(5, 7), Some(0));
        assert_eq!(binomial_coefficient(60, 30), Some(118264581564861424));
        assert_eq!(binomial_coefficient(200, 100), None);
    }

    #[test]
    fn switch_policy_validation() {
        assert!(SwitchPolicy::for_population(1, 0).is_err());
        let p = SwitchPolicy::for_population(4, 2).unwrap();
        assert!(SwitchPolicy { tau_s: 0.0, ..p }.validate().is_err());
        assert!(SwitchPolicy { s0: 0.5, ..p }.validate().is_err());
        assert!(SwitchPolicy { window: 0, ..p }.validate().is_err());
    }

    #[test]
    fn switch_frequency_tracks_probability() {
        let policy = SwitchPolicy {
            mode: SwitchMode::StochasticSigmoid,
            window: 3,
            s0: 4.0,
            tau_s: 1.5,
        };
        let p = sigmoid_switch_probability(0, &policy);
        let trials = 10_000;
        let mut switched = 0;
        for seed in 0..trials {
            let mut ledger = RotationLedger::with_roles(&[false], &[0], 3, RotatedRole::MaxReward).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = stochastic_assign(&mut ledger, &policy, &mut rng).unwrap();
            switched += a.selected.len();
        }
        let freq = switched as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * sigma, "freq={freq} p={p}");
    }

    #[test]
    fn stochastic_needs_stochastic_mode() {
        let mut ledger = dungeon(2, 1);
        let mut policy = SwitchPolicy::for_population(2, 1).unwrap();
        policy.mode = SwitchMode::DeterministicWindow;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(stochastic_assign(&mut ledger, &policy, &mut rng).is_err());
    }

    #[test]
    fn stochastic_is_deterministic_per_seed() {
        let policy = SwitchPolicy::for_population(6, 2).unwrap();
        let run = |seed| {
            let mut ledger = RotationLedger::new(6, 5, RotatedRole::MaxReward).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..40)
                .map(|_| stochastic_assign(&mut ledger, &policy, &mut rng).unwrap().selected)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
    }

    fn one_round(n: usize, selected: Vec<usize>, rotated: RotatedRole) -> RoleAssignment {
        RoleAssignment {
            round: 1,
            selected,
            rotated,
            n_agents: n,
        }
    }

    #[test]
    fn credit_examples() {
        let rule = CreditRule::default();
        let ep = [one_round(3, vec![1], RotatedRole::Sacrifice)];
        assert_eq!(delayed_credit(&ep, 10.0, &rule).unwrap(), vec![0.0, 10.0, 0.0]);
        assert_eq!(delayed_credit(&ep, 0.0, &rule).unwrap(), vec![0.0; 3]);
        // two movers through, three waiters share the outcome
        let ep = [one_round(5, vec![0, 4], RotatedRole::MaxReward)];
        assert_eq!(delayed_credit(&ep, 9.0, &rule).unwrap(), vec![0.0, 3.0, 3.0, 3.0, 0.0]);
        assert!(delayed_credit(&[], 1.0, &rule).is_err());
    }

    #[test]
    fn full_each_rule_and_bonus() {
        let rule = CreditRule {
            share: ShareRule::FullEach,
            sacrifice_bonus: 0.5,
        };
        let ep = [one_round(4, vec![0], RotatedRole::MaxReward)];
        let credits = delayed_credit(&ep, 2.0, &rule).unwrap();
        assert_eq!(credits, vec![0.0, 2.5, 2.5, 2.5]);
    }

    #[test]
    fn fairness_examples() {
        let mut ledger = dungeon(3, 2);
        assert!(fairness_report(&ledger).is_err());
        deterministic_assign(&mut ledger, 1).unwrap();
        assert_eq!(fairness_report(&ledger).unwrap().max_reward_gap, 1);
        for _ in 0..5 {
            deterministic_assign(&mut ledger, 1).unwrap();
        }
        assert_eq!(fairness_report(&ledger).unwrap().max_reward_gap, 0);
    }

    #[test]
    fn ledger_csv_schema() {
        let mut ledger = dungeon(2, 1);
        deterministic_assign(&mut ledger, 1).unwrap();
        ledger.apply_credit(&[1.5, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_ledger_csv(&ledger.snapshot(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "round,agent_id,role,streak,cumulative_sacrifices,credited_reward\n\
             1,0,sacrifice,0,1,1.50000000000\n\
             1,1,max_reward,0,0,0.00000000000\n"
        );
    }

    proptest! {
        #[test]
        fn sigmoid_is_monotone_and_bounded(s0 in 1.0f64..50.0, tau in 0.05f64..20.0) {
            let policy = SwitchPolicy { mode: SwitchMode::StochasticSigmoid, window: 1, s0, tau_s: tau };
            let mut prev = 0.0;
            for streak in 0..120u32 {
                let p = sigmoid_switch_probability(streak, &policy);
                prop_assert!(p >= prev);
                prop_assert!(p > 0.0 && p <= 1.0);
                prev = p;
            }
        }

        #[test]
        fn round_robin_after_warmup(n in 2usize..12, cycles in 2usize..6) {
            let mut ledger = dungeon(n, n - 1);
            let picks: Vec<usize> = (0..n * cycles)
                .map(|_| deterministic_assign(&mut ledger, 1).unwrap().selected[0])
                .collect();
            for window in picks[n..].windows(n) {
                let mut seen = window.to_vec();
                seen.sort_unstable();
                prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
            }
        }

        #[test]
        fn no_repeat_within_window_while_others_eligible(n in 3usize..10, k in 1usize..3, w in 1usize..6, rounds in 1usize..40) {
            prop_assume!(k < n);
            let mut ledger = dungeon(n, w);
            for _ in 0..rounds {
                let before: Vec<bool> = ledger.agents().iter().map(|a| !a.window.contains(&true)).collect();
                let eligible = before.iter().filter(|&&e| e).count();
                let a = deterministic_assign(&mut ledger, k).unwrap();
                prop_assert_eq!(a.selected.len(), k);
                if eligible >= k {
                    for id in &a.selected {
                        prop_assert!(before[*id]);
                    }
                }
            }
        }

        #[test]
        fn counts_match_history(n in 2usize..8, rounds in 1usize..30, seed in 0u64..1000) {
            let policy = SwitchPolicy::for_population(n, 1).unwrap();
            let mut ledger = RotationLedger::new(n, n - 1, RotatedRole::MaxReward).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..rounds {
                stochastic_assign(&mut ledger, &policy, &mut rng).unwrap();
            }
            for a in ledger.agents() {
                let held = ledger.history().iter().filter(|r| r.is_selected(a.id)).count();
                prop_assert_eq!(a.times_in_max_reward_role, held);
                prop_assert_eq!(a.times_in_sacrifice_role, rounds - held);
            }
        }

        #[test]
        fn equal_split_conserves_outcome(n in 2usize..8, outcome in -100.0f64..100.0, rounds in 1usize..6) {
            let mut ledger = RotationLedger::new(n, 1, RotatedRole::Sacrifice).unwrap();
            for _ in 0..rounds {
                deterministic_assign(&mut ledger, 1).unwrap();
            }
            let credits = delayed_credit(ledger.history(), outcome, &CreditRule::default()).unwrap();
            prop_assert!((credits.iter().sum::<f64>() - outcome).abs() < 1e-9);
            let full = CreditRule { share: ShareRule::FullEach, sacrifice_bonus: 0.0 };
            let credits = delayed_credit(ledger.history(), outcome, &full).unwrap();
            let beneficiaries = credits.iter().filter(|c| **c != 0.0).count();
            if outcome != 0.0 {
                prop_assert!((credits.iter().sum::<f64>() - outcome * beneficiaries as f64).abs() < 1e-9);
            }
        }
    }
}
