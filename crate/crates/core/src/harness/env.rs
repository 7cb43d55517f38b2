//! Round-based environments driven by the role schedulers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ipd::{deviate_payoff, stick_payoff, critical_discount, PayoffMatrix};
use crate::mfg::{utility, MfgParams, PolicyTable, MOVE, WAIT};
use crate::roles::{
    delayed_credit, deterministic_assign, fairness_report, stochastic_assign, CreditRule, FairnessStats, LedgerRow,
    RotatedRole, RotationLedger, SwitchPolicy,
};

use super::config::DungeonRotation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub delta: f64,
    pub stick: f64,
    pub deviate: f64,
    /// Sign of stick - deviate, 0 within a relative 1e-12.
    pub sign: i8,
    pub above_solved: bool,
    pub above_reward_gap_ratio: bool,
}

pub const SCAN_COLUMNS: [&str; 6] = [
    "delta",
    "stick",
    "deviate",
    "sign",
    "above_solved",
    "above_reward_gap_ratio",
];

pub fn delta_scan(payoff: &PayoffMatrix, grid: &[f64]) -> Result<Vec<ScanRow>> {
    if let Some(bad) = grid.iter().find(|d| !(d.is_finite() && (0.0..1.0).contains(*d))) {
        return Err(Error::invalid(format!("grid point {bad} outside [0, 1)")));
    }
    let cd = critical_discount(payoff);
    let (t, p, s) = (payoff.temptation(), payoff.punishment(), payoff.sucker());
    grid.iter()
        .map(|&delta| {
            let stick = stick_payoff(t, s, delta)?;
            let deviate = deviate_payoff(t, p, delta)?;
            let diff = stick - deviate;
            let sign = if diff.abs() <= 1e-12 * stick.abs().max(deviate.abs()).max(1.0) {
                0
            } else if diff > 0.0 {
                1
            } else {
                -1
            };
            Ok(ScanRow {
                delta,
                stick,
                deviate,
                sign,
                above_solved: cd.solved.is_some_and(|d| delta > d),
                above_reward_gap_ratio: delta > cd.reward_gap_ratio,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DungeonEnv {
    pub n_agents: usize,
    pub rounds: usize,
    pub success_reward: f64,
    pub sacrifice_cost: f64,
    pub rotation: DungeonRotation,
    pub window: usize,
    pub credit: CreditRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DungeonRound {
    pub round: usize,
    pub sacrificer: usize,
    pub escaped: usize,
    pub group_outcome: f64,
}

pub const DUNGEON_COLUMNS: [&str; 4] = ["round", "sacrificer", "escaped", "group_outcome"];

#[derive(Debug, Clone)]
pub struct EpisodeLog<R> {
    pub rounds: Vec<R>,
    pub ledger_rows: Vec<LedgerRow>,
    pub ledger: RotationLedger,
    pub fairness: FairnessStats,
}

impl DungeonEnv {
    /// One sacrificer per round lets the other N - 1 escape. Escapers are paid
    /// at once; the sacrificer pays the cost now and is credited the group's
    /// escape reward when the round closes.
    pub fn run(&self) -> Result<EpisodeLog<DungeonRound>> {
        let n = self.n_agents;
        if n < 2 || self.rounds == 0 {
            return Err(Error::invalid("dungeon needs at least two agents and one round"));
        }
        let mut ledger = RotationLedger::new(n, self.window, RotatedRole::Sacrifice)?;
        let mut rounds = Vec::with_capacity(self.rounds);
        let mut rows = Vec::with_capacity(self.rounds * n);
        for _ in 0..self.rounds {
            let assignment = match self.rotation {
                DungeonRotation::Deterministic => deterministic_assign(&mut ledger, 1)?,
                DungeonRotation::Static => ledger.record(vec![0])?,
            };
            let sacrificer = assignment.selected[0];
            let escaped = n - 1;
            let outcome = escaped as f64 * self.success_reward;
            for id in 0..n {
                let r = if id == sacrificer { -self.sacrifice_cost } else { self.success_reward };
                ledger.add_immediate(id, r);
            }
            let credits = delayed_credit(std::slice::from_ref(&assignment), outcome, &self.credit)?;
            ledger.apply_credit(&credits)?;
            rows.extend(ledger.snapshot());
            rounds.push(DungeonRound {
                round: assignment.round,
                sacrificer,
                escaped,
                group_outcome: outcome,
            });
        }
        let fairness = fairness_report(&ledger)?;
        Ok(EpisodeLog {
            rounds,
            ledger_rows: rows,
            ledger,
            fairness,
        })
    }
}

/// Where each round's mover set comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySource {
    /// Agents 0..k move every round.
    Static { movers: usize },
    Rotation { movers: usize },
    /// Starts from the static assignment and switches on role streaks.
    Stochastic { movers: usize, switch: SwitchPolicy },
    /// Each agent samples from π(. | j_prev, t mod H).
    Mfg(PolicyTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionEnv {
    /// Population size, threshold and rewards.
    pub params: MfgParams,
    pub rounds: usize,
    pub window: usize,
    pub credit: CreditRule,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionRound {
    pub round: usize,
    pub movers: usize,
    pub passed: usize,
    pub group_outcome: f64,
}

pub const INTERSECTION_COLUMNS: [&str; 4] = ["round", "movers", "passed", "group_outcome"];

impl IntersectionEnv {
    pub fn n_agents(&self) -> usize {
        self.params.n
    }

    pub fn threshold(&self) -> usize {
        self.params.threshold
    }
}

/// Runs `env.rounds` crossings. If at most `threshold` agents move they all
/// pass; otherwise nobody does. Every agent is paid its utility for the round
/// immediately; the movers' total, when they pass, is the group outcome
/// credited to that round's waiters.
pub fn intersection_episode(env: &IntersectionEnv, source: &PolicySource) -> Result<EpisodeLog<IntersectionRound>> {
    let p = &env.params;
    p.validate()?;
    let n = p.n;
    if env.rounds == 0 {
        return Err(Error::invalid("rounds must be at least 1"));
    }
    let check_k = |k: usize| {
        if k == 0 || k >= n {
            Err(Error::invalid(format!("movers must satisfy 1 <= movers < {n}")))
        } else {
            Ok(())
        }
    };
    let mut ledger = match source {
        PolicySource::Stochastic { movers, .. } => {
            check_k(*movers)?;
            let roles: Vec<bool> = (0..n).map(|a| a < *movers).collect();
            RotationLedger::with_roles(&roles, &vec![0; n], env.window, RotatedRole::MaxReward)?
        }
        _ => RotationLedger::new(n, env.window, RotatedRole::MaxReward)?,
    };
    if let PolicySource::Static { movers } | PolicySource::Rotation { movers } = source {
        check_k(*movers)?;
    }
    if let PolicySource::Mfg(table) = source {
        if table.states() != n + 1 || table.horizon() == 0 {
            return Err(Error::invalid("mfg policy does not match the population"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(env.seed);
    let mut j_prev = match p.initial_distribution()?.probs().iter().position(|&x| x == 1.0) {
        Some(j) => j,
        None => 0,
    };
    let mut rounds = Vec::with_capacity(env.rounds);
    let mut rows = Vec::with_capacity(env.rounds * n);
    for r in 0..env.rounds {
        let assignment = match source {
            PolicySource::Static { movers } => ledger.record((0..*movers).collect())?,
            PolicySource::Rotation { movers } => deterministic_assign(&mut ledger, *movers)?,
            PolicySource::Stochastic { switch, .. } => stochastic_assign(&mut ledger, switch, &mut rng)?,
            PolicySource::Mfg(table) => {
                let p_move = table.move_prob(r % table.horizon(), j_prev);
                let chosen = (0..n).filter(|_| rng.gen::<f64>() < p_move).collect();
                ledger.record(chosen)?
            }
        };
        let j = assignment.selected.len();
        let passed = if j <= p.threshold { j } else { 0 };
        let mut outcome = 0.0;
        for id in 0..n {
            let action = if assignment.is_selected(id) { MOVE } else { WAIT };
            let u = utility(action, j, p);
            ledger.add_immediate(id, u);
            if action == MOVE && passed > 0 {
                outcome += u;
            }
        }
        let credits = delayed_credit(std::slice::from_ref(&assignment), outcome, &env.credit)?;
        ledger.apply_credit(&credits)?;
        rows.extend(ledger.snapshot());
        rounds.push(IntersectionRound {
            round: assignment.round,
            movers: j,
            passed,
            group_outcome: outcome,
        });
        j_prev = j;
    }
    let fairness = fairness_report(&ledger)?;
    Ok(EpisodeLog {
        rounds,
        ledger_rows: rows,
        ledger,
        fairness,
    })
}
