//! Two-player iterated prisoner's dilemma.
//!
//! Payoffs follow the usual convention: mutual cooperation pays R to both,
//! mutual defection pays P, and a defector facing a cooperator earns T while
//! the cooperator earns S.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Error, Result};

/// (T, R, P, S) payoffs with T > R > P > S enforced at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPayoff", into = "RawPayoff")]
pub struct PayoffMatrix {
    t: f64,
    r: f64,
    p: f64,
    s: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawPayoff {
    t: f64,
    r: f64,
    p: f64,
    s: f64,
}

impl TryFrom<RawPayoff> for PayoffMatrix {
    type Error = Error;

    fn try_from(raw: RawPayoff) -> Result<Self> {
        PayoffMatrix::new(raw.t, raw.r, raw.p, raw.s)
    }
}

impl From<PayoffMatrix> for RawPayoff {
    fn from(m: PayoffMatrix) -> Self {
        RawPayoff {
            t: m.t,
            r: m.r,
            p: m.p,
            s: m.s,
        }
    }
}

/// Payoff regime, decided by the sign of 2R - (T + S).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// 2R > T + S: mutual cooperation maximizes the group payoff.
    Classic,
    /// 2R < T + S: taking turns on (C, D) / (D, C) beats mutual cooperation.
    AlternationFavoring,
    /// 2R = T + S.
    Boundary,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Classic => "classic",
            Regime::AlternationFavoring => "alternation-favoring",
            Regime::Boundary => "boundary",
        })
    }
}

impl PayoffMatrix {
    pub fn new(t: f64, r: f64, p: f64, s: f64) -> Result<Self> {
        if ![t, r, p, s].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("payoffs must be finite"));
        }
        if !(t > r) {
            return Err(Error::PayoffOrdering("T > R"));
        }
        if !(r > p) {
            return Err(Error::PayoffOrdering("R > P"));
        }
        if !(p > s) {
            return Err(Error::PayoffOrdering("P > S"));
        }
        Ok(PayoffMatrix { t, r, p, s })
    }

    pub fn temptation(&self) -> f64 {
        self.t
    }

    pub fn reward(&self) -> f64 {
        self.r
    }

    pub fn punishment(&self) -> f64 {
        self.p
    }

    pub fn sucker(&self) -> f64 {
        self.s
    }

    pub fn regime(&self) -> Regime {
        classify(self)
    }

    /// Payoff to a player choosing `own` against `other`.
    pub fn payoff(&self, own: Action, other: Action) -> f64 {
        match (own, other) {
            (Action::Cooperate, Action::Cooperate) => self.r,
            (Action::Cooperate, Action::Defect) => self.s,
            (Action::Defect, Action::Cooperate) => self.t,
            (Action::Defect, Action::Defect) => self.p,
        }
    }
}

pub fn classify(payoff: &PayoffMatrix) -> Regime {
    let mutual = 2.0 * payoff.r;
    let split = payoff.t + payoff.s;
    if mutual > split {
        Regime::Classic
    } else if mutual < split {
        Regime::AlternationFavoring
    } else {
        Regime::Boundary
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Cooperate,
    Defect,
}

impl Action {
    pub fn flip(self) -> Action {
        match self {
            Action::Cooperate => Action::Defect,
            Action::Defect => Action::Cooperate,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Action::Cooperate => 'C',
            Action::Defect => 'D',
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

fn check_discount(delta: f64) -> Result<()> {
    if delta.is_finite() && (0.0..1.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::invalid(format!("discount must lie in [0, 1), got {delta}")))
    }
}

/// Discounted value of the alternating stream T, S, T, S, ... starting on T.
pub fn stick_payoff(t: f64, s: f64, delta: f64) -> Result<f64> {
    check_discount(delta)?;
    Ok((t + s * delta) / (1.0 - delta * delta))
}

/// Discounted value of T followed by P forever.
pub fn deviate_payoff(t: f64, p: f64, delta: f64) -> Result<f64> {
    check_discount(delta)?;
    Ok(t + p * delta / (1.0 - delta))
}

/// Discount threshold above which sticking to the alternation beats a
/// one-shot deviation followed by permanent punishment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalDiscount {
    /// Root of stick - deviate on (0, 1) found by bisection; `None` when
    /// deviating is at least as good for every discount below one.
    pub solved: Option<f64>,
    /// (P - S) / (T - R), the reward-gap ratio often quoted for this
    /// condition. Reported alongside `solved`; it is not the root.
    pub reward_gap_ratio: f64,
    pub diagnostic: Option<String>,
}

/// Bisection tolerance on the threshold.
pub const THRESHOLD_TOLERANCE: f64 = 1e-10;

pub fn critical_discount(payoff: &PayoffMatrix) -> CriticalDiscount {
    threshold_for(payoff.t, payoff.r, payoff.p, payoff.s)
}

/// Same as [`critical_discount`] but for weakly ordered payoffs
/// (T > R, T > P, P >= S), which admits the P = S edge case where the
/// alternation is preferred for every positive discount.
pub fn critical_discount_weak(t: f64, r: f64, p: f64, s: f64) -> Result<CriticalDiscount> {
    if ![t, r, p, s].iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("payoffs must be finite"));
    }
    if !(t > r) {
        return Err(Error::PayoffOrdering("T > R"));
    }
    if !(t > p) {
        return Err(Error::PayoffOrdering("T > P"));
    }
    if !(p >= s) {
        return Err(Error::PayoffOrdering("P >= S"));
    }
    Ok(threshold_for(t, r, p, s))
}

fn threshold_for(t: f64, r: f64, p: f64, s: f64) -> CriticalDiscount {
    let reward_gap_ratio = (p - s) / (t - r);
    // stick - deviate is unchanged by a common shift of all payoffs and only
    // rescaled by a positive factor, so bisect on the normalized stream
    // T' = 1, P' = 0, S' = (S - P) / (T - P) to keep cancellation small.
    let s_norm = (s - p) / (t - p);
    let gap = |d: f64| {
        let stick = stick_payoff(1.0, s_norm, d).expect("bisection stays inside [0, 1)");
        let deviate = deviate_payoff(1.0, 0.0, d).expect("bisection stays inside [0, 1)");
        stick - deviate
    };

    const LO: f64 = 1e-12;
    const HI: f64 = 1.0 - 1e-12;
    if gap(HI) <= 0.0 {
        return CriticalDiscount {
            solved: None,
            reward_gap_ratio,
            diagnostic: Some(format!(
                "P - S = {} >= T - P = {}: deviating pays at least as much for every discount below 1",
                p - s,
                t - p
            )),
        };
    }
    // P = S puts the root at 0, where the gap underflows to exactly zero
    if gap(LO) >= 0.0 {
        return CriticalDiscount {
            solved: Some(0.0),
            reward_gap_ratio,
            diagnostic: None,
        };
    }
    let (mut lo, mut hi) = (LO, HI);
    while hi - lo > THRESHOLD_TOLERANCE * 1e-2 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    CriticalDiscount {
        solved: Some(0.5 * (lo + hi)),
        reward_gap_ratio,
        diagnostic: None,
    }
}

/// Which player defects first in an alternation agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    First,
    Second,
}

impl Parity {
    pub fn other(self) -> Parity {
        match self {
            Parity::First => Parity::Second,
            Parity::Second => Parity::First,
        }
    }

    /// Action the agreement prescribes in round `round` (0-based).
    pub fn pattern(self, round: usize) -> Action {
        let even = round % 2 == 0;
        match (self, even) {
            (Parity::First, true) | (Parity::Second, false) => Action::Defect,
            _ => Action::Cooperate,
        }
    }
}

/// Length of retaliation after the opponent breaks the alternation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Punishment {
    Rounds(u32),
    Forever,
}

impl Default for Punishment {
    fn default() -> Self {
        Punishment::Forever
    }
}

/// Seat in a match. Resolves an Alternator with no explicit parity:
/// the X seat defects first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seat {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy {
    AllC,
    AllD,
    TitForTat,
    GrimTrigger,
    WinStayLoseShift,
    /// Turn-taking on (D, C) / (C, D). Any move by the opponent that breaks
    /// the agreement is answered with `punishment` rounds of defection.
    Alternator {
        #[serde(default)]
        parity: Option<Parity>,
        #[serde(default)]
        punishment: Punishment,
    },
}

impl Strategy {
    pub fn alternator(parity: Parity) -> Strategy {
        Strategy::Alternator {
            parity: Some(parity),
            punishment: Punishment::Forever,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Strategy::AllC => "all_c".into(),
            Strategy::AllD => "all_d".into(),
            Strategy::TitForTat => "tit_for_tat".into(),
            Strategy::GrimTrigger => "grim_trigger".into(),
            Strategy::WinStayLoseShift => "wsls".into(),
            Strategy::Alternator { parity, punishment } => {
                let parity = match parity {
                    Some(Parity::First) => "first",
                    Some(Parity::Second) => "second",
                    None => "seat",
                };
                match punishment {
                    Punishment::Forever => format!("alternator[{parity}]"),
                    Punishment::Rounds(n) => format!("alternator[{parity},{n}]"),
                }
            }
        }
    }

    /// Next action given both full histories (equal length).
    pub fn decide(&self, seat: Seat, own: &[Action], opp: &[Action]) -> Action {
        debug_assert_eq!(own.len(), opp.len());
        match *self {
            Strategy::AllC => Action::Cooperate,
            Strategy::AllD => Action::Defect,
            Strategy::TitForTat => opp.last().copied().unwrap_or(Action::Cooperate),
            Strategy::GrimTrigger => {
                if opp.contains(&Action::Defect) {
                    Action::Defect
                } else {
                    Action::Cooperate
                }
            }
            Strategy::WinStayLoseShift => match (own.last(), opp.last()) {
                (Some(&mine), Some(&theirs)) => {
                    // T or R follow an opponent cooperation; P or S a defection.
                    if theirs == Action::Cooperate {
                        mine
                    } else {
                        mine.flip()
                    }
                }
                _ => Action::Cooperate,
            },
            Strategy::Alternator { parity, punishment } => {
                let mine = parity.unwrap_or(match seat {
                    Seat::X => Parity::First,
                    Seat::Y => Parity::Second,
                });
                alternator_move(mine, punishment, own, opp)
            }
        }
    }
}

/// Replays the agreement over the shared history. Both sides' punishment
/// windows are tracked so that a justified retaliation is not itself read as
/// a breach.
fn alternator_move(mine: Parity, punishment: Punishment, own: &[Action], opp: &[Action]) -> Action {
    let theirs = mine.other();
    let window_end = |r: usize| match punishment {
        Punishment::Forever => usize::MAX,
        Punishment::Rounds(n) => r + 1 + n as usize,
    };
    // exclusive end of the rounds in which each side is entitled to defect
    let mut i_punish_until = 0usize;
    let mut they_punish_until = 0usize;
    for round in 0..own.len() {
        let their_due = if round < they_punish_until {
            Action::Defect
        } else {
            theirs.pattern(round)
        };
        let my_due = if round < i_punish_until {
            Action::Defect
        } else {
            mine.pattern(round)
        };
        if opp[round] != their_due {
            i_punish_until = i_punish_until.max(window_end(round));
        }
        if own[round] != my_due {
            they_punish_until = they_punish_until.max(window_end(round));
        }
    }
    if own.len() < i_punish_until {
        Action::Defect
    } else {
        mine.pattern(own.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub horizon: usize,
    pub discount: f64,
    #[serde(default)]
    pub seed: u64,
}

impl MatchConfig {
    pub fn new(horizon: usize, discount: f64, seed: u64) -> Result<Self> {
        let cfg = MatchConfig {
            horizon,
            discount,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        check_discount(self.discount)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOutcome {
    pub x: Action,
    pub y: Action,
    pub payoff_x: f64,
    pub payoff_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub trajectory: Vec<RoundOutcome>,
    pub discounted_payoffs: (f64, f64),
    pub total_payoffs: (f64, f64),
    /// Mean payoff per player per round, comparable against R.
    pub group_payoff_per_round: f64,
}

impl MatchResult {
    pub fn actions(&self) -> Vec<(Action, Action)> {
        self.trajectory.iter().map(|r| (r.x, r.y)).collect()
    }

    /// Writes `round,action_x,action_y,payoff_x,payoff_y` with 1-based rounds.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "action_x", "action_y", "payoff_x", "payoff_y"])?;
        for (k, r) in self.trajectory.iter().enumerate() {
            w.write_record([
                (k + 1).to_string(),
                r.x.to_string(),
                r.y.to_string(),
                csvio::real(r.payoff_x),
                csvio::real(r.payoff_y),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub fn play_match(
    x: &Strategy,
    y: &Strategy,
    payoff: &PayoffMatrix,
    config: &MatchConfig,
) -> Result<MatchResult> {
    config.validate()?;
    let mut hist_x = Vec::with_capacity(config.horizon);
    let mut hist_y = Vec::with_capacity(config.horizon);
    let mut trajectory = Vec::with_capacity(config.horizon);
    let mut discounted = (0.0, 0.0);
    let mut totals = (0.0, 0.0);
    for round in 0..config.horizon {
        let ax = x.decide(Seat::X, &hist_x, &hist_y);
        let ay = y.decide(Seat::Y, &hist_y, &hist_x);
        let px = payoff.payoff(ax, ay);
        let py = payoff.payoff(ay, ax);
        let weight = config.discount.powi(round as i32);
        discounted.0 += weight * px;
        discounted.1 += weight * py;
        totals.0 += px;
        totals.1 += py;
        hist_x.push(ax);
        hist_y.push(ay);
        trajectory.push(RoundOutcome {
            x: ax,
            y: ay,
            payoff_x: px,
            payoff_y: py,
        });
    }
    let group_payoff_per_round = (totals.0 + totals.1) / (2.0 * config.horizon as f64);
    Ok(MatchResult {
        trajectory,
        discounted_payoffs: discounted,
        total_payoffs: totals,
        group_payoff_per_round,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    pub x: usize,
    pub y: usize,
    pub discounted: (f64, f64),
    pub totals: (f64, f64),
    pub group_payoff_per_round: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standing {
    pub index: usize,
    pub label: String,
    pub mean_discounted: f64,
    pub mean_group: f64,
    /// Seats played; a mirror match counts twice.
    pub appearances: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub standings: Vec<Standing>,
    pub pairings: Vec<Pairing>,
}

impl ScoreTable {
    pub fn pairing(&self, x: usize, y: usize) -> Option<&Pairing> {
        self.pairings.iter().find(|p| p.x == x && p.y == y)
    }

    pub fn write_standings_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "strategy", "mean_discounted", "mean_group"])?;
        for s in &self.standings {
            w.write_record([
                s.index.to_string(),
                s.label.clone(),
                csvio::real(s.mean_discounted),
                csvio::real(s.mean_group),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_pairings_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "x",
            "y",
            "discounted_x",
            "discounted_y",
            "total_x",
            "total_y",
            "group_per_round",
        ])?;
        for p in &self.pairings {
            w.write_record([
                p.x.to_string(),
                p.y.to_string(),
                csvio::real(p.discounted.0),
                csvio::real(p.discounted.1),
                csvio::real(p.totals.0),
                csvio::real(p.totals.1),
                csvio::real(p.group_payoff_per_round),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Round robin over all ordered pairs, mirror matches included.
pub fn tournament(
    strategies: &[Strategy],
    payoff: &PayoffMatrix,
    config: &MatchConfig,
) -> Result<ScoreTable> {
    if strategies.len() < 2 {
        return Err(Error::invalid("a tournament needs at least two strategies"));
    }
    let n = strategies.len();
    let mut sum_disc = vec![0.0; n];
    let mut sum_group = vec![0.0; n];
    let mut seats = vec![0usize; n];
    let mut pairings = Vec::with_capacity(n * n);
    for (xi, xs) in strategies.iter().enumerate() {
        for (yi, ys) in strategies.iter().enumerate() {
            let res = play_match(xs, ys, payoff, config)?;
            sum_disc[xi] += res.discounted_payoffs.0;
            sum_disc[yi] += res.discounted_payoffs.1;
            sum_group[xi] += res.group_payoff_per_round;
            sum_group[yi] += res.group_payoff_per_round;
            seats[xi] += 1;
            seats[yi] += 1;
            pairings.push(Pairing {
                x: xi,
                y: yi,
                discounted: res.discounted_payoffs,
                totals: res.total_payoffs,
                group_payoff_per_round: res.group_payoff_per_round,
            });
        }
    }
    let standings = strategies
        .iter()
        .enumerate()
        .map(|(k, s)| Standing {
            index: k,
            label: s.label(),
            mean_discounted: sum_disc[k] / seats[k] as f64,
            mean_group: sum_group[k] / seats[k] as f64,
            appearances: seats[k],
        })
        .collect();
    Ok(ScoreTable {
        standings,
        pairings,
    })
}
