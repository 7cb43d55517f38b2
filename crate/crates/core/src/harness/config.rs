//! TOML experiment configuration.
//!
//! A config names one experiment `kind` and carries only the sections that
//! experiment reads. Omitted sections and fields take their defaults; the
//! resolved form, with every default written out, is what lands in a run's
//! `manifest.toml`, so a manifest can be fed straight back in.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ipd::{MatchConfig, Parity, PayoffMatrix, Strategy};
use crate::mfg::{MfgParams, SolverOptions};
use crate::roles::{CreditRule, SwitchMode, SwitchPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    IpdMatch,
    IpdTournament,
    DeltaScan,
    MfgSolve,
    MfgSimulate,
    RolesRun,
    Dungeon,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::IpdMatch,
        ExperimentKind::IpdTournament,
        ExperimentKind::DeltaScan,
        ExperimentKind::MfgSolve,
        ExperimentKind::MfgSimulate,
        ExperimentKind::RolesRun,
        ExperimentKind::Dungeon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::IpdMatch => "ipd_match",
            ExperimentKind::IpdTournament => "ipd_tournament",
            ExperimentKind::DeltaScan => "delta_scan",
            ExperimentKind::MfgSolve => "mfg_solve",
            ExperimentKind::MfgSimulate => "mfg_simulate",
            ExperimentKind::RolesRun => "roles_run",
            ExperimentKind::Dungeon => "dungeon",
        }
    }

    /// Sections this experiment reads.
    pub fn sections(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::IpdMatch => &["payoff", "match"],
            ExperimentKind::IpdTournament => &["payoff", "tournament"],
            ExperimentKind::DeltaScan => &["payoff", "scan"],
            ExperimentKind::MfgSolve => &["mfg", "solver"],
            ExperimentKind::MfgSimulate => &["mfg", "solver", "simulation"],
            ExperimentKind::RolesRun => &["mfg", "solver", "intersection"],
            ExperimentKind::Dungeon => &["dungeon"],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchSection {
    pub horizon: usize,
    pub discount: f64,
    pub x: Strategy,
    pub y: Strategy,
}

impl Default for MatchSection {
    fn default() -> Self {
        MatchSection {
            horizon: 50,
            discount: 0.9,
            x: Strategy::alternator(Parity::First),
            y: Strategy::alternator(Parity::Second),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TournamentSection {
    pub horizon: usize,
    pub discount: f64,
    pub strategies: Vec<Strategy>,
}

impl Default for TournamentSection {
    fn default() -> Self {
        TournamentSection {
            horizon: 50,
            discount: 0.9,
            strategies: vec![
                Strategy::AllC,
                Strategy::AllD,
                Strategy::TitForTat,
                Strategy::GrimTrigger,
                Strategy::WinStayLoseShift,
                Strategy::Alternator {
                    parity: None,
                    punishment: Default::default(),
                },
            ],
        }
    }
}

/// Discount grid: either explicit `deltas`, or `start + k * step` up to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            deltas: None,
            start: 0.0,
            stop: 0.99,
            step: 0.01,
        }
    }
}

impl ScanSection {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if let Some(d) = &self.deltas {
            if d.is_empty() {
                return Err(Error::invalid("deltas must not be empty"));
            }
            return Ok(d.clone());
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::invalid("step must be positive"));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.stop >= self.start) {
            return Err(Error::invalid("need finite start <= stop"));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        // snap to 12 decimals so points like 0.25 come out exact
        Ok((0..count)
            .map(|k| ((self.start + k as f64 * self.step) * 1e12).round() / 1e12)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationSection {
    pub episodes: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection { episodes: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntersectionPolicy {
    /// The same agents move every round.
    Static,
    /// Least-served-first rotation of k movers.
    Rotation,
    /// Sigmoid switching on role streaks, starting from the static assignment.
    Stochastic,
    /// Agents sample from the solved mean-field policy.
    Mfg,
}

/// Intersection rounds. Population size, threshold and rewards come from [mfg].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntersectionSection {
    pub rounds: usize,
    pub policy: IntersectionPolicy,
    /// Movers per round for static and rotation policies; defaults to the threshold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub movers: Option<usize>,
    /// Defaults to N - 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Defaults to C(N - 1, i).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
    pub tau_s: f64,
    pub credit: CreditRule,
}

impl Default for IntersectionSection {
    fn default() -> Self {
        IntersectionSection {
            rounds: 30,
            policy: IntersectionPolicy::Rotation,
            movers: None,
            window: None,
            s0: None,
            tau_s: 1.0,
            credit: CreditRule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DungeonRotation {
    Deterministic,
    /// Agent 0 sacrifices every round.
    Static,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DungeonSection {
    pub n_agents: usize,
    pub rounds: usize,
    pub success_reward: f64,
    pub sacrifice_cost: f64,
    pub rotation: DungeonRotation,
    /// Defaults to N - 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    pub credit: CreditRule,
}

impl Default for DungeonSection {
    fn default() -> Self {
        DungeonSection {
            n_agents: 3,
            rounds: 6,
            success_reward: 1.0,
            sacrifice_cost: 1.0,
            rotation: DungeonRotation::Deterministic,
            window: None,
            credit: CreditRule::default(),
        }
    }
}

/// Written by the harness into manifests; ignored when a manifest is loaded.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunMetadata {
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exploitability: Option<f64>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<PayoffMatrix>,
    #[serde(rename = "match", default, skip_serializing_if = "Option::is_none")]
    pub ipd_match: Option<MatchSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tournament: Option<TournamentSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mfg: Option<MfgParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intersection: Option<IntersectionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dungeon: Option<DungeonSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunMetadata>,
}

impl ExperimentConfig {
    /// Config with only the kind set; every section resolves to defaults.
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            seed: 0,
            out: None,
            payoff: None,
            ipd_match: None,
            tournament: None,
            scan: None,
            mfg: None,
            solver: None,
            simulation: None,
            intersection: None,
            dungeon: None,
            run: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut unknown = Vec::new();
        let de = toml::Deserializer::new(text);
        let parsed: std::result::Result<ExperimentConfig, _> =
            serde_ignored::deserialize(de, |path| {
                // Option layers show up as `?` segments
                let key = path.to_string().replace(".?", "");
                unknown.push(format!("unknown key `{key}`"))
            });
        let config = match parsed {
            Ok(c) => c,
            Err(e) => {
                unknown.push(e.message().trim().to_string());
                return Err(Error::Config { issues: unknown });
            }
        };
        if !unknown.is_empty() {
            return Err(Error::Config { issues: unknown });
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    fn present_sections(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.payoff.is_some() {
            out.push("payoff");
        }
        if self.ipd_match.is_some() {
            out.push("match");
        }
        if self.tournament.is_some() {
            out.push("tournament");
        }
        if self.scan.is_some() {
            out.push("scan");
        }
        if self.mfg.is_some() {
            out.push("mfg");
        }
        if self.solver.is_some() {
            out.push("solver");
        }
        if self.simulation.is_some() {
            out.push("simulation");
        }
        if self.intersection.is_some() {
            out.push("intersection");
        }
        if self.dungeon.is_some() {
            out.push("dungeon");
        }
        out
    }

    /// Every section the kind reads, filled with defaults where absent, and
    /// every optional field resolved to its concrete value.
    pub fn resolved(&self) -> Result<Self> {
        self.validate()?;
        let mut c = ExperimentConfig {
            kind: self.kind,
            seed: self.seed,
            out: self.out.clone(),
            ..ExperimentConfig::new(self.kind)
        };
        for section in self.kind.sections() {
            match *section {
                "payoff" => c.payoff = Some(self.payoff.unwrap_or_else(default_payoff)),
                "match" => c.ipd_match = Some(self.ipd_match.clone().unwrap_or_default()),
                "tournament" => c.tournament = Some(self.tournament.clone().unwrap_or_default()),
                "scan" => {
                    let scan = self.scan.clone().unwrap_or_default();
                    c.scan = Some(ScanSection {
                        deltas: Some(scan.grid()?),
                        ..scan
                    });
                }
                "mfg" => c.mfg = Some(self.mfg.clone().unwrap_or_default()),
                "solver" => c.solver = Some(self.solver.unwrap_or_default()),
                "simulation" => c.simulation = Some(self.simulation.unwrap_or_default()),
                "intersection" => {
                    let mfg = self.mfg.clone().unwrap_or_default();
                    let s = self.intersection.unwrap_or_default();
                    let switch = SwitchPolicy::for_population(mfg.n, mfg.threshold)?;
                    c.intersection = Some(IntersectionSection {
                        movers: Some(s.movers.unwrap_or(mfg.threshold)),
                        window: Some(s.window.unwrap_or(mfg.n - 1)),
                        s0: Some(s.s0.unwrap_or(switch.s0)),
                        ..s
                    });
                }
                "dungeon" => {
                    let d = self.dungeon.unwrap_or_default();
                    c.dungeon = Some(DungeonSection {
                        window: Some(d.window.unwrap_or(d.n_agents.saturating_sub(1).max(1))),
                        ..d
                    });
                }
                _ => unreachable!("unlisted section"),
            }
        }
        Ok(c)
    }

    /// Collects every problem rather than stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        let wanted = self.kind.sections();
        for s in self.present_sections() {
            if !wanted.contains(&s) {
                issues.push(format!("section [{s}] is not used by {}", self.kind));
            }
        }
        let mut check = |section: &str, r: Result<()>| {
            if let Err(e) = r {
                issues.push(format!("[{section}] {}", strip_prefix(&e)));
            }
        };
        if let Some(m) = &self.ipd_match {
            check("match", MatchConfig::new(m.horizon, m.discount, self.seed).map(|_| ()));
        }
        if let Some(t) = &self.tournament {
            check("tournament", MatchConfig::new(t.horizon, t.discount, self.seed).map(|_| ()));
            if t.strategies.len() < 2 {
                check("tournament", Err(Error::invalid("strategies needs at least two entries")));
            }
        }
        if let Some(s) = &self.scan {
            check(
                "scan",
                s.grid().and_then(|g| {
                    match g.iter().find(|d| !(d.is_finite() && (0.0..1.0).contains(*d))) {
                        Some(d) => Err(Error::invalid(format!("grid point {d} outside [0, 1)"))),
                        None => Ok(()),
                    }
                }),
            );
        }
        let mfg = self.mfg.clone().unwrap_or_default();
        if let Some(m) = &self.mfg {
            check("mfg", m.clone().checked().map(|_| ()));
        }
        if let Some(s) = &self.solver {
            check("solver", s.validate());
        }
        if let Some(s) = &self.simulation {
            if s.episodes == 0 {
                check("simulation", Err(Error::invalid("episodes must be at least 1")));
            }
        }
        if let Some(s) = &self.intersection {
            check("intersection", validate_intersection(s, &mfg));
        }
        if let Some(d) = &self.dungeon {
            check("dungeon", validate_dungeon(d));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { issues })
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("cannot serialize config: {e}")))
    }
}

pub fn default_payoff() -> PayoffMatrix {
    PayoffMatrix::new(5.0, 3.0, 1.0, 0.0).expect("valid default payoffs")
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::InvalidArgument(m) => m.clone(),
        other => other.to_string(),
    }
}

fn validate_intersection(s: &IntersectionSection, mfg: &MfgParams) -> Result<()> {
    if s.rounds == 0 {
        return Err(Error::invalid("rounds must be at least 1"));
    }
    if let Some(k) = s.movers {
        if k == 0 || k >= mfg.n {
            return Err(Error::invalid(format!("movers must satisfy 1 <= movers < {}", mfg.n)));
        }
    }
    if s.window == Some(0) {
        return Err(Error::invalid("window must be at least 1"));
    }
    if let Some(s0) = s.s0 {
        SwitchPolicy {
            mode: SwitchMode::StochasticSigmoid,
            window: 1,
            s0,
            tau_s: s.tau_s,
        }
        .validate()?;
    } else if !(s.tau_s.is_finite() && s.tau_s > 0.0) {
        return Err(Error::invalid("tau_s must be positive"));
    }
    validate_credit(&s.credit)
}

fn validate_dungeon(d: &DungeonSection) -> Result<()> {
    if d.n_agents < 2 {
        return Err(Error::invalid("n_agents must be at least 2"));
    }
    if d.rounds == 0 {
        return Err(Error::invalid("rounds must be at least 1"));
    }
    if d.window == Some(0) {
        return Err(Error::invalid("window must be at least 1"));
    }
    if !(d.success_reward.is_finite() && d.sacrifice_cost.is_finite()) {
        return Err(Error::invalid("rewards must be finite"));
    }
    validate_credit(&d.credit)
}

fn validate_credit(c: &CreditRule) -> Result<()> {
    if !c.sacrifice_bonus.is_finite() {
        return Err(Error::invalid("credit.sacrifice_bonus must be finite"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves_defaults() {
        let c = ExperimentConfig::from_toml_str("kind = \"mfg_solve\"").unwrap();
        let r = c.resolved().unwrap();
        assert_eq!(r.mfg, Some(MfgParams::default()));
        assert_eq!(r.solver, Some(SolverOptions::default()));
        assert!(r.payoff.is_none());
    }

    #[test]
    fn every_unknown_key_is_listed() {
        let text = "kind = \"mfg_solve\"\ncolour = 1\n[mfg]\nn = 10\ntau = 0.3\n[solver]\ntolerance = 1e-6\n";
        match ExperimentConfig::from_toml_str(text) {
            Err(Error::Config { issues }) => {
                assert_eq!(issues.len(), 3, "{issues:?}");
                assert!(issues.iter().any(|i| i.contains("colour")));
                assert!(issues.iter().any(|i| i.contains("mfg.tau")));
                assert!(issues.iter().any(|i| i.contains("solver.tolerance")));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn foreign_sections_and_bad_values_are_collected() {
        let text = "kind = \"dungeon\"\n[mfg]\nn = 10\n[dungeon]\nn_agents = 1\n";
        match ExperimentConfig::from_toml_str(text) {
            Err(Error::Config { issues }) => {
                assert_eq!(issues.len(), 2, "{issues:?}");
                assert!(issues[0].contains("[mfg] is not used by dungeon"));
                assert!(issues[1].contains("n_agents"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn payoff_ordering_is_a_config_error() {
        let text = "kind = \"delta_scan\"\n[payoff]\nt = 1\nr = 3\np = 1\ns = 0\n";
        assert!(matches!(ExperimentConfig::from_toml_str(text), Err(Error::Config { .. })));
    }

    #[test]
    fn scan_grid_hits_quarter_exactly() {
        let grid = ScanSection {
            start: 0.01,
            ..Default::default()
        }
        .grid()
        .unwrap();
        assert_eq!(grid.len(), 99);
        assert!(grid.contains(&0.25));
        assert!((grid[98] - 0.99).abs() < 1e-12);
        let text = "kind = \"delta_scan\"\n[scan]\ndeltas = [0.5, 1.0]\n";
        assert!(ExperimentConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        for kind in ExperimentKind::ALL {
            let r = ExperimentConfig::new(kind).resolved().unwrap();
            let text = r.to_toml_string().unwrap();
            let back = ExperimentConfig::from_toml_str(&text).unwrap();
            assert_eq!(back, r, "{kind}\n{text}");
        }
    }

    #[test]
    fn strategies_parse_from_inline_tables() {
        let text = "kind = \"ipd_match\"\n[match]\nx = { kind = \"alternator\", parity = \"second\", punishment = { rounds = 3 } }\ny = { kind = \"tit_for_tat\" }\n";
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        let m = c.ipd_match.unwrap();
        assert_eq!(m.y, Strategy::TitForTat);
        assert_eq!(
            m.x,
            Strategy::Alternator {
                parity: Some(Parity::Second),
                punishment: crate::ipd::Punishment::Rounds(3)
            }
        );
    }
}
