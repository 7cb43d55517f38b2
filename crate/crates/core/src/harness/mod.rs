//! Experiment harness: loads a [`ExperimentConfig`], runs it, and writes CSVs,
//! a re-loadable `manifest.toml` and a `report.md` into the output directory.

pub mod config;
pub mod env;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::csvio::{self, real};
use crate::error::{Error, Result};
use crate::ipd::{critical_discount, play_match, tournament, MatchConfig};
use crate::mfg::output::{write_equilibrium, write_simulation};
use crate::mfg::{simulate_population, solve_equilibrium, EquilibriumResult, MfgParams, SolverOptions};
use crate::roles::{write_ledger_csv, FairnessStats, SwitchMode, SwitchPolicy};

pub use config::{ExperimentConfig, ExperimentKind, RunMetadata};
pub use env::{delta_scan, intersection_episode, DungeonEnv, IntersectionEnv, PolicySource, ScanRow};

use config::IntersectionPolicy;

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    /// Resolved config plus the `[run]` metadata, as written to `manifest.toml`.
    pub manifest: ExperimentConfig,
    /// CSV files written, relative to `out_dir`.
    pub files: Vec<String>,
    pub report: String,
}

struct Outcome {
    files: Vec<String>,
    report: String,
    meta: RunMetadata,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            files: Vec::new(),
            report: String::new(),
            meta: RunMetadata {
                version: env!("CARGO_PKG_VERSION").to_string(),
                ..RunMetadata::default()
            },
        }
    }
}

/// Runs `config` and writes every artifact into `out`, creating it if needed.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<RunArtifacts> {
    let resolved = config.resolved()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut outcome = Outcome::new();
    execute(&resolved, out, &mut outcome).map_err(|e| match e {
        Error::Numerical(m) => Error::Numerical(format!("{}: {m}", resolved.kind)),
        other => other,
    })?;
    outcome.meta.files = outcome.files.clone();
    let mut manifest = resolved;
    manifest.out = None;
    manifest.run = Some(outcome.meta);
    let text = manifest.to_toml_string()?;
    let path = out.join("manifest.toml");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    let report = format!("# {} run\n\nseed: {}\n\n{}", manifest.kind, manifest.seed, outcome.report);
    let path = out.join("report.md");
    fs::write(&path, &report).map_err(|e| Error::io(&path, e))?;
    Ok(RunArtifacts {
        out_dir: out.to_path_buf(),
        manifest,
        files: outcome.files,
        report,
    })
}

fn create_file(out: &Path, name: &str, files: &mut Vec<String>) -> Result<std::io::BufWriter<fs::File>> {
    let path = out.join(name);
    let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    files.push(name.to_string());
    Ok(std::io::BufWriter::new(f))
}

fn execute(c: &ExperimentConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let section = |name: &str| Error::invalid(format!("resolved config lacks [{name}]"));
    match c.kind {
        ExperimentKind::IpdMatch => {
            let payoff = c.payoff.ok_or_else(|| section("payoff"))?;
            let m = c.ipd_match.as_ref().ok_or_else(|| section("match"))?;
            let cfg = MatchConfig::new(m.horizon, m.discount, c.seed)?;
            let res = play_match(&m.x, &m.y, &payoff, &cfg)?;
            res.write_csv(create_file(out, "match.csv", &mut o.files)?)?;
            let r = &mut o.report;
            payoff_summary(r, &payoff);
            let _ = writeln!(r, "## Match\n");
            let _ = writeln!(r, "| seat | strategy | discounted | total |\n|---|---|---|---|");
            let _ = writeln!(
                r,
                "| x | {} | {} | {} |",
                m.x.label(),
                real(res.discounted_payoffs.0),
                real(res.total_payoffs.0)
            );
            let _ = writeln!(
                r,
                "| y | {} | {} | {} |\n",
                m.y.label(),
                real(res.discounted_payoffs.1),
                real(res.total_payoffs.1)
            );
            let _ = writeln!(r, "group payoff per player per round: {}", real(res.group_payoff_per_round));
        }
        ExperimentKind::IpdTournament => {
            let payoff = c.payoff.ok_or_else(|| section("payoff"))?;
            let t = c.tournament.as_ref().ok_or_else(|| section("tournament"))?;
            let cfg = MatchConfig::new(t.horizon, t.discount, c.seed)?;
            let table = tournament(&t.strategies, &payoff, &cfg)?;
            table.write_standings_csv(create_file(out, "standings.csv", &mut o.files)?)?;
            table.write_pairings_csv(create_file(out, "pairings.csv", &mut o.files)?)?;
            let r = &mut o.report;
            payoff_summary(r, &payoff);
            let _ = writeln!(r, "## Standings\n");
            let _ = writeln!(r, "| # | strategy | mean discounted | mean group per round |\n|---|---|---|---|");
            for s in &table.standings {
                let _ = writeln!(
                    r,
                    "| {} | {} | {} | {} |",
                    s.index,
                    s.label,
                    real(s.mean_discounted),
                    real(s.mean_group)
                );
            }
        }
        ExperimentKind::DeltaScan => {
            let payoff = c.payoff.ok_or_else(|| section("payoff"))?;
            let grid = c.scan.as_ref().ok_or_else(|| section("scan"))?.grid()?;
            let rows = delta_scan(&payoff, &grid)?;
            let mut w = csv::Writer::from_writer(create_file(out, "delta_scan.csv", &mut o.files)?);
            w.write_record(env::SCAN_COLUMNS)?;
            for row in &rows {
                w.write_record([
                    real(row.delta),
                    real(row.stick),
                    real(row.deviate),
                    row.sign.to_string(),
                    row.above_solved.to_string(),
                    row.above_reward_gap_ratio.to_string(),
                ])?;
            }
            csvio::finish(w)?;
            let r = &mut o.report;
            payoff_summary(r, &payoff);
            let first = rows.iter().find(|row| row.sign > 0).map(|row| real(row.delta));
            let agree = rows.iter().filter(|row| (row.sign > 0) == row.above_solved).count();
            let _ = writeln!(r, "## Scan\n");
            let _ = writeln!(r, "grid points: {}", rows.len());
            let _ = writeln!(r, "first delta with stick > deviate: {}", first.unwrap_or_else(|| "none".into()));
            let _ = writeln!(r, "rows where the sign agrees with the solved threshold: {agree} of {}", rows.len());
        }
        ExperimentKind::MfgSolve | ExperimentKind::MfgSimulate => {
            let params = c.mfg.clone().ok_or_else(|| section("mfg"))?;
            let options = c.solver.ok_or_else(|| section("solver"))?;
            let result = solve(&params, &options, o)?;
            write_equilibrium(&result, out)?;
            o.files.extend(["policy.csv", "flow.csv", "values.csv", "diag.csv"].map(String::from));
            equilibrium_summary(&mut o.report, &params, &options, &result);
            if c.kind == ExperimentKind::MfgSimulate {
                let episodes = c.simulation.ok_or_else(|| section("simulation"))?.episodes;
                let stats = simulate_population(&params, &result.policy, episodes, c.seed)?;
                write_simulation(&stats, params.n, out)?;
                o.files.push("simulation.csv".into());
                let r = &mut o.report;
                let _ = writeln!(r, "\n## Finite population\n");
                let _ = writeln!(r, "episodes: {episodes}");
                let _ = writeln!(r, "sup_t |empirical E[j] - mean-field E[j]| / N: {}", real(stats.deviation));
            }
        }
        ExperimentKind::RolesRun => {
            let params = c.mfg.clone().ok_or_else(|| section("mfg"))?;
            let s = c.intersection.ok_or_else(|| section("intersection"))?;
            let movers = s.movers.unwrap_or(params.threshold);
            let window = s.window.unwrap_or(params.n - 1);
            let source = match s.policy {
                IntersectionPolicy::Static => PolicySource::Static { movers },
                IntersectionPolicy::Rotation => PolicySource::Rotation { movers },
                IntersectionPolicy::Stochastic => {
                    let mut switch = SwitchPolicy::for_population(params.n, params.threshold)?;
                    switch.mode = SwitchMode::StochasticSigmoid;
                    switch.window = window;
                    switch.tau_s = s.tau_s;
                    if let Some(s0) = s.s0 {
                        switch.s0 = s0;
                    }
                    PolicySource::Stochastic { movers, switch }
                }
                IntersectionPolicy::Mfg => {
                    let options = c.solver.ok_or_else(|| section("solver"))?;
                    let result = solve(&params, &options, o)?;
                    PolicySource::Mfg(result.policy)
                }
            };
            let env = IntersectionEnv {
                params: params.clone(),
                rounds: s.rounds,
                window,
                credit: s.credit,
                seed: c.seed,
            };
            let log = intersection_episode(&env, &source)?;
            let mut w = csv::Writer::from_writer(create_file(out, "rounds.csv", &mut o.files)?);
            w.write_record(env::INTERSECTION_COLUMNS)?;
            for row in &log.rounds {
                w.write_record([
                    row.round.to_string(),
                    row.movers.to_string(),
                    row.passed.to_string(),
                    real(row.group_outcome),
                ])?;
            }
            csvio::finish(w)?;
            write_ledger_csv(&log.ledger_rows, create_file(out, "ledger.csv", &mut o.files)?)?;
            let r = &mut o.report;
            let _ = writeln!(r, "## Intersection\n");
            let _ = writeln!(r, "agents: {}, threshold: {}, rounds: {}, policy: {:?}\n", params.n, params.threshold, s.rounds, s.policy);
            let passed: usize = log.rounds.iter().map(|x| x.passed).sum();
            let _ = writeln!(r, "agents passed in total: {passed}\n");
            fairness_table(r, "moves", &log.fairness, true);
        }
        ExperimentKind::Dungeon => {
            let d = c.dungeon.ok_or_else(|| section("dungeon"))?;
            let env = DungeonEnv {
                n_agents: d.n_agents,
                rounds: d.rounds,
                success_reward: d.success_reward,
                sacrifice_cost: d.sacrifice_cost,
                rotation: d.rotation,
                window: d.window.unwrap_or(d.n_agents - 1),
                credit: d.credit,
            };
            let log = env.run()?;
            let mut w = csv::Writer::from_writer(create_file(out, "rounds.csv", &mut o.files)?);
            w.write_record(env::DUNGEON_COLUMNS)?;
            for row in &log.rounds {
                w.write_record([
                    row.round.to_string(),
                    row.sacrificer.to_string(),
                    row.escaped.to_string(),
                    real(row.group_outcome),
                ])?;
            }
            csvio::finish(w)?;
            write_ledger_csv(&log.ledger_rows, create_file(out, "ledger.csv", &mut o.files)?)?;
            let r = &mut o.report;
            let _ = writeln!(r, "## Dungeon\n");
            let _ = writeln!(r, "agents: {}, rounds: {}, rotation: {:?}\n", d.n_agents, d.rounds, d.rotation);
            fairness_table(r, "sacrifices", &log.fairness, false);
        }
    }
    Ok(())
}

fn solve(params: &MfgParams, options: &SolverOptions, o: &mut Outcome) -> Result<EquilibriumResult> {
    let result = solve_equilibrium(params, options)?;
    o.meta.converged = Some(result.converged());
    o.meta.status = Some(format!("{:?}", result.status).to_lowercase());
    o.meta.iterations = Some(result.iterations);
    o.meta.exploitability = Some(result.exploitability);
    Ok(result)
}

fn payoff_summary(r: &mut String, payoff: &crate::ipd::PayoffMatrix) {
    let cd = critical_discount(payoff);
    let _ = writeln!(r, "## Payoffs\n");
    let _ = writeln!(
        r,
        "T = {}, R = {}, P = {}, S = {}; regime: {}\n",
        payoff.temptation(),
        payoff.reward(),
        payoff.punishment(),
        payoff.sucker(),
        payoff.regime()
    );
    let _ = writeln!(r, "| threshold | value |\n|---|---|");
    let solved = cd.solved.map(real).unwrap_or_else(|| "none".into());
    let _ = writeln!(r, "| solved root of stick - deviate | {solved} |");
    let _ = writeln!(r, "| reward-gap ratio (P - S) / (T - R) | {} |\n", real(cd.reward_gap_ratio));
    if let Some(d) = cd.diagnostic {
        let _ = writeln!(r, "{d}\n");
    }
}

fn equilibrium_summary(r: &mut String, p: &MfgParams, opts: &SolverOptions, res: &EquilibriumResult) {
    let last = res.residual_history.last();
    let _ = writeln!(r, "## Equilibrium\n");
    let _ = writeln!(
        r,
        "N = {}, i = {}, delta = {}, tau = {}, H = {}, damping = {}\n",
        p.n, p.threshold, p.discount, p.temperature, p.horizon, opts.damping
    );
    let _ = writeln!(r, "| quantity | value |\n|---|---|");
    let _ = writeln!(r, "| status | {:?} |", res.status);
    let _ = writeln!(r, "| iterations | {} |", res.iterations);
    if let Some(l) = last {
        let _ = writeln!(r, "| policy residual | {} |", real(l.policy));
        let _ = writeln!(r, "| distribution residual | {} |", real(l.distribution));
    }
    let _ = writeln!(r, "| E[j] at t = H | {} |", real(res.final_mean_state()));
    let _ = writeln!(r, "| exploitability | {} |", real(res.exploitability));
}

fn fairness_table(r: &mut String, what: &str, f: &FairnessStats, max_role: bool) {
    let _ = writeln!(r, "| agent | {what} | credited |\n|---|---|---|");
    let counts = if max_role { &f.max_reward_counts } else { &f.sacrifice_counts };
    for (id, (count, credit)) in counts.iter().zip(&f.credited).enumerate() {
        let _ = writeln!(r, "| {id} | {count} | {} |", real(*credit));
    }
    let _ = writeln!(r, "\nmax-reward role count gap (max - min): {}", f.max_reward_gap);
    let _ = writeln!(r, "credited spread: {}, std: {}", real(f.credited_spread), real(f.credited_std));
}
