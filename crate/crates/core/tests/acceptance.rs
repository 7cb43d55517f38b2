//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Tolerances and time limits are fixed.

mod support;

use std::time::{Duration, Instant};

use coopdyn::harness::{run, ExperimentConfig, ExperimentKind};
use coopdyn::ipd::{
    classify, critical_discount, deviate_payoff, play_match, stick_payoff, MatchConfig, Parity, PayoffMatrix, Regime,
    Strategy,
};
use coopdyn::mfg::{simulate_population, solve_equilibrium, transition_distribution, MfgParams, SolverOptions};
use coopdyn::roles::{
    deterministic_assign, sigmoid_switch_probability, stochastic_assign, RotatedRole, RotationLedger, SwitchPolicy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::scratch_mfg::ScratchInstance;

type Outcome = Result<String, String>;

fn random_payoff(rng: &mut ChaCha8Rng) -> PayoffMatrix {
    let s = rng.gen_range(-10.0..10.0);
    let gaps: [f64; 3] = [rng.gen_range(0.01..5.0), rng.gen_range(0.01..5.0), rng.gen_range(0.01..5.0)];
    PayoffMatrix::new(s + gaps[0] + gaps[1] + gaps[2], s + gaps[0] + gaps[1], s + gaps[0], s).unwrap()
}

fn critical_discount_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut separated = 0;
    for _ in 0..10_000 {
        let pm = random_payoff(&mut rng);
        let (t, r, p, s) = (pm.temptation(), pm.reward(), pm.punishment(), pm.sucker());
        let oracle = (p - s) / (t - p);
        let cd = critical_discount(&pm);
        match cd.solved {
            Some(d) => worst = worst.max((d - oracle).abs()),
            None if oracle >= 1.0 => continue,
            None => return Err(format!("no root found but (P-S)/(T-P) = {oracle}")),
        }
        let solved = cd.solved.unwrap();
        let formula = (p - s) / (t - r);
        if (formula - oracle).abs() > 1e-6 && formula < 1.0 {
            // a discount between the two candidates: the solved root decides the sign
            let mid = 0.5 * (formula + solved);
            let gap = stick_payoff(t, s, mid).unwrap() - deviate_payoff(t, p, mid).unwrap();
            if (gap > 0.0) != (mid > solved) {
                return Err(format!("sign at delta = {mid} contradicts solved root {solved}"));
            }
            separated += 1;
        }
    }
    if worst < 1e-8 {
        Ok(format!("max |solved - (P-S)/(T-P)| = {worst:.2e}; {separated} matrices separated by the solved root"))
    } else {
        Err(format!("max |solved - (P-S)/(T-P)| = {worst:.2e} exceeds 1e-8"))
    }
}

fn series_vs_closed_form() -> Outcome {
    let (t, p, s) = (5.0, 1.0, 0.0);
    let mut failing = Vec::new();
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let delta = 0.99 * k as f64 / 99.0;
        let stick_series: f64 = (0..500).map(|n| (if n % 2 == 0 { t } else { s }) * delta.powi(n)).sum();
        let dev_series: f64 = t + (1..500).map(|n| p * delta.powi(n)).sum::<f64>();
        let err = (stick_payoff(t, s, delta).unwrap() - stick_series)
            .abs()
            .max((deviate_payoff(t, p, delta).unwrap() - dev_series).abs());
        worst = worst.max(err);
        if err >= 1e-8 {
            failing.push(delta);
        }
    }
    if failing.is_empty() {
        Ok(format!("max error {worst:.2e} over 100 grid points"))
    } else {
        Err(format!(
            "{} of 100 grid points exceed 1e-8 (first at delta = {:.4}); max error {worst:.2e}",
            failing.len(),
            failing[0]
        ))
    }
}

fn alternation_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = MatchConfig::new(100, 0.9, 0).unwrap();
    let mut sampled = 0;
    while sampled < 1_000 {
        let pm = random_payoff(&mut rng);
        if classify(&pm) != Regime::AlternationFavoring {
            continue;
        }
        sampled += 1;
        let res = play_match(&Strategy::alternator(Parity::First), &Strategy::alternator(Parity::Second), &pm, &cfg)
            .unwrap();
        let want = 0.5 * (pm.temptation() + pm.sucker());
        if (res.group_payoff_per_round - want).abs() > 1e-12 * want.abs().max(1.0) {
            return Err(format!("group payoff {} != (T+S)/2 = {want}", res.group_payoff_per_round));
        }
        if !(res.group_payoff_per_round > pm.reward()) {
            return Err(format!("group payoff {} does not exceed R = {}", res.group_payoff_per_round, pm.reward()));
        }
    }
    Ok("1000 alternation-favoring matrices, group payoff (T+S)/2 > R".into())
}

fn binomial_brute_force() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 2..=10usize {
        for a in 0..2usize {
            for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let got = transition_distribution(0, a, p, n).map_err(|e| e.to_string())?;
                let mut want = vec![0.0; n + 1];
                for mask in 0u32..(1 << (n - 1)) {
                    let m = mask.count_ones() as usize;
                    want[a + m] += p.powi(m as i32) * (1.0 - p).powi((n - 1 - m) as i32);
                }
                for (g, w) in got.probs().iter().zip(&want) {
                    worst = worst.max((g - w).abs());
                }
            }
        }
    }
    if worst <= 1e-12 {
        Ok(format!("max error {worst:.2e}"))
    } else {
        Err(format!("max error {worst:.2e} exceeds 1e-12"))
    }
}

fn equilibrium_certificate() -> Outcome {
    let res = solve_equilibrium(&MfgParams::default(), &SolverOptions::default()).map_err(|e| e.to_string())?;
    let last = res.residual_history.last().copied().ok_or("no iterations")?;
    let detail = format!(
        "{} iterations, residuals {:.2e}/{:.2e}, exploitability {:.6}",
        res.iterations, last.policy, last.distribution, res.exploitability
    );
    if res.iterations <= 500 && last.policy < 1e-8 && last.distribution < 1e-8 && res.exploitability < 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scratch_equivalence() -> Outcome {
    let p = MfgParams {
        n: 4,
        threshold: 2,
        horizon: 3,
        ..MfgParams::default()
    };
    let opts = SolverOptions::default();
    let ours = solve_equilibrium(&p, &opts).map_err(|e| e.to_string())?;
    let t = p.reward_table;
    let theirs = ScratchInstance {
        n: p.n,
        threshold: p.threshold,
        discount: p.discount,
        temperature: p.temperature,
        damping: opts.damping,
        horizon: p.horizon,
        alpha: p.alpha,
        baseline: p.baseline,
        table: [t.move_uncongested, t.wait_uncongested, t.wait_congested, t.move_congested],
        initial: p.initial_distribution().unwrap().probs().to_vec(),
    }
    .solve(opts.tol, opts.max_iter);
    let mut worst: f64 = 0.0;
    for t in 0..p.horizon {
        for j in 0..=p.n {
            let row = ours.policy.row(t, j);
            worst = worst.max((row[0] - theirs.policy[t][j].0).abs());
            worst = worst.max((row[1] - theirs.policy[t][j].1).abs());
        }
    }
    for t in 0..=p.horizon {
        for j in 0..=p.n {
            worst = worst.max((ours.distribution_flow[t][j] - theirs.flow[t][j]).abs());
        }
    }
    if worst < 1e-8 {
        Ok(format!("max elementwise difference {worst:.2e}"))
    } else {
        Err(format!("max elementwise difference {worst:.2e}"))
    }
}

fn mean_field_consistency() -> Outcome {
    let p = MfgParams {
        n: 1000,
        threshold: 400,
        ..MfgParams::default()
    };
    // at this size the default damping of 0.5 cycles; a smaller step settles monotonically
    let opts = SolverOptions {
        damping: 0.05,
        ..SolverOptions::default()
    };
    let res = solve_equilibrium(&p, &opts).map_err(|e| e.to_string())?;
    if !res.converged() {
        return Err(format!("solver stopped with {:?}", res.status));
    }
    let stats = simulate_population(&p, &res.policy, 200, 7).map_err(|e| e.to_string())?;
    let detail = format!("sup_t deviation {:.2e} after {} solver iterations", stats.deviation, res.iterations);
    if stats.deviation < 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rotation_fairness() -> Outcome {
    for n in [3usize, 5, 8] {
        let mut ledger = RotationLedger::new(n, n - 1, RotatedRole::Sacrifice).unwrap();
        let mut order = Vec::new();
        for _ in 0..10 * n {
            order.push(deterministic_assign(&mut ledger, 1).map_err(|e| e.to_string())?.selected[0]);
        }
        if let Some(a) = ledger.agents().iter().find(|a| a.times_in_sacrifice_role != 10) {
            return Err(format!("N = {n}: agent {} sacrificed {} times", a.id, a.times_in_sacrifice_role));
        }
        if n == 3 && order[..3] != [0, 1, 2] {
            return Err(format!("N = 3 opening {:?}", &order[..3]));
        }
    }
    Ok("every agent sacrificed 10 times; N = 3 opens 0, 1, 2".into())
}

fn sigmoid_statistics() -> Outcome {
    let policy = SwitchPolicy::for_population(4, 2).unwrap();
    let s0 = policy.s0 as u32;
    let trials = 10_000;
    let mut switched = 0;
    for seed in 0..trials {
        let mut ledger = RotationLedger::with_roles(&[true], &[s0], policy.window, RotatedRole::MaxReward).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = stochastic_assign(&mut ledger, &policy, &mut rng).map_err(|e| e.to_string())?;
        if a.selected.is_empty() {
            switched += 1;
        }
    }
    let freq = switched as f64 / trials as f64;
    let monotone = (0..2 * s0).all(|k| {
        sigmoid_switch_probability(k + 1, &policy) > sigmoid_switch_probability(k, &policy)
    });
    let detail = format!("switch frequency {freq:.4} at streak s0 = {s0}; monotone on 0..={}", 2 * s0);
    if (freq - 0.5).abs() <= 0.02 && monotone {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn manifest_reproducibility() -> Outcome {
    let dir = std::env::temp_dir().join(format!("coopdyn-acceptance-{}", std::process::id()));
    let outcome = (|| {
        for kind in ExperimentKind::ALL {
            let mut cfg = ExperimentConfig::new(kind);
            cfg.seed = 2024;
            let base = dir.join(kind.name());
            let first = run(&cfg, &base.join("a")).map_err(|e| e.to_string())?;
            let manifest = ExperimentConfig::load(&base.join("a/manifest.toml")).map_err(|e| e.to_string())?;
            let second = run(&manifest, &base.join("b")).map_err(|e| e.to_string())?;
            for f in &first.files {
                let x = std::fs::read(first.out_dir.join(f)).map_err(|e| e.to_string())?;
                let y = std::fs::read(second.out_dir.join(f)).map_err(|e| e.to_string())?;
                if x != y {
                    return Err(format!("{kind}: {f} differs after re-running the manifest"));
                }
            }
        }
        Ok("all seven experiment kinds reproduce byte-identical CSVs".to_string())
    })();
    let _ = std::fs::remove_dir_all(&dir);
    outcome
}

fn main() {
    let criteria: [(u32, &str, Option<Duration>, fn() -> Outcome); 10] = [
        (1, "critical-discount oracle agreement", Some(Duration::from_secs(5)), critical_discount_oracle),
        (2, "series vs closed form", Some(Duration::from_secs(1)), series_vs_closed_form),
        (3, "alternation dominance", Some(Duration::from_secs(2)), alternation_dominance),
        (4, "binomial closure brute force", Some(Duration::from_secs(10)), binomial_brute_force),
        (5, "equilibrium certificate", Some(Duration::from_secs(30)), equilibrium_certificate),
        (6, "independent oracle equivalence", None, scratch_equivalence),
        (7, "mean-field consistency", Some(Duration::from_secs(60)), mean_field_consistency),
        (8, "rotation fairness", Some(Duration::from_secs(1)), rotation_fairness),
        (9, "sigmoid switching statistics", Some(Duration::from_secs(5)), sigmoid_statistics),
        (10, "manifest reproducibility", None, manifest_reproducibility),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let over = limit.is_some_and(|l| elapsed > l);
        let (status, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; took longer than {:?}", limit.unwrap())),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {id:>2} {status} {name}: {detail} [{:.2} s]", elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
