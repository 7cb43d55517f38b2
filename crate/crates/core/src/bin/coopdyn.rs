use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coopdyn::harness::{self, ExperimentConfig, ExperimentKind};
use coopdyn::Error;

/// Run cooperation-dynamics experiments from TOML configs.
#[derive(Parser)]
#[command(name = "coopdyn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one iterated prisoner's dilemma match.
    IpdMatch(RunArgs),
    /// Round robin over a list of strategies.
    IpdTournament(RunArgs),
    /// Stick and deviate payoffs over a grid of discount factors.
    DeltaScan(RunArgs),
    /// Solve the intersection mean-field game.
    MfgSolve(RunArgs),
    /// Solve, then simulate a finite population under the solved policy.
    MfgSimulate(RunArgs),
    /// Intersection rounds under a role rotation policy.
    RolesRun(RunArgs),
    /// Dungeon escape with one sacrificer per round.
    Dungeon(RunArgs),
    /// Run any config or manifest and print its report.
    Report(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `out`, then `runs/<kind>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Error::Config { issues } => {
                    eprintln!("error: invalid configuration");
                    for issue in issues {
                        eprintln!("  - {issue}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> coopdyn::Result<()> {
    let (expected, args, print_report) = match command {
        Command::IpdMatch(a) => (Some(ExperimentKind::IpdMatch), a, false),
        Command::IpdTournament(a) => (Some(ExperimentKind::IpdTournament), a, false),
        Command::DeltaScan(a) => (Some(ExperimentKind::DeltaScan), a, false),
        Command::MfgSolve(a) => (Some(ExperimentKind::MfgSolve), a, false),
        Command::MfgSimulate(a) => (Some(ExperimentKind::MfgSimulate), a, false),
        Command::RolesRun(a) => (Some(ExperimentKind::RolesRun), a, false),
        Command::Dungeon(a) => (Some(ExperimentKind::Dungeon), a, false),
        Command::Report(a) => (None, a, true),
    };
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(kind) = expected {
        if config.kind != kind {
            return Err(Error::Config {
                issues: vec![format!("config kind is {} but the subcommand runs {kind}", config.kind)],
            });
        }
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = args
        .out
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| Path::new("runs").join(config.kind.name()));
    let artifacts = harness::run(&config, &out)?;
    if print_report {
        print!("{}", artifacts.report);
    } else {
        println!("{} -> {}", config.kind, artifacts.out_dir.display());
        for f in &artifacts.files {
            println!("  {f}");
        }
    }
    Ok(())
}
