use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hyperdyn_cli::config::{ExperimentConfig, Overrides};
use hyperdyn_cli::experiments::{Command, Lab};
use hyperdyn_cli::verify::verify_all;
use hyperdyn_cli::CliError;

#[derive(Parser)]
#[command(name = "hyperdyn", version, about = "Numerical experiments on partially hyperbolic maps of the 3-torus")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid resolution N used by every grid-based experiment.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Tiny sizes for a quick end-to-end run.
    #[arg(long, global = true)]
    smoke: bool,
    #[command(subcommand)]
    cmd: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Classify the configured matrix and compare with root isolation.
    Classify,
    /// Shadow random pseudo-orbits and check uniqueness on closed ones.
    Shadow,
    /// Shorten random chains and compare with the linear bracket.
    Chains,
    /// Loop classes of a grid set and density of their unstable projections.
    GammaDelta,
    /// Orbit closure of a curve avoiding a ball.
    OrbitClosure,
    /// Bracket saturation of the orbit closure (or of `closure.input`).
    Saturate,
    /// Build the DA map and check support, fixed points and derivatives.
    DaBuild,
    /// Cone invariance of the DA map, with a failing control.
    Cones,
    /// Solve for the semiconjugacy and check it.
    Semiconjugacy,
    /// Correspondence between leaves of the DA map and of the automorphism.
    LeafCheck,
    /// Density of an unstable and a center leaf.
    LeafDensity,
    /// Calibrate the tube around a point.
    CalibrateTube,
    /// Project a chain leaving the tube onto a leaf.
    ChainProject,
    /// SFT hulls of a symbolic set.
    SftHull,
    /// Enclose a symbolic set and a grid set.
    Enclose,
    /// Run every experiment, writing one directory per experiment.
    VerifyAll,
    /// Print the resolved configuration.
    Config,
}

impl Sub {
    fn command(&self) -> Option<Command> {
        Some(match self {
            Sub::Classify => Command::Classify,
            Sub::Shadow => Command::Shadow,
            Sub::Chains => Command::Chains,
            Sub::GammaDelta => Command::GammaDelta,
            Sub::OrbitClosure => Command::OrbitClosure,
            Sub::Saturate => Command::Saturate,
            Sub::DaBuild => Command::DaBuild,
            Sub::Cones => Command::Cones,
            Sub::Semiconjugacy => Command::Semiconjugacy,
            Sub::LeafCheck => Command::LeafCheck,
            Sub::LeafDensity => Command::LeafDensity,
            Sub::CalibrateTube => Command::CalibrateTube,
            Sub::ChainProject => Command::ChainProject,
            Sub::SftHull => Command::SftHull,
            Sub::Enclose => Command::Enclose,
            Sub::VerifyAll | Sub::Config => return None,
        })
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let ov = Overrides { out: cli.out, seed: cli.seed, resolution: cli.resolution, smoke: cli.smoke };
    let cfg = ExperimentConfig::resolve(cli.config.as_deref(), std::env::vars(), &ov)?;
    let out = cfg.run.out.clone();
    match (&cli.cmd, cli.cmd.command()) {
        (_, Some(cmd)) => {
            let report = Lab::new(cfg).run(cmd);
            let dir = out.join(cmd.name());
            report.write(&dir)?;
            println!("{} {:?} -> {}", cmd.name(), report.status, dir.display());
            for c in report.checks.iter().filter(|c| !c.passed) {
                println!("  failed {}: {} {} {}", c.id, c.value, c.relation, c.bound);
            }
            if let Some(e) = &report.error {
                eprintln!("error: {e}");
            }
            Ok(report.exit_code())
        }
        (Sub::VerifyAll, _) => {
            let suite = verify_all(&cfg);
            suite.write(&out)?;
            for r in &suite.reports {
                println!("{:<16} {:?} {:.1}s", r.command, r.status, r.timestamps.elapsed_s);
            }
            Ok(suite.exit_code())
        }
        _ => {
            print!("{}", cfg.to_toml());
            println!("# hash = {}", cfg.hash());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
