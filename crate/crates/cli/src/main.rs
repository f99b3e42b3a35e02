use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use brwre_cli::commands::{self, Outcome};
use brwre_cli::output::{OutDir, Provenance};
use brwre_cli::{CliError, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "brwre", version, about = "Branching random walks in random environment: simulation and limit laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `simulation.replications`.
    #[arg(long)]
    reps: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "BRWRE_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the environment assumptions.
    Check(Common),
    /// Simulate the walk at each configured horizon.
    Simulate(Common),
    /// Sample the limit objects.
    Limit(Common),
    /// Compare finite-n simulations with the limit laws.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Use the simulated sample as its own reference.
        #[arg(long)]
        against_self: bool,
    },
    /// Jump diagnostics across horizons.
    Diagnostics(Common),
}

fn load(common: &Common) -> Result<(ExperimentConfig, OutDir), CliError> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(reps) = common.reps {
        cfg.simulation.replications = reps;
    }
    cfg.validate()?;
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure {threads} threads: {e}")))?;
    }
    let provenance = Provenance { config_sha256: cfg.hash(), seed: cfg.seed };
    let out = OutDir::create(&cfg.output_dir, provenance)?;
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let stdout = &mut std::io::stdout().lock();
    match cli.command {
        Command::Check(c) => {
            let (cfg, out) = load(&c)?;
            commands::check(&cfg, &out, stdout)
        }
        Command::Simulate(c) => {
            let (cfg, out) = load(&c)?;
            for h in commands::simulate(&cfg, &out)? {
                writeln!(stdout, "n = {}: {} replications written", h.n, h.outcomes.len())?;
            }
            Ok(Outcome::Pass)
        }
        Command::Limit(c) => {
            let (cfg, out) = load(&c)?;
            let art = commands::limit(&cfg, &out)?;
            writeln!(stdout, "{} Q samples, {} point-process draws written", art.qs.len(), art.draws.len())?;
            Ok(Outcome::Pass)
        }
        Command::Compare { common, against_self } => {
            let (cfg, out) = load(&common)?;
            commands::compare(&cfg, &out, against_self, stdout)
        }
        Command::Diagnostics(c) => {
            let (cfg, out) = load(&c)?;
            commands::diagnostics(&cfg, &out, stdout)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
