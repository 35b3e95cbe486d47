use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use magpic::config::{self, Experiment, ExperimentSpec, RunConfig};

#[derive(Parser)]
#[command(name = "magpic", version, about = "Asymptotic-preserving PIC for 2D Vlasov-Poisson in a strong magnetic field")]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print every configuration key with its default and exit.
    #[arg(long)]
    print_defaults: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// One particle in the analytic field, every scheme against RK4.
    SingleParticle,
    /// Distance between an AP scheme and its guiding-center limit over eps.
    ApSweep,
    /// Time-step convergence orders against RK4.
    OrderSweep,
    /// Self-consistent diocotron run.
    Diocotron,
    /// Full model and guiding-center model from the same initial particles.
    GcCompare,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::SingleParticle => Experiment::SingleParticle,
            Command::ApSweep => Experiment::ApSweep,
            Command::OrderSweep => Experiment::OrderSweep,
            Command::Diocotron => Experiment::Diocotron,
            Command::GcCompare => Experiment::GcCompare,
        }
    }
}

fn run(cli: Cli) -> magpic::Result<String> {
    let (mut cfg, spec) = match &cli.config {
        Some(path) => config::parse_config(path)?,
        None => (RunConfig::default(), ExperimentSpec::default()),
    };
    let experiment = match (cli.command.map(Experiment::from), spec.name) {
        (Some(c), Some(f)) if c != f => {
            return Err(magpic::Error::InvalidInput(format!(
                "subcommand `{c}` does not match `experiment = {f}` in the configuration"
            )))
        }
        (Some(e), _) | (None, Some(e)) => e,
        (None, None) => return Err(magpic::Error::InvalidInput("no experiment given (see --help)".into())),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    cfg.validate()?;
    let out = cli.out.unwrap_or_else(|| PathBuf::from("runs").join(experiment.name()));
    let report = magpic::cli::run(experiment, &cfg, &out)?;
    Ok(format!("{report}output written to {}\n", out.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_defaults {
        print!("{}", RunConfig::defaults_listing());
        return ExitCode::SUCCESS;
    }
    match run(cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
