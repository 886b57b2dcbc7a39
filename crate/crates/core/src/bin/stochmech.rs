use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stochmech::experiment::{run, validate_file, Experiment, ExperimentConfig, ENV_OUT, ENV_THREADS};

#[derive(Parser)]
#[command(version, about = "Run stochastic-mechanics experiments from TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config of the experiment
    #[arg(long)]
    config: PathBuf,
    /// Thread cap; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Output root; the run directory is created inside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Recover beta from the MSD slope of a free Langevin ensemble.
    DiffusionRecovery(RunArgs),
    /// Compare a Langevin histogram with the oscillator ground-state density.
    DensityMatch(RunArgs),
    /// Fokker-Planck spreading and the Schrodinger continuity convergence study.
    FpEvolve(RunArgs),
    /// Eigenstate energies and the stationarity residual of their osmotic drift.
    StationarityAudit(RunArgs),
    /// Replay transition logs on the invariant-mass ledger.
    MassAudit(RunArgs),
    /// Magnetic mass, magnetic and radiated energy of one transition speed.
    EmBudget(RunArgs),
    /// Clifford identity, spin drifts and the interaction split.
    SpinChecks(RunArgs),
    /// Check a config file without running it.
    Validate {
        /// TOML config to check
        #[arg(long)]
        config: PathBuf,
    },
}

fn env_threads() -> anyhow::Result<Option<usize>> {
    match std::env::var(ENV_THREADS) {
        Ok(s) => Ok(Some(s.parse().map_err(|_| anyhow::anyhow!("{ENV_THREADS}: not a thread count: {s}"))?)),
        Err(_) => Ok(None),
    }
}

fn run_experiment(expected: Experiment, args: RunArgs) -> anyhow::Result<bool> {
    let config = ExperimentConfig::load(&args.config)?;
    if config.experiment != expected {
        anyhow::bail!(
            "config describes `{}` but `{}` was requested",
            config.experiment.as_str(),
            expected.as_str()
        );
    }
    let threads = args.threads.or(env_threads()?);
    let out = args
        .out
        .or_else(|| std::env::var_os(ENV_OUT).map(PathBuf::from))
        .unwrap_or_else(|| config.base_dir.join(&config.output));
    let report = run(&config, threads, &out)?;
    for inv in &report.outcome.invariants {
        let verdict = if inv.passed { "ok" } else { "FAILED" };
        println!("{verdict:>6}  {}: {:e} {} {:e}", inv.name, inv.value, inv.relation, inv.bound);
    }
    println!("wrote {}", report.dir.display());
    Ok(report.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => match validate_file(&config) {
            Ok(d) if d.is_empty() => {
                println!("{}: ok", config.display());
                Ok(true)
            }
            Ok(d) => {
                for x in d {
                    eprintln!("{x}");
                }
                return ExitCode::from(2);
            }
            Err(e) => Err(e),
        },
        Command::DiffusionRecovery(a) => run_experiment(Experiment::DiffusionRecovery, a),
        Command::DensityMatch(a) => run_experiment(Experiment::DensityMatch, a),
        Command::FpEvolve(a) => run_experiment(Experiment::FpEvolve, a),
        Command::StationarityAudit(a) => run_experiment(Experiment::StationarityAudit, a),
        Command::MassAudit(a) => run_experiment(Experiment::MassAudit, a),
        Command::EmBudget(a) => run_experiment(Experiment::EmBudget, a),
        Command::SpinChecks(a) => run_experiment(Experiment::SpinChecks, a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
