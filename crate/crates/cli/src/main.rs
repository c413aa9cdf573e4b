use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sshlab_cli::config::{load_config_file, GridSpec};
use sshlab_cli::{execute, selftest, CliError, ConfigOverrides, Experiment, OutputFormat, RunConfig};
use sshlab_core::model::BoundaryCondition;

/// Disordered SSH chain: topological index, disorder averages, gap and edge modes.
#[derive(Parser)]
#[command(name = "sshlab", version, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Index of individual realizations by flux winding, product criterion and Zak phase
    Invariant(RunArgs),
    /// Monte Carlo <nu> versus disorder strength, with the analytic curve
    MeanNu(RunArgs),
    /// Gap and index of one realization over a (gamma, w) grid
    PhaseDiagram(RunArgs),
    /// Averaged near-zero wavefunction profiles versus disorder strength
    EdgeModes(RunArgs),
    /// Mean spectral gap versus disorder strength
    GapScan(RunArgs),
    /// Born-approximation self-energy scalars and midgap density of states
    Born(RunArgs),
    /// Quick internal consistency checks
    Selftest {
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config, or a previous result file to rerun
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Worker threads, 0 = one per core; never changes the numbers
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Number of dimers
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    w: Option<f64>,
    #[arg(long, value_parser = parse_bc)]
    bc: Option<BoundaryCondition>,
    /// start:stop:count or a comma list
    #[arg(long)]
    gamma_grid: Option<GridSpec>,
    /// start:stop:count or a comma list
    #[arg(long)]
    w_grid: Option<GridSpec>,
    /// Retarded regulator for the Born functions
    #[arg(long)]
    alpha: Option<f64>,
}

fn parse_bc(s: &str) -> Result<BoundaryCondition, String> {
    match s {
        "open" => Ok(BoundaryCondition::Open),
        "periodic" => Ok(BoundaryCondition::Periodic),
        _ => Err(format!("expected `open` or `periodic`, got {s:?}")),
    }
}

impl RunArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            experiment: None,
            n: self.n,
            u: self.u,
            w: self.w,
            bc: self.bc,
            gamma_grid: self.gamma_grid.clone(),
            w_grid: self.w_grid.clone(),
            realizations: self.realizations,
            seed: self.seed,
            alpha: self.alpha,
            out: self.out.clone(),
            format: self.format,
        }
    }
}

fn run(experiment: Experiment, args: &RunArgs) -> Result<(), CliError> {
    let file = args.config.as_deref().map(load_config_file).transpose()?;
    let cfg = RunConfig::resolve(experiment, file.as_ref(), &args.overrides())?;
    let path = execute(&cfg, args.threads)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Invariant(a) => (Experiment::Invariant, a),
        Command::MeanNu(a) => (Experiment::MeanNuCurve, a),
        Command::PhaseDiagram(a) => (Experiment::PhaseDiagram, a),
        Command::EdgeModes(a) => (Experiment::EdgeModes, a),
        Command::GapScan(a) => (Experiment::GapScan, a),
        Command::Born(a) => (Experiment::Born, a),
        Command::Selftest { threads } => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(*threads).build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            let checks = pool.install(selftest::run_all);
            let mut ok = true;
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                ok &= c.passed;
            }
            return if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE };
        }
    };
    match run(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
