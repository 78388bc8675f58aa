use clap::{Parser, Subcommand};
use hyperham_cli::{commands, load_scenario, CliError, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hyperham",
    version,
    about = "Hyperhamiltonian dynamics: structure validation, flow integration, \
             closed-form oscillators, certificates and invariant suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV/report outputs (default: current directory).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the default check tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check every defining identity of the configured structure.
    Validate,
    /// Integrate the hyperhamiltonian flow with invariant monitors.
    Run,
    /// Solve the quaternionic oscillator in closed form and classify
    /// the orbit.
    ClosedForm,
    /// Odd-trace non-Hamiltonianity certificate of a quadratic triple.
    Certify,
    /// Flow-characterisation and conservation residuals at seeded points.
    Invariants,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let config = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::usage("--config <path> is required"))?;
    let scenario = load_scenario(config)?;
    let opts = RunOptions {
        out_dir: cli.out.clone(),
        seed: cli.seed,
        tol: cli.tol,
    };
    let report = match cli.command {
        Command::Validate => commands::cmd_validate(&scenario, &opts)?,
        Command::Run => commands::cmd_run(&scenario, &opts)?,
        Command::ClosedForm => commands::cmd_closed_form(&scenario, &opts)?,
        Command::Certify => commands::cmd_certify(&scenario, &opts)?,
        Command::Invariants => commands::cmd_invariants(&scenario, &opts)?,
    };
    println!("{}", report.to_json_pretty());
    Ok(())
}
