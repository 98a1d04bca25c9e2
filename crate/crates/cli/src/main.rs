use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fraqmap_cli::{run, split_overrides, CliError, Config, Experiment};

/// Fractional harmonic map experiments.
///
/// Settings come from built-in defaults, then `--config FILE` (a flat JSON
/// object), then any number of `--key=value` overrides.
#[derive(Parser)]
#[command(name = "fraqmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Traveling-wave spin dynamics on the torus.
    SpinTravel(RunArgs),
    /// Spin dynamics from a perturbed harmonic map.
    SpinPerturbed(RunArgs),
    /// Constrained heat flow towards a point defect on a 2D mesh.
    HeatflowDefect(RunArgs),
    /// Compare the assembled stiffness matrix with the quadrature oracle.
    AssembleCheck(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Also write legacy VTK snapshots.
    #[arg(long)]
    vtk: bool,
}

fn main() -> ExitCode {
    let (args, overrides) = split_overrides(std::env::args());
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    let (experiment, args) = match cli.command {
        Command::SpinTravel(a) => (Experiment::SpinTravel, a),
        Command::SpinPerturbed(a) => (Experiment::SpinPerturbed, a),
        Command::HeatflowDefect(a) => (Experiment::HeatflowDefect, a),
        Command::AssembleCheck(a) => (Experiment::AssembleCheck, a),
    };
    match execute(experiment, &args, &overrides) {
        Ok(Some(false)) => {
            eprintln!("{experiment}: acceptance check failed");
            ExitCode::from(4)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(experiment: Experiment, args: &RunArgs, overrides: &[(String, String)]) -> Result<Option<bool>, CliError> {
    let text = match &args.config {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config `{}`: {e}", path.display())))?,
        ),
        None => None,
    };
    let cfg = Config::resolve(experiment, text.as_deref(), overrides)?;
    Ok(run(&cfg, &args.out, args.vtk)?.passed)
}
