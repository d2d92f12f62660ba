use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mgd_cli::{cmd_check, cmd_convergence, cmd_run, cmd_sweep, output_dir, parse_config, CliError, Status};

/// Incompressible Navier-Stokes with BDF2 and modular grad-div stabilization.
///
/// Exit codes: 0 success, 1 setup error, 2 run completed with a failed solve
/// or check.
#[derive(Parser)]
#[command(name = "mgd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One run: ledger.csv, summary.csv and optional VTK snapshots.
    Run(Common),
    /// Taylor-Green error table and rates: rates.csv.
    Convergence(Common),
    /// Step-1 iteration counts over a parameter grid: sweep.csv.
    Sweep(Common),
    /// Energy identity, stability bound and scheme equivalence: check.csv.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set solver.tol=1e-10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn dispatch(command: Command) -> Result<Status, CliError> {
    let (f, args): (fn(&_, &_) -> _, Common) = match command {
        Command::Run(a) => (cmd_run, a),
        Command::Convergence(a) => (cmd_convergence, a),
        Command::Sweep(a) => (cmd_sweep, a),
        Command::Check(a) => (cmd_check, a),
    };
    let cfg = parse_config(args.config.as_deref(), &args.set)?;
    let out = output_dir(&cfg, args.out);
    f(&cfg, &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("mgd: {e}");
            ExitCode::from(1)
        }
    }
}
