use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mixmarket_cli::{commands, scenario, Command, Format, Status};

/// Equilibrium solver for markets with strategic large firms and a
/// continuum of heterogeneous small firms.
#[derive(Debug, Parser)]
#[command(name = "mixmarket", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Closed-economy equilibrium and coexistence conditions.
    SolveClosed(Io),
    /// Symmetric two-country equilibrium at the scenario's tau.
    SolveOpen(Io),
    /// Derivatives with respect to tau and the liberalization conditions.
    Statics(Io),
    /// Open-economy table over the [sweep] grid of trade costs.
    Sweep(Io),
    /// Oracle-versus-analytic comparison and grid refinement.
    Verify(Io),
}

#[derive(Debug, Args)]
struct Io {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format; sweep defaults to csv, everything else to json.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(Status::InvalidInput.code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Status::InvalidInput.code() as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (command, io) = match cli.command {
        Sub::SolveClosed(io) => (Command::SolveClosed, io),
        Sub::SolveOpen(io) => (Command::SolveOpen, io),
        Sub::Statics(io) => (Command::Statics, io),
        Sub::Sweep(io) => (Command::Sweep, io),
        Sub::Verify(io) => (Command::Verify, io),
    };
    let format = match io.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => command.default_format(),
    };

    let scenario = match scenario::load(&io.scenario) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let outcome = match commands::run(command, &scenario, format) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };

    let written = match &io.out {
        Some(path) => std::fs::write(path, &outcome.body).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout()
            .write_all(outcome.body.as_bytes())
            .map_err(|e| format!("cannot write report: {e}")),
    };
    if let Err(e) = written {
        return fail(e);
    }
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    ExitCode::from(outcome.status.code() as u8)
}
