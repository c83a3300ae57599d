use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use bimotion_cli::{execute, load_config, Command, Status};
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(version, about = "Delay-line motion detector simulator")]
struct Args {
    /// INI-style configuration; defaults are used when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV and summary files.
    #[arg(short, long, global = true, default_value = "out")]
    out: PathBuf,
    /// Also write the configured circuit's netlist here.
    #[arg(long, global = true, value_name = "PATH")]
    emit_netlist: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Print the tuned delay plan.
    Tune,
    /// Check blocking, coincidence separation and delay tuning.
    Validate,
    /// Simulate the configured scenario.
    Run,
    /// Run the scenario on both detector families and compare them.
    Compare,
    /// Sweep object velocity over the configured grid.
    Sweep,
    /// Cross-check the engine against both reference models.
    Verify,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Cmd::Tune => Command::Tune,
        Cmd::Validate => Command::Validate,
        Cmd::Run => Command::Run,
        Cmd::Compare => Command::Compare,
        Cmd::Sweep => Command::Sweep,
        Cmd::Verify => Command::Verify,
    };
    let result = load_config(args.config.as_deref())
        .and_then(|cfg| execute(command, &cfg, &args.out, args.emit_netlist.as_deref(), &mut io::stdout().lock()));
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Status::ConfigError.code())
        }
    }
}
