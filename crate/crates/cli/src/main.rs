mod args;
mod commands;
mod error;
mod ingest;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliResult;

fn run(cli: &Cli) -> CliResult<String> {
    let report = match &cli.command {
        Command::Fit(a) => commands::fit(a, cli.seed)?,
        Command::Roots(a) => commands::roots_cmd(a, cli.seed)?,
        Command::Irf(a) => commands::irf_cmd(a, cli.seed)?,
        Command::Lr(a) => commands::lr_cmd(a, cli.seed)?,
        Command::Ci(a) => commands::ci_cmd(a, cli.seed)?,
        Command::Critvals(a) => commands::critvals_cmd(a, cli.seed)?,
        Command::Simulate(a) => commands::simulate_cmd(a, cli.seed)?,
    };
    Ok(report.render(cli.format))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = run(&cli).and_then(|text| match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| error::CliError::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
