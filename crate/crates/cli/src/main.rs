use std::process::ExitCode;

use clap::Parser;
use ddgr_cli::cli::Cli;
use ddgr_cli::commands;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.options.to_config().and_then(|config| commands::run(cli.command, &config, &cli.options.out_dir));
    match result {
        Ok(outcome) if outcome.passed => {
            println!("{}: {}", cli.command.name(), outcome.summary);
            ExitCode::SUCCESS
        }
        Ok(outcome) => {
            eprintln!("{}: verification failed: {}", cli.command.name(), outcome.summary);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.into()
        }
    }
}
