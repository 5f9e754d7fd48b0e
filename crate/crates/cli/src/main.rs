use std::process::ExitCode;

use clap::Parser;
use floss_cli::args::{Cli, Command};
use floss_cli::commands;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Loss(a) => commands::cmd_loss(a),
        Command::Metrics(a) => commands::cmd_metrics(a),
        Command::Spectrum(a) => commands::cmd_spectrum(a),
        Command::Demo(a) => commands::cmd_demo(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("floss: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
