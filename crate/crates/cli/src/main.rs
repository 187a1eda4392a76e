//! `fkorn`: runs the verification checks and the nonlocal solver from the
//! command line. Exit status 0 means every executed check passed, 1 means at
//! least one failed, 2 means a usage or configuration error.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("fkorn: {e}");
            ExitCode::from(e.code())
        }
    }
}
