mod args;
mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
use commands::Failure;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            return ExitCode::from(if ok { 0 } else { 1 });
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Branch(a) => commands::branch(a),
        Command::LambdaStar(a) => commands::lambda_star(a),
        Command::Eigen(a) => commands::eigen(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Extinction(a) => commands::extinction(a),
        Command::Certify(a) => commands::certify(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(summary) => {
            // A closed stdout (for instance a pipe into `head`) is not a failure.
            let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            let code = f.code();
            match f {
                Failure::Usage(msg) => eprintln!("error: {msg}\n\nFor more information, try '--help'."),
                Failure::NoSolution(e) => eprintln!("no solution: {e}"),
                Failure::Internal(msg) => {
                    let diag = json!({ "status": "internal-error", "exit_code": code, "message": msg });
                    eprintln!("{}", serde_json::to_string_pretty(&diag).expect("diagnostic serializes"));
                }
            }
            ExitCode::from(code)
        }
    }
}
