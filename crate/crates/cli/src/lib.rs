//! Command-line front end: model files, run reports and the four commands.

pub mod args;
pub mod commands;
pub mod corpus;
pub mod error;
pub mod model_file;
pub mod report;

use args::Cli;

/// Run a parsed command line and return the process exit code. The summary
/// goes to stdout, errors to stderr and the report to `--out` if given.
pub fn run(cli: &Cli, argv: Vec<String>) -> i32 {
    match commands::run(&cli.command, argv) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
