mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{config_args, config_path, merge_config, Cli};

/// Outcome classes mapped to the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or input files: exit 2.
    Usage(String),
    /// The run itself failed: exit 1.
    Run(String),
}

impl From<knotfield::Error> for Failure {
    fn from(e: knotfield::Error) -> Self {
        use knotfield::Error::*;
        match e {
            InvalidParameter(_) | InvalidLoop(_) | Parse { .. } => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let mut argv: Vec<String> = std::env::args().collect();
    if let Some(path) = config_path(&argv) {
        let extra = std::fs::read_to_string(&path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))
            .and_then(|text| config_args(&text));
        match extra {
            Ok(extra) => argv = merge_config(argv, extra),
            Err(msg) => {
                eprintln!("error: {msg}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
