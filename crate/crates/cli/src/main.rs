use std::process::ExitCode;

use clap::Parser;
use matrixlens_cli::{error_line, run, Cli};
use serde_json::Value;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let name = cli.command.name();
    match run(cli.command) {
        // raw text (exchange files) goes out as-is
        Ok(Value::String(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(doc) => {
            println!("{}", serde_json::to_string_pretty(&doc).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_line(name, &e));
            ExitCode::FAILURE
        }
    }
}
