use std::io;
use std::process::ExitCode;

use clap::Parser;

use csra_cli::{cmd_evaluate, cmd_oracle_check, cmd_sessionize, cmd_simulate, exit_code, Cli, Command};

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Sessionize(args) => cmd_sessionize(&args, &mut io::stderr().lock())?,
        Command::Simulate(args) => cmd_simulate(&args)?,
        Command::Evaluate(args) => cmd_evaluate(&args)?,
        Command::OracleCheck(args) => {
            if let Some(counterexample) = cmd_oracle_check(&args)? {
                eprintln!("mismatch\n{counterexample}");
                return Ok(ExitCode::from(1));
            }
            println!("{} instances agree", args.instances);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("csra: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
