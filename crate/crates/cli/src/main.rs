mod args;
mod commands;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use args::{Cli, Command};
use commands::Failure;

const THREADS_VAR: &str = "BAYESLOC_THREADS";

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate(_) => "simulate",
        Command::TrainFingerprint(_) => "train-fingerprint",
        Command::Localize(_) => "localize",
        Command::Evaluate(_) => "evaluate",
        Command::Fstar(_) => "fstar",
        Command::LearningCurve(_) => "learning-curve",
    }
}

fn usage_exit(sub: Option<&str>, msg: &str) -> ! {
    let mut cmd = Cli::command();
    cmd.build();
    let cmd = match sub.and_then(|s| cmd.find_subcommand_mut(s)) {
        Some(c) => c.clone(),
        None => cmd,
    };
    let mut cmd = cmd;
    cmd.error(clap::error::ErrorKind::ValueValidation, msg).exit()
}

fn configure_threads() {
    let Ok(v) = std::env::var(THREADS_VAR) else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n >= 1 => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().expect("global pool set once");
        }
        _ => usage_exit(None, &format!("{THREADS_VAR}=`{v}` must be a positive integer")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let name = subcommand_name(&cli.command);
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::TrainFingerprint(a) => commands::train(a),
        Command::Localize(a) => commands::localize(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Fstar(a) => commands::fstar_cmd(a),
        Command::LearningCurve(a) => commands::learning(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => usage_exit(Some(name), &m),
        Err(e @ Failure::Runtime(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
