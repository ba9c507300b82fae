// `!(x > 0.0)` also rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod bench;
mod config;
mod eval;
mod focus;
mod pipeline;
mod simulate;
mod truth;

use config::UsageError;

/// Autofocus for event cameras from the polarity balance of a focus sweep.
#[derive(Parser, Debug)]
#[command(name = "evfocus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic focus sweep to an event file and truth sidecar
    Simulate(simulate::SimulateArgs),
    /// Bin events into per-bin positive and negative counts
    Bin(focus::BinArgs),
    /// Estimate the in-focus time of a sweep
    Focus(focus::FocusArgs),
    /// Time a focus method on one recording
    Bench(bench::BenchArgs),
    /// Summarize a directory of focus reports
    Eval(eval::EvalArgs),
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate::run(&a),
        Command::Bin(a) => focus::run_bin(&a),
        Command::Focus(a) => focus::run_focus(&a),
        Command::Bench(a) => bench::run(&a),
        Command::Eval(a) => eval::run(&a),
    }
}

/// 2 for caller mistakes and unreadable or malformed files, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() || cause.is::<std::io::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<evfocus::Error>() {
            use evfocus::Error as E;
            return match e {
                E::Io { .. }
                | E::BadMagic
                | E::UnsupportedVersion(_)
                | E::Truncated { .. }
                | E::Parse(_)
                | E::Json(_)
                | E::RoiOutsideSensor { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
