mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::{Context, Failure};

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| Failure::Usage(format!("--jobs: {e}")))?;
    }
    let ctx = Context::load(cli)?;
    match &cli.command {
        Command::Encipher(a) => commands::encipher_cmd(&ctx, a),
        Command::Decipher(a) => commands::decipher_cmd(&ctx, a),
        Command::Segment(a) => commands::segment_cmd(&ctx, a),
        Command::Pairs(a) => commands::pairs_cmd(&ctx, a),
        Command::Score(a) => commands::score_cmd(&ctx, a),
        Command::Stats(a) => commands::stats_cmd(&ctx, a),
        Command::Simulate(a) => commands::simulate_cmd(&ctx, a),
        Command::Vocab(a) => commands::vocab_cmd(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("markspan: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
