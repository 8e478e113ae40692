mod args;
mod commands;
mod config;
mod error;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Campaign(a) => commands::campaign(a),
        Command::Profile(a) => commands::profile(a),
        Command::Replay(a) => commands::replay(a),
        Command::Problems(a) => commands::problems(a),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    };
    let cli = Cli::parse_from(args);
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
