mod args;
mod commands;
mod error;
mod manifest;

use clap::Parser;

use args::{Cli, Command};
use commands::Context;
use error::{CliError, CliResult, EXIT_USAGE};

/// Run a parsed command line inside a thread pool of the requested size.
pub(crate) fn execute(cli: Cli, argv: Vec<String>) -> CliResult<()> {
    let threads = cli.threads.resolve();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    let ctx = Context { argv, threads };
    pool.install(|| match &cli.command {
        Command::Retrieve(a) => commands::retrieve::run(a, &ctx),
        Command::Simulate(c) => commands::simulate::run(c, &ctx),
        Command::Evaluate(a) => commands::evaluate::run(a, &ctx),
        Command::TargetGen(a) => commands::target_gen::run(a, &ctx),
        Command::Replay(a) => commands::replay::run(a),
    })
}

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = execute(cli, argv[1..].to_vec()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
