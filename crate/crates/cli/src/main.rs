mod args;
mod commands;
mod output;
mod report;

use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // clap prints its own usage message and exits with status 2 on bad arguments.
    let cli = args::Cli::parse();
    if let Err(e) = commands::run(&cli) {
        eprintln!("error: {e}");
        if let commands::Failure::Usage(_) = e {
            eprintln!("run `genefilter {} --help` for usage", cli.command.name());
        }
        std::process::exit(e.exit_code());
    }
}
