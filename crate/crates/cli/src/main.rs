//! Entry point: parse flags, dispatch, and report any failure as a single
//! `error:` line on stderr with a non-zero exit.

mod args;
mod commands;
mod manifest;

use clap::Parser;

fn main() {
    if let Err(error) = dispatch() {
        eprintln!("error: {error:#}");
        std::process::exit(1);
    }
}

fn dispatch() -> anyhow::Result<()> {
    match args::Cli::parse().command {
        args::Command::Gen(a) => commands::gen(a),
        args::Command::Inject(a) => commands::inject(a),
        args::Command::Mutate(a) => commands::mutate(a),
        args::Command::Run(a) => commands::run(a),
        args::Command::Sweep(a) => commands::sweep(a),
        args::Command::Lint(a) => commands::lint(a),
        args::Command::Study(a) => commands::study(a),
        args::Command::Report(a) => commands::report(a),
    }
}
