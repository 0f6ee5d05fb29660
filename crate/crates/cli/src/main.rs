//! `ratchet`: run the encounter-protocol experiments and their classical
//! analogues, persisting CSV results, a metadata sidecar, and gnuplot
//! scripts.

mod config;
mod error;
mod experiments;
mod output;
mod plot;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command};
use error::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::List => {
            for exp in experiments::registry() {
                println!("{:<20} {}", exp.name(), exp.summary());
            }
            Ok(())
        }
        Command::Run(args) => run(&args),
        Command::Plot { dir } => plot::emit_plot_script(&dir),
    }
}

fn run(args: &config::RunArgs) -> Result<(), CliError> {
    let cfg = config::resolve(args)?;
    let experiment =
        experiments::find(cfg.experiment.name()).expect("every experiment kind is registered");
    let started_unix = output::now_unix();
    let out = experiment.run(&cfg)?;
    let meta = output::Metadata {
        started_unix,
        finished_unix: output::now_unix(),
        partial: out.abort.is_some(),
        abort: out.abort.as_ref().map(|e| e.to_string()),
        truncation_warning_count: out.truncation_warning_count,
        results: out.results,
    };
    output::write_run(&cfg, &meta, &out.tables)?;
    println!(
        "{}: wrote {} result file(s) to {}",
        cfg.experiment.name(),
        out.tables.len(),
        cfg.output_dir.display()
    );
    match out.abort {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
