//! `dpplab`: runs solve, simulate, certify and holder jobs from flat
//! `key = value` configuration files.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "dpplab", version, about = "Solve, simulate and certify tug-of-war type dynamic programming equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the job described by a configuration file.
    Run {
        path: PathBuf,
        /// Replace the configuration's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replace the configuration's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the parallel parts (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run {
        path,
        seed,
        out,
        threads,
    } = cli.command;
    if let Some(t) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run::run_file(&path, &run::Overrides { seed, out }) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
