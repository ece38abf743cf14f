use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use formation_forge::{run, Overrides};

#[derive(Debug, Parser)]
#[command(name = "formation-forge", version, about = "Run formation-control experiments from scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a scenario file.
    Run {
        scenario: PathBuf,
        /// Directory receiving the CSV and summary artifacts.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Relative tolerance for rank and zero-eigenvalue decisions.
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { scenario, out, seed, tol } = cli.command;
    match run(&scenario, &out, Overrides { seed, tol }) {
        Ok(output) => {
            print!("{}", output.report.summary);
            println!("wrote {}", output.csv_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.record()).expect("serializable record"));
            ExitCode::from(e.exit_code())
        }
    }
}
