use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fedclus_cli::commands::{cmd_compare, cmd_plot, cmd_run};
use fedclus_cli::CliError;

#[derive(Parser)]
#[command(name = "fedclus", version, about = "Clustered federated averaging experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every algorithm and seed in a config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dotted-path config override, e.g. `cluster.theta=0.3`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run as `run` and add paired comparisons in compare.csv.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Render SVG figures from a report.json.
    Plot {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run { config, out, overrides } => {
            cmd_run(&config, out.as_deref(), &overrides).map(|dir| println!("wrote {}", dir.display()))
        }
        Command::Compare { config, out, overrides } => {
            cmd_compare(&config, out.as_deref(), &overrides).map(|dir| println!("wrote {}", dir.display()))
        }
        Command::Plot { report, out } => cmd_plot(&report, &out).map(|files| {
            for f in files {
                println!("wrote {}", out.join(f).display());
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &CliError) -> ExitCode {
    eprintln!("error[{}]: {e}", e.stage());
    ExitCode::from(e.exit_code() as u8)
}
