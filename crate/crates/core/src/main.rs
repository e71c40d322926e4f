use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use weylflow::runner::{catalog, run_config, Config, RunOptions, VerificationReport};

#[derive(Parser)]
#[command(
    name = "weylflow",
    version,
    about = "Spectral flow, Fermi arcs and half-line Dirac operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenarios of a config and write artifacts plus report.json.
    Run(RunArgs),
    /// Like `run`, printing one line per check.
    Verify(RunArgs),
    /// List scenario kinds with their default parameters.
    ListScenarios,
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory; overrides WEYLFLOW_OUT and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Only scenarios whose name contains this string.
    #[arg(long)]
    filter: Option<String>,
}

fn execute(args: &RunArgs) -> Result<(VerificationReport, PathBuf), weylflow::Error> {
    let config = Config::load(&args.config)?;
    let opts = RunOptions {
        out: args.out.clone(),
        jobs: args.jobs,
        filter: args.filter.clone(),
    };
    let out = weylflow::runner::resolve_out_dir(&config, &opts);
    Ok((run_config(&config, &opts)?, out))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (args, verbose) = match &cli.command {
        Command::ListScenarios => {
            print!("{}", catalog());
            return ExitCode::SUCCESS;
        }
        Command::Run(a) => (a, false),
        Command::Verify(a) => (a, true),
    };
    match execute(args) {
        Ok((report, out)) => {
            if verbose {
                for c in &report.checks {
                    println!("{}", c.line());
                }
            } else {
                for c in report.checks.iter().filter(|c| !c.pass) {
                    println!("{}", c.line());
                }
            }
            println!(
                "{} checks, {} passed, {} failed; report at {}",
                report.checks.len(),
                report.passed,
                report.failed,
                out.join("report.json").display()
            );
            if report.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
