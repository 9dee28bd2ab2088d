use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use conetip_cli::{parse_config, run_with_threads, write_results, CliError, Format, Subcommand};

/// Singularity analysis of sign-changing transmission problems at circular
/// conical tips.
#[derive(Debug, Parser)]
#[command(name = "conetip", version)]
struct Args {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's output.directory, else ".").
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)?;
    let config = parse_config(&text)?;
    let out = args
        .out
        .or_else(|| config.output.directory.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let format = args.format.or(config.output.format).unwrap_or(Format::Csv);
    let bundle = run_with_threads(&config, args.subcommand, args.threads)?;
    for path in write_results(&bundle, format, &out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
