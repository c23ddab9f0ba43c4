use clap::Parser;
use multicell_cli::{config, experiment, output};
use std::path::PathBuf;
use std::process::ExitCode;

/// Multicell downlink resource-allocation experiments.
#[derive(Parser, Debug)]
#[command(name = "multicell", version, about)]
struct Args {
    /// Path to the TOML experiment configuration.
    #[arg(short, long)]
    config: PathBuf,

    /// Directory where results.csv, summary.json, and CDF files are written.
    #[arg(short, long, default_value = "results")]
    output: PathBuf,

    /// Number of worker threads (defaults to the rayon global pool).
    #[arg(short, long)]
    workers: Option<usize>,

    /// Override the base seed from the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Print per-strategy summaries to stdout.
    #[arg(short, long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match config::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed_base = seed;
    }

    let result = match experiment::run_experiment(&cfg, args.workers) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("experiment failed: {e}");
            return ExitCode::from(3);
        }
    };

    if let Err(e) = output::write_outputs(&result, &args.output) {
        eprintln!("cannot write outputs to {}: {e}", args.output.display());
        return ExitCode::from(3);
    }

    if args.verbose {
        for (strategy, per_sweep) in &result.summary {
            for (sweep, entry) in per_sweep {
                println!(
                    "{strategy} sweep={sweep}: mean utility {:.6} over {} realizations ({} failed)",
                    entry.mean_utility, entry.realizations, entry.failures
                );
            }
        }
    }
    println!("wrote results to {}", args.output.display());
    ExitCode::SUCCESS
}
