use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vortex_core::experiment::{Experiment, ExperimentConfig, ExperimentReport};

/// Run a vortex energy experiment described by a `key = value` config file.
#[derive(Parser, Debug)]
#[command(name = "vortex-opt", version)]
struct Args {
    /// Experiment config file.
    config: PathBuf,

    /// Write outputs here instead of the config's output_dir.
    #[arg(long)]
    output_dir: Option<PathBuf>,

    /// Replace the config's seeds with 0..N.
    #[arg(long)]
    seed_count: Option<u64>,

    /// Only print errors.
    #[arg(long)]
    quiet: bool,
}

fn print_summary(report: &ExperimentReport) {
    println!("mode = {}", report.config.mode);
    if let Some(psi) = report.psi {
        println!("psi = {psi:.12}");
    }
    for r in &report.runs {
        println!(
            "seed {:>3}: psi = {:.12}  iterations = {:>3}  stop = {}",
            r.seed,
            r.psi,
            r.iterations,
            r.stop_reason.as_str()
        );
    }
    if report.clusters.len() > 1 {
        println!("clusters = {}", report.clusters.len());
        for (c, cl) in report.clusters.iter().enumerate() {
            println!("  {c}: psi = {:.12}  seeds = {:?}", cl.psi, cl.member_seeds);
        }
    }
    for key in ["correlation", "correlation.bathtub_min", "correlation.random_min"] {
        if let Some(v) = report.entry(key) {
            println!("{key} = {v}");
        }
    }
    println!("output_dir = {}", report.output_dir.display());
}

fn run(args: &Args) -> vortex_core::Result<ExperimentReport> {
    let mut config = ExperimentConfig::from_file(&args.config)?;
    if let Some(dir) = &args.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(n) = args.seed_count {
        config.seeds = (0..n).collect();
    }
    Experiment::default().run(&config)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(report) => {
            if !args.quiet {
                print_summary(&report);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
