//! Experiment driver: turns a TOML study description into on-disk CSV and
//! JSON artifacts. Exit codes: 0 on success, 1 for configuration or i/o
//! problems, 2 for failures inside the numerics (a scan with failed
//! points also exits 2 after finishing the healthy ones).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use pqe_core::experiment::{
    cmd_fci, cmd_noise_study, cmd_run, cmd_scan, error_exit_code, load_config, CliOverrides,
    LoadedConfig, RunReport,
};

#[derive(Parser)]
#[command(
    name = "pqe",
    version,
    about = "Ground-state electronic-structure experiments on a state-vector simulator"
)]
struct Cli {
    /// Artifact directory (overrides the config's `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Base RNG seed (overrides the config's `noise.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for ensembles and scans (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured fixture once; writes trace.csv and summary.json.
    Run {
        /// Study description (TOML).
        #[arg(long)]
        config: PathBuf,
    },
    /// Run every configured point and aggregate the finals into curve.csv.
    Scan {
        #[arg(long)]
        config: PathBuf,
    },
    /// Repeat one study across an ensemble of seeds; writes ensemble.csv.
    NoiseStudy {
        #[arg(long)]
        config: PathBuf,
    },
    /// Exact sector ground-state energy of the configured fixture.
    Fci {
        #[arg(long)]
        config: PathBuf,
    },
}

fn print_run_report(report: &RunReport) {
    let s = &report.summary;
    let error = match s.error_vs_fci {
        Some(e) => format!("{e:+.6e} Eh vs exact"),
        None => "exact energy not computed".to_string(),
    };
    println!(
        "{}: E = {:.10} Eh ({error}), {} parameters, converged = {}",
        s.method_name(),
        s.energy,
        s.n_parameters,
        s.converged
    );
    println!("artifacts: {}", report.out_dir.display());
}

fn dispatch(cli: &Cli) -> Result<i32, pqe_core::error::Error> {
    let overrides = CliOverrides {
        out: cli.out.clone(),
        seed: cli.seed,
    };
    let load = |path: &PathBuf| -> Result<LoadedConfig, pqe_core::error::Error> {
        load_config(path)
    };
    match &cli.command {
        Command::Run { config } => {
            let report = cmd_run(&load(config)?, &overrides)?;
            print_run_report(&report);
            Ok(0)
        }
        Command::Fci { config } => {
            let report = cmd_fci(&load(config)?, &overrides)?;
            println!("{:.12}", report.summary.energy);
            println!("artifacts: {}", report.out_dir.display());
            Ok(0)
        }
        Command::NoiseStudy { config } => {
            let report = cmd_noise_study(&load(config)?, &overrides)?;
            println!(
                "ensemble finished: {} iterations tracked, final error {:+.6e} +/- {:.3e} Eh",
                report.rows.len(),
                report.final_error_mean,
                report.final_error_std
            );
            println!("artifacts: {}", report.out_dir.display());
            Ok(0)
        }
        Command::Scan { config } => {
            let report = cmd_scan(&load(config)?, &overrides)?;
            for point in &report.points {
                match &point.message {
                    Some(msg) => println!("{}: {} ({msg})", point.label, point.status),
                    None => println!("{}: {}", point.label, point.status),
                }
            }
            println!(
                "{} points, {} failed; artifacts: {}",
                report.points.len(),
                report.n_failed,
                report.out_dir.display()
            );
            // Finished scans with broken points report a numerical failure.
            Ok(if report.n_failed > 0 { 2 } else { 0 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: could not size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
