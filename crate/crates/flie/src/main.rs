use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flie::metrics::{export, metrics_report, MissionOutcome};
use flie::mission::run_mission;
use flie::world::Scenario;

#[derive(Parser)]
#[command(
    name = "flie",
    version,
    about = "Deterministic desk-scale simulator of an autonomous inspection UAV"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and export its artifacts.
    Run {
        /// Scenario file (TOML).
        #[arg(long)]
        scenario: PathBuf,
        /// Seed for landmark scatter and sensor noise; overrides the
        /// value in the scenario file.
        #[arg(long)]
        seed: u64,
        /// Output directory for trajectory.csv, events.log, metrics.txt.
        #[arg(long)]
        out: PathBuf,
        /// Tick budget override.
        #[arg(long)]
        max_steps: Option<usize>,
        /// Also write the merged map as cloud.ply.
        #[arg(long)]
        export_cloud: bool,
        /// Range noise sigma override, meters.
        #[arg(long)]
        noise_sigma: Option<f64>,
    },
    /// Run every scenario file in a directory, one output subdirectory each.
    Batch {
        /// Directory containing scenario files (*.toml).
        #[arg(long)]
        scenarios: PathBuf,
        /// Output root; each run writes under its scenario's file stem.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to one per core.
        #[arg(long)]
        parallel: Option<usize>,
    },
}

fn run_one(
    scenario_path: &Path,
    seed: Option<u64>,
    out: &Path,
    max_steps: Option<usize>,
    export_cloud: bool,
    noise_sigma: Option<f64>,
) -> Result<MissionOutcome, String> {
    let mut scenario = Scenario::from_file(scenario_path)
        .map_err(|e| format!("{}: {e}", scenario_path.display()))?;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    if let Some(n) = max_steps {
        scenario.max_steps = n;
    }
    if let Some(sigma) = noise_sigma {
        if !(sigma >= 0.0) {
            return Err(format!("noise sigma must be non-negative, got {sigma}"));
        }
        scenario.sensor.noise_sigma = sigma;
    }
    let log = run_mission(&scenario);
    let outcome = log.outcome;
    let report = metrics_report(&log, &scenario);
    export(&log, &report, out, export_cloud).map_err(|e| format!("{}: {e}", out.display()))?;
    println!(
        "{}: {} after {} ticks, coverage {:.3}, wrote {}",
        scenario_path.display(),
        outcome,
        log.ticks.len(),
        report.coverage_fraction,
        out.display()
    );
    Ok(outcome)
}

fn run_batch(scenarios: &Path, out: &Path, parallel: Option<usize>) -> Result<ExitCode, String> {
    use rayon::prelude::*;

    let mut files: Vec<PathBuf> = std::fs::read_dir(scenarios)
        .map_err(|e| format!("{}: {e}", scenarios.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "toml"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(format!("no scenario files in {}", scenarios.display()));
    }

    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(k) = parallel {
            builder = builder.num_threads(k.max(1));
        }
        builder.build().map_err(|e| e.to_string())?
    };

    let results: Vec<Result<MissionOutcome, String>> = pool.install(|| {
        files
            .par_iter()
            .map(|path| {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "scenario".to_string());
                run_one(path, None, &out.join(stem), None, false, None)
            })
            .collect()
    });

    let mut worst = ExitCode::SUCCESS;
    for (path, result) in files.iter().zip(&results) {
        match result {
            Ok(MissionOutcome::Done) => {}
            Ok(MissionOutcome::BudgetExceeded) => {
                if worst == ExitCode::SUCCESS {
                    worst = ExitCode::from(2);
                }
            }
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                worst = ExitCode::from(1);
            }
        }
    }
    Ok(worst)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, seed, out, max_steps, export_cloud, noise_sigma } => {
            match run_one(&scenario, Some(seed), &out, max_steps, export_cloud, noise_sigma) {
                Ok(MissionOutcome::Done) => ExitCode::SUCCESS,
                Ok(MissionOutcome::BudgetExceeded) => ExitCode::from(2),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Batch { scenarios, out, parallel } => match run_batch(&scenarios, &out, parallel)
        {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
