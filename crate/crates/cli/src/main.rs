//! `qgsf`: run replicated optimizer sweeps, export single-run trajectories,
//! and verify the statistical properties the library is built on.
//!
//! Exit codes: 0 on success, 1 when a verification suite fails, 2 for
//! invalid plans, arguments, or I/O problems.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use qgsf_cli::config::Plan;
use qgsf_cli::{sweep, trajectory, verify};

#[derive(Parser)]
#[command(
    name = "qgsf",
    version,
    about = "q-Gaussian smoothed-functional optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every sweep point for every replication and write a CSV of
    /// per-replication and aggregate final distances.
    RunSweep {
        /// Experiment plan (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Where to write the CSV; overrides the plan's `output`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Worker threads; 0 picks the number of available cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Override the plan's seed base.
        #[arg(long)]
        seed_base: Option<u64>,
    },
    /// Run the plan's base optimizer settings once and write the iterate
    /// trajectory (n, distance, z_norm, w_norm) as CSV.
    ExportTrajectory {
        /// Experiment plan (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Where to write the CSV.
        #[arg(long)]
        output: PathBuf,
        /// Seed for this run; defaults to the plan's seed base.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a fixed-seed property suite and report each identity, target,
    /// estimate, and margin.
    Verify {
        #[arg(value_enum)]
        suite: verify::Suite,
    },
}

const EXIT_VERIFICATION_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::RunSweep {
            config,
            output,
            workers,
            seed_base,
        } => run_sweep_command(config, output, workers, seed_base),
        Command::ExportTrajectory {
            config,
            output,
            seed,
        } => export_trajectory_command(config, output, seed),
        Command::Verify { suite } => verify_command(suite),
    }
}

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_INVALID)
}

fn run_sweep_command(
    config: PathBuf,
    output: Option<PathBuf>,
    workers: usize,
    seed_base: Option<u64>,
) -> ExitCode {
    let mut plan = match Plan::load(&config) {
        Ok(plan) => plan,
        Err(e) => return fail(e),
    };
    if let Some(seed_base) = seed_base {
        plan.seed_base = seed_base;
    }
    let output = match output.or_else(|| plan.output.clone()) {
        Some(path) => path,
        None => return fail("no output path: pass --output or set experiment.output"),
    };
    let workers = if workers == 0 {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    } else {
        workers
    };

    let results = match sweep::run_sweep(&plan, workers) {
        Ok(results) => results,
        Err(e) => return fail(e),
    };

    let file = match std::fs::File::create(&output) {
        Ok(file) => file,
        Err(e) => return fail(format!("cannot create {}: {e}", output.display())),
    };
    let mut writer = std::io::BufWriter::new(file);
    if let Err(e) = sweep::write_csv(&results, &mut writer) {
        return fail(format!("cannot write {}: {e}", output.display()));
    }
    if let Err(e) = writer.flush() {
        return fail(format!("cannot write {}: {e}", output.display()));
    }

    // Wall-clock summary goes to stderr so the CSV stays reproducible.
    let total: Duration = results.replications.iter().map(|r| r.wall).sum();
    eprintln!(
        "{} runs across {} sweep points in {:.1} s (mean {:.2} s per run) -> {}",
        results.replications.len(),
        results.aggregates.len(),
        total.as_secs_f64(),
        total.as_secs_f64() / results.replications.len().max(1) as f64,
        output.display()
    );
    for agg in &results.aggregates {
        eprintln!(
            "  {} q={} beta={} c_exponent={}: mean final distance {:.4}{}",
            agg.point.algorithm,
            agg.point.q,
            agg.point.beta,
            agg.point.c_exponent,
            agg.mean,
            match agg.sd {
                Some(sd) => format!(" +/- {sd:.4}"),
                None => String::new(),
            }
        );
    }
    ExitCode::SUCCESS
}

fn export_trajectory_command(config: PathBuf, output: PathBuf, seed: Option<u64>) -> ExitCode {
    let plan = match Plan::load(&config) {
        Ok(plan) => plan,
        Err(e) => return fail(e),
    };
    let seed = seed.unwrap_or(plan.seed_base);
    let file = match std::fs::File::create(&output) {
        Ok(file) => file,
        Err(e) => return fail(format!("cannot create {}: {e}", output.display())),
    };
    let mut writer = std::io::BufWriter::new(file);
    if let Err(e) = trajectory::export_trajectory(&plan, seed, &mut writer) {
        return fail(e);
    }
    if let Err(e) = writer.flush() {
        return fail(format!("cannot write {}: {e}", output.display()));
    }
    ExitCode::SUCCESS
}

fn verify_command(suite: verify::Suite) -> ExitCode {
    let lines = verify::run_suite(suite);
    let stdout = std::io::stdout();
    match verify::render(&lines, stdout.lock()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFICATION_FAILED),
        Err(e) => fail(format!("cannot write report: {e}")),
    }
}
