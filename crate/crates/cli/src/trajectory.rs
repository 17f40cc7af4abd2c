//! Trajectory export: run the plan's base optimizer settings once with a
//! given seed and emit one CSV row per outer iteration (including row 0,
//! the initial point) for plotting.

use std::fmt;
use std::io;

use qgsf_core::optimizer::{run, RunError, Trajectory};

use crate::config::{Plan, RunEnvironment};

#[derive(Debug)]
pub enum TrajectoryError {
    Run(RunError),
    Write(csv::Error),
}

impl fmt::Display for TrajectoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrajectoryError::Run(e) => write!(f, "run failed: {e}"),
            TrajectoryError::Write(e) => write!(f, "cannot write trajectory: {e}"),
        }
    }
}

impl std::error::Error for TrajectoryError {}

impl From<RunError> for TrajectoryError {
    fn from(e: RunError) -> Self {
        TrajectoryError::Run(e)
    }
}

impl From<csv::Error> for TrajectoryError {
    fn from(e: csv::Error) -> Self {
        TrajectoryError::Write(e)
    }
}

pub const CSV_HEADER: [&str; 4] = ["n", "distance", "z_norm", "w_norm"];

/// Run the base point with `seed` and return the trajectory.
pub fn run_base_point(plan: &Plan, seed: u64) -> Result<Trajectory, TrajectoryError> {
    let config = plan
        .optimizer_config(&plan.base_point, seed)
        .expect("validated at plan load");
    let trajectory = match plan.environment.build() {
        RunEnvironment::Queue(network) => run(&config, &network, &plan.initial_theta)?,
        RunEnvironment::Quadratic(system) => run(&config, system.as_ref(), &plan.initial_theta)?,
    };
    Ok(trajectory)
}

/// Write a trajectory as CSV: one row per outer iteration, `distance` empty
/// when the environment defines no reference point.
pub fn write_csv<W: io::Write>(trajectory: &Trajectory, writer: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CSV_HEADER)?;
    for row in &trajectory.rows {
        out.write_record([
            row.iteration.to_string(),
            row.distance.map(|d| d.to_string()).unwrap_or_default(),
            row.grad_estimate_norm.to_string(),
            row.hessian_estimate_norm.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Run the base point and stream the CSV to `writer` in one step.
pub fn export_trajectory<W: io::Write>(
    plan: &Plan,
    seed: u64,
    writer: W,
) -> Result<(), TrajectoryError> {
    let trajectory = run_base_point(plan, seed)?;
    write_csv(&trajectory, writer)?;
    Ok(())
}
