//! Seeded replicated sweeps: every (sweep point, replication) pair becomes
//! one optimizer run with seed `seed_base + r`, and the results are written
//! as a CSV whose bytes depend only on the plan, never on scheduling.

use std::fmt;
use std::io;
use std::time::{Duration, Instant};

use qgsf_core::optimizer::{run, RunError};

use crate::config::{Plan, RunEnvironment, SweepPoint};
use crate::pool;

/// One optimizer run within a sweep.
#[derive(Clone, Debug)]
pub struct ReplicationRow {
    pub point: SweepPoint,
    pub seed: u64,
    pub final_distance: f64,
    /// Wall-clock duration of this run; reported on stderr, never in the
    /// CSV (which must be byte-identical across reruns).
    pub wall: Duration,
}

/// Mean and dispersion of the final distances at one sweep point.
#[derive(Clone, Debug)]
pub struct AggregateRow {
    pub point: SweepPoint,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); `None` with a single
    /// replication, where it is undefined.
    pub sd: Option<f64>,
}

#[derive(Debug)]
pub struct SweepResults {
    pub replications: Vec<ReplicationRow>,
    pub aggregates: Vec<AggregateRow>,
}

#[derive(Debug)]
pub enum SweepError {
    Run {
        point: SweepPoint,
        seed: u64,
        source: RunError,
    },
    MissingTarget,
}

impl fmt::Display for SweepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepError::Run {
                point,
                seed,
                source,
            } => write!(
                f,
                "run failed at (algorithm = {}, q = {}, beta = {}, c_exponent = {}), seed {seed}: {source}",
                point.algorithm, point.q, point.beta, point.c_exponent
            ),
            SweepError::MissingTarget => write!(
                f,
                "environment defines no reference point, so final distances are undefined"
            ),
        }
    }
}

impl std::error::Error for SweepError {}

/// Mean and sample standard deviation exactly as the aggregate rows carry
/// them: plain left-to-right summation over the rows in CSV order, so a
/// reader can reproduce the aggregates bit for bit from the table.
pub fn aggregate(finals: &[f64]) -> (f64, Option<f64>) {
    let n = finals.len() as f64;
    let mean = finals.iter().sum::<f64>() / n;
    if finals.len() < 2 {
        return (mean, None);
    }
    let ss = finals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, Some((ss / (n - 1.0)).sqrt()))
}

fn point_key(p: &SweepPoint) -> (String, [u64; 3]) {
    (
        p.algorithm.token().to_string(),
        [p.q.to_bits(), p.beta.to_bits(), p.c_exponent.to_bits()],
    )
}

/// Run every sweep point for every replication, on up to `workers` threads.
pub fn run_sweep(plan: &Plan, workers: usize) -> Result<SweepResults, SweepError> {
    let reps = plan.replications as usize;
    let jobs = plan.sweep_points.len() * reps;
    let environment = plan.environment.build();

    let outcomes = pool::run_indexed(workers, jobs, |i| {
        let point = &plan.sweep_points[i / reps];
        let seed = plan.seed_base + (i % reps) as u64;
        let config = plan
            .optimizer_config(point, seed)
            .expect("validated at plan load");
        let started = Instant::now();
        let trajectory = match &environment {
            RunEnvironment::Queue(network) => run(&config, network, &plan.initial_theta),
            RunEnvironment::Quadratic(system) => run(&config, system.as_ref(), &plan.initial_theta),
        };
        let wall = started.elapsed();
        match trajectory {
            Ok(t) => match t.final_distance() {
                Some(final_distance) => Ok(ReplicationRow {
                    point: point.clone(),
                    seed,
                    final_distance,
                    wall,
                }),
                None => Err(SweepError::MissingTarget),
            },
            Err(source) => Err(SweepError::Run {
                point: point.clone(),
                seed,
                source,
            }),
        }
    });

    let mut replications = Vec::with_capacity(jobs);
    for outcome in outcomes {
        replications.push(outcome?);
    }
    // Sort by (algorithm, q, beta, c_exponent, seed): the CSV order is a
    // property of the plan alone.
    replications.sort_by(|a, b| {
        point_key(&a.point)
            .cmp(&point_key(&b.point))
            .then(a.seed.cmp(&b.seed))
    });

    let mut aggregates: Vec<AggregateRow> = Vec::new();
    let mut finals: Vec<f64> = Vec::new();
    for (i, row) in replications.iter().enumerate() {
        finals.push(row.final_distance);
        let last_of_group = match replications.get(i + 1) {
            Some(next) => next.point != row.point,
            None => true,
        };
        if last_of_group {
            let (mean, sd) = aggregate(&finals);
            aggregates.push(AggregateRow {
                point: row.point.clone(),
                mean,
                sd,
            });
            finals.clear();
        }
    }

    Ok(SweepResults {
        replications,
        aggregates,
    })
}

pub const CSV_HEADER: [&str; 9] = [
    "kind",
    "algorithm",
    "q",
    "beta",
    "c_exponent",
    "seed",
    "final_distance",
    "mean_final_distance",
    "sd_final_distance",
];

/// Write the replication rows and, after each point's replications, its
/// aggregate row. Floats are printed in shortest round-trip form, so
/// parsing a column back recovers the exact values the aggregates were
/// computed from.
pub fn write_csv<W: io::Write>(results: &SweepResults, writer: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CSV_HEADER)?;
    let mut next_aggregate = results.aggregates.iter().peekable();
    for (i, row) in results.replications.iter().enumerate() {
        out.write_record([
            "replication".to_string(),
            row.point.algorithm.token().to_string(),
            row.point.q.to_string(),
            row.point.beta.to_string(),
            row.point.c_exponent.to_string(),
            row.seed.to_string(),
            row.final_distance.to_string(),
            String::new(),
            String::new(),
        ])?;
        let last_of_group = match results.replications.get(i + 1) {
            Some(next) => next.point != row.point,
            None => true,
        };
        if last_of_group {
            let agg = next_aggregate
                .next()
                .expect("one aggregate per sweep point");
            out.write_record([
                "aggregate".to_string(),
                agg.point.algorithm.token().to_string(),
                agg.point.q.to_string(),
                agg.point.beta.to_string(),
                agg.point.c_exponent.to_string(),
                String::new(),
                String::new(),
                agg.mean.to_string(),
                agg.sd.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
