//! Experiment plan files: a TOML document with an `[experiment]` section,
//! base `[optimizer]` settings, optional `[sweep]` lists that expand into a
//! cross product of runs, and one environment section (`[queue]` or
//! `[quadratic]`).
//!
//! Loading performs full validation up front: every sweep point is checked
//! against the sampler's admissible q-range and the chosen algorithm before
//! any run starts, so a bad plan fails fast with a description of the
//! offending field.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use qgsf_core::environments::{AnalyticSystem, QueueNetwork, QueueNetworkConfig};
use qgsf_core::optimizer::{Algorithm, OptimizerConfig};
use qgsf_core::projections::{BoxConstraint, PdProjectionPolicy, PdVariant};
use qgsf_core::qgaussian::QGaussianSpec;
use serde::Deserialize;

/// A value that may be written as a scalar (broadcast to every coordinate)
/// or as an explicit per-coordinate vector.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl ScalarOrVec {
    fn resolve(&self, dim: usize, field: &str) -> Result<Vec<f64>, PlanError> {
        match self {
            ScalarOrVec::Scalar(v) => Ok(vec![*v; dim]),
            ScalarOrVec::Vector(v) if v.len() == dim => Ok(v.clone()),
            ScalarOrVec::Vector(v) => Err(PlanError::Invalid(format!(
                "{field} has {} entries but the parameter dimension is {dim}",
                v.len()
            ))),
        }
    }
}

fn default_replications() -> u64 {
    20
}

fn default_seed_base() -> u64 {
    1000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    kind: String,
    #[serde(default = "default_replications")]
    replications: u64,
    #[serde(default = "default_seed_base")]
    seed_base: u64,
    #[serde(default)]
    output: Option<PathBuf>,
    initial_theta: ScalarOrVec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizerSection {
    algorithm: String,
    q: f64,
    beta: f64,
    #[serde(default = "default_a_exponent")]
    a_exponent: f64,
    #[serde(default = "default_b_exponent")]
    b_exponent: f64,
    #[serde(default = "default_c_exponent")]
    c_exponent: f64,
    outer_iterations: usize,
    inner_iterations: usize,
    #[serde(default = "default_pd_variant")]
    pd_variant: String,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
}

fn default_a_exponent() -> f64 {
    1.0
}

fn default_b_exponent() -> f64 {
    0.85
}

fn default_c_exponent() -> f64 {
    0.65
}

fn default_pd_variant() -> String {
    "jacobi".to_string()
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    #[serde(default)]
    algorithm: Option<Vec<String>>,
    #[serde(default)]
    q: Option<Vec<f64>>,
    #[serde(default)]
    beta: Option<Vec<f64>>,
    #[serde(default)]
    c_exponent: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueueSection {
    arrival_rates: [f64; 2],
    leave_probability: f64,
    service_rate_constants: [f64; 2],
    node_dims: [usize; 2],
    theta_bar: ScalarOrVec,
    lower: ScalarOrVec,
    upper: ScalarOrVec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadraticSection {
    dim: usize,
    center: ScalarOrVec,
    #[serde(default)]
    curvatures: Option<ScalarOrVec>,
    #[serde(default)]
    noise_sd: f64,
    lower: ScalarOrVec,
    upper: ScalarOrVec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    experiment: ExperimentSection,
    optimizer: OptimizerSection,
    #[serde(default)]
    sweep: Option<SweepSection>,
    #[serde(default)]
    queue: Option<QueueSection>,
    #[serde(default)]
    quadratic: Option<QuadraticSection>,
}

/// One cell of the sweep cross product.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub algorithm: Algorithm,
    pub q: f64,
    pub beta: f64,
    pub c_exponent: f64,
}

/// The simulation environment a plan optimizes over.
#[derive(Clone, Debug)]
pub enum EnvironmentSpec {
    Queue(QueueNetworkConfig),
    Quadratic {
        curvatures: Vec<f64>,
        center: Vec<f64>,
        noise_sd: f64,
        bounds: BoxConstraint,
    },
}

impl EnvironmentSpec {
    pub fn dim(&self) -> usize {
        match self {
            EnvironmentSpec::Queue(c) => c.dim(),
            EnvironmentSpec::Quadratic { center, .. } => center.len(),
        }
    }

    pub fn bounds(&self) -> &BoxConstraint {
        match self {
            EnvironmentSpec::Queue(c) => &c.bounds,
            EnvironmentSpec::Quadratic { bounds, .. } => bounds,
        }
    }

    /// Instantiate the environment for running. Cheap; called per worker.
    pub fn build(&self) -> RunEnvironment {
        match self {
            EnvironmentSpec::Queue(c) => {
                RunEnvironment::Queue(QueueNetwork::new(c.clone()).expect("validated at plan load"))
            }
            EnvironmentSpec::Quadratic {
                curvatures,
                center,
                noise_sd,
                ..
            } => {
                let curv = curvatures.clone();
                let ctr = center.clone();
                let objective = move |x: &[f64]| {
                    x.iter()
                        .zip(&ctr)
                        .zip(&curv)
                        .map(|((xi, ci), ki)| ki * (xi - ci) * (xi - ci))
                        .sum()
                };
                RunEnvironment::Quadratic(Arc::new(
                    AnalyticSystem::new(objective, *noise_sd).with_target(center.clone()),
                ))
            }
        }
    }
}

/// A constructed environment ready to be passed to the optimizer.
pub enum RunEnvironment {
    Queue(QueueNetwork),
    Quadratic(Arc<AnalyticSystem>),
}

/// A fully validated experiment plan.
#[derive(Debug)]
pub struct Plan {
    pub replications: u64,
    pub seed_base: u64,
    pub output: Option<PathBuf>,
    pub initial_theta: Vec<f64>,
    pub environment: EnvironmentSpec,
    /// The `[optimizer]` settings as a single point, used when a command
    /// (like trajectory export) wants one run rather than the sweep.
    pub base_point: SweepPoint,
    pub sweep_points: Vec<SweepPoint>,
    base_a_exponent: f64,
    base_b_exponent: f64,
    pd_policy: PdProjectionPolicy,
    outer_iterations: usize,
    inner_iterations: usize,
}

#[derive(Debug)]
pub enum PlanError {
    Io(std::io::Error),
    Parse(toml::de::Error),
    Invalid(String),
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanError::Io(e) => write!(f, "cannot read plan file: {e}"),
            PlanError::Parse(e) => write!(f, "cannot parse plan file: {e}"),
            PlanError::Invalid(msg) => write!(f, "invalid plan: {msg}"),
        }
    }
}

impl std::error::Error for PlanError {}

impl From<std::io::Error> for PlanError {
    fn from(e: std::io::Error) -> Self {
        PlanError::Io(e)
    }
}

fn invalid(msg: impl Into<String>) -> PlanError {
    PlanError::Invalid(msg.into())
}

impl Plan {
    pub fn load(path: &Path) -> Result<Plan, PlanError> {
        let text = std::fs::read_to_string(path)?;
        Plan::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Plan, PlanError> {
        let file: PlanFile = toml::from_str(text).map_err(PlanError::Parse)?;
        Plan::from_file(file)
    }

    fn from_file(file: PlanFile) -> Result<Plan, PlanError> {
        let exp = &file.experiment;
        if exp.replications == 0 {
            return Err(invalid("replications must be at least 1"));
        }

        let environment = match exp.kind.as_str() {
            "queue" => {
                let section = file
                    .queue
                    .as_ref()
                    .ok_or_else(|| invalid("kind = \"queue\" requires a [queue] section"))?;
                if file.quadratic.is_some() {
                    return Err(invalid("[quadratic] section present but kind = \"queue\""));
                }
                let dim = section.node_dims[0] + section.node_dims[1];
                let config = QueueNetworkConfig {
                    arrival_rates: section.arrival_rates,
                    leave_probability: section.leave_probability,
                    service_rate_constants: section.service_rate_constants,
                    node_dims: section.node_dims,
                    theta_bar: section.theta_bar.resolve(dim, "queue.theta_bar")?,
                    bounds: bounds_from(&section.lower, &section.upper, dim, "queue")?,
                };
                config
                    .validate()
                    .map_err(|e| invalid(format!("queue section: {e}")))?;
                EnvironmentSpec::Queue(config)
            }
            "quadratic" => {
                let section = file.quadratic.as_ref().ok_or_else(|| {
                    invalid("kind = \"quadratic\" requires a [quadratic] section")
                })?;
                if file.queue.is_some() {
                    return Err(invalid("[queue] section present but kind = \"quadratic\""));
                }
                if section.dim == 0 {
                    return Err(invalid("quadratic.dim must be at least 1"));
                }
                let dim = section.dim;
                let curvatures = match &section.curvatures {
                    Some(c) => c.resolve(dim, "quadratic.curvatures")?,
                    None => vec![1.0; dim],
                };
                if curvatures.iter().any(|c| !c.is_finite() || *c <= 0.0) {
                    return Err(invalid("quadratic.curvatures must be finite and positive"));
                }
                if !(section.noise_sd.is_finite() && section.noise_sd >= 0.0) {
                    return Err(invalid("quadratic.noise_sd must be finite and nonnegative"));
                }
                let center = section.center.resolve(dim, "quadratic.center")?;
                if center.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("quadratic.center must be finite"));
                }
                EnvironmentSpec::Quadratic {
                    curvatures,
                    center,
                    noise_sd: section.noise_sd,
                    bounds: bounds_from(&section.lower, &section.upper, dim, "quadratic")?,
                }
            }
            other => {
                return Err(invalid(format!(
                    "unknown experiment kind {other:?} (expected \"queue\" or \"quadratic\")"
                )))
            }
        };

        let dim = environment.dim();
        let initial_theta = exp.initial_theta.resolve(dim, "experiment.initial_theta")?;
        if !initial_theta.iter().all(|v| v.is_finite()) {
            return Err(invalid("experiment.initial_theta must be finite"));
        }
        if !environment.bounds().contains(&initial_theta) {
            return Err(invalid(
                "experiment.initial_theta lies outside the constraint box",
            ));
        }

        let opt = &file.optimizer;
        let variant = PdVariant::parse(&opt.pd_variant).ok_or_else(|| {
            invalid(format!(
                "optimizer.pd_variant {:?} (expected \"jacobi\" or \"full_spectral\")",
                opt.pd_variant
            ))
        })?;
        let pd_policy = PdProjectionPolicy::new(variant, opt.epsilon)
            .map_err(|e| invalid(format!("optimizer.epsilon: {e}")))?;

        let sweep = file.sweep.unwrap_or_default();
        let algorithms = match &sweep.algorithm {
            Some(list) => list.clone(),
            None => vec![opt.algorithm.clone()],
        };
        let qs = sweep.q.clone().unwrap_or_else(|| vec![opt.q]);
        let betas = sweep.beta.clone().unwrap_or_else(|| vec![opt.beta]);
        let c_exponents = sweep
            .c_exponent
            .clone()
            .unwrap_or_else(|| vec![opt.c_exponent]);
        for (name, len) in [
            ("algorithm", algorithms.len()),
            ("q", qs.len()),
            ("beta", betas.len()),
            ("c_exponent", c_exponents.len()),
        ] {
            if len == 0 {
                return Err(invalid(format!("sweep.{name} must not be empty")));
            }
        }

        let mut sweep_points = Vec::new();
        for name in &algorithms {
            let algorithm = Algorithm::parse(name)
                .ok_or_else(|| invalid(format!("unknown algorithm {name:?}")))?;
            for &q in &qs {
                for &beta in &betas {
                    for &c_exponent in &c_exponents {
                        sweep_points.push(SweepPoint {
                            algorithm,
                            q,
                            beta,
                            c_exponent,
                        });
                    }
                }
            }
        }

        let base_algorithm = Algorithm::parse(&opt.algorithm)
            .ok_or_else(|| invalid(format!("unknown algorithm {:?}", opt.algorithm)))?;
        let plan = Plan {
            replications: exp.replications,
            seed_base: exp.seed_base,
            output: exp.output.clone(),
            initial_theta,
            environment,
            base_point: SweepPoint {
                algorithm: base_algorithm,
                q: opt.q,
                beta: opt.beta,
                c_exponent: opt.c_exponent,
            },
            sweep_points,
            base_a_exponent: opt.a_exponent,
            base_b_exponent: opt.b_exponent,
            pd_policy,
            outer_iterations: opt.outer_iterations,
            inner_iterations: opt.inner_iterations,
        };

        // Reject every invalid (q, algorithm, schedule) combination now,
        // before any simulation runs. The base point is checked too since
        // trajectory export runs it directly.
        let base = plan.base_point.clone();
        for point in plan.sweep_points.iter().chain([&base]) {
            let config = plan.optimizer_config(point, plan.seed_base)?;
            config.validate().map_err(|e| {
                invalid(format!(
                    "sweep point (algorithm = {}, q = {}, beta = {}, c_exponent = {}): {e}",
                    point.algorithm, point.q, point.beta, point.c_exponent
                ))
            })?;
        }
        Ok(plan)
    }

    /// The optimizer configuration for one sweep point and one seed.
    pub fn optimizer_config(
        &self,
        point: &SweepPoint,
        seed: u64,
    ) -> Result<OptimizerConfig, PlanError> {
        let dim = self.environment.dim();
        let spec = QGaussianSpec::new(dim, point.q, point.beta).map_err(|e| {
            invalid(format!(
                "sweep point (algorithm = {}, q = {}, beta = {}): {e}",
                point.algorithm, point.q, point.beta
            ))
        })?;
        let mut config = OptimizerConfig::new(spec, self.environment.bounds().clone());
        config.algorithm = point.algorithm;
        config.a_exponent = self.base_a_exponent;
        config.b_exponent = self.base_b_exponent;
        config.c_exponent = point.c_exponent;
        config.outer_iterations = self.outer_iterations;
        config.inner_iterations = self.inner_iterations;
        config.pd_policy = self.pd_policy;
        config.seed = seed;
        Ok(config)
    }
}

fn bounds_from(
    lower: &ScalarOrVec,
    upper: &ScalarOrVec,
    dim: usize,
    section: &str,
) -> Result<BoxConstraint, PlanError> {
    let lo = lower.resolve(dim, &format!("{section}.lower"))?;
    let hi = upper.resolve(dim, &format!("{section}.upper"))?;
    BoxConstraint::new(lo, hi).map_err(|e| invalid(format!("{section} bounds: {e}")))
}
