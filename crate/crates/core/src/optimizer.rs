//! Two-timescale projected stochastic approximation.
//!
//! Each outer iteration n draws one perturbation η(n), holds the two
//! evaluation points P_C(θ ± βη) fixed, and runs L inner steps in which both
//! replicas produce one cost observation each and the running estimates are
//! updated on the fast timescales:
//!
//! * Z ← (1 − b(n))·Z + b(n)·(gradient increment),
//! * W ← (1 − c(n))·W + c(n)·(Hessian increment)   (Newton only),
//!
//! with gains b(n) = 1/(n+1)^{0.85} and c(n) = 1/(n+1)^{0.65} by default,
//! constant within an outer iteration. Since b(0) = c(0) = 1, the first
//! iteration overwrites the zero initial state. After the inner loop the
//! Hessian estimate is floored onto the positive-definite cone (and the
//! floored matrix persists), and the parameter moves on the slow timescale:
//!
//! * θ(n+1) = P_C(θ(n) − a(n)·W⁻¹Z)   (Newton), or
//! * θ(n+1) = P_C(θ(n) − a(n)·Z)      (gradient),
//!
//! with a(n) = 1/(n+1). Separating the timescales (a decays faster than b,
//! b faster than c) is what lets the estimates track their stationary values
//! along the slowly moving parameter.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::environments::{SimReplica, SimSystem};
use crate::estimators::{self, EstimatorError};
use crate::linalg::{self, Matrix};
use crate::projections::{
    newton_direction, project_pd, BoxConstraint, PdProjectionPolicy, ProjectionError,
};
use crate::qgaussian::QGaussianSpec;
use crate::seeds;

/// Which update drives the slow timescale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Newton step W⁻¹Z with the floored Hessian estimate.
    Newton,
    /// Plain gradient step Z; the Hessian machinery is skipped entirely.
    Gradient,
}

impl Algorithm {
    pub fn token(&self) -> &'static str {
        match self {
            Algorithm::Newton => "nqsf2",
            Algorithm::Gradient => "gqsf2",
        }
    }

    pub fn parse(s: &str) -> Option<Algorithm> {
        match s {
            "nqsf2" => Some(Algorithm::Newton),
            "gqsf2" => Some(Algorithm::Gradient),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Step-size sequence 1/(n+1)^e with exponent e ∈ (0.5, 1]. The square-
/// summable-but-not-summable range standard stochastic approximation needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSchedule {
    exponent: f64,
}

impl StepSchedule {
    pub fn new(exponent: f64) -> Result<Self, ConfigError> {
        if !exponent.is_finite() || exponent <= 0.5 || exponent > 1.0 {
            return Err(ConfigError::ExponentOutOfRange { exponent });
        }
        Ok(StepSchedule { exponent })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn step_size(&self, n: usize) -> f64 {
        crate::math::powf((n + 1) as f64, -self.exponent)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConfigError {
    /// Step exponents must lie in (0.5, 1].
    ExponentOutOfRange { exponent: f64 },
    /// Kernel dimension and box dimension must agree.
    DimensionMismatch { spec: usize, bounds: usize },
    /// The Newton update relies on Hessian moment identities that hold only
    /// for q > 0.
    AlgorithmQRange { q: f64 },
    /// At least one inner step per outer iteration.
    ZeroInner,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::ExponentOutOfRange { exponent } => {
                write!(f, "step exponent {exponent} must lie in (0.5, 1]")
            }
            ConfigError::DimensionMismatch { spec, bounds } => {
                write!(
                    f,
                    "kernel dimension {spec} does not match box dimension {bounds}"
                )
            }
            ConfigError::AlgorithmQRange { q } => {
                write!(f, "the Newton algorithm requires q > 0, got q = {q}")
            }
            ConfigError::ZeroInner => write!(f, "need at least one inner step"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ConfigError {}

/// Everything one optimization run needs besides the environment itself.
#[derive(Clone, Debug)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    /// Perturbation kernel (dimension, q, smoothing width β).
    pub spec: QGaussianSpec,
    /// Feasible box for the parameter vector.
    pub bounds: BoxConstraint,
    /// How the Hessian estimate is floored (ignored by the gradient
    /// algorithm).
    pub pd_policy: PdProjectionPolicy,
    /// Slow (parameter) step exponent, default 1.0.
    pub a_exponent: f64,
    /// Fast (gradient estimate) step exponent, default 0.85.
    pub b_exponent: f64,
    /// Hessian estimate step exponent, default 0.65.
    pub c_exponent: f64,
    /// Number of outer iterations M.
    pub outer_iterations: usize,
    /// Inner observations per outer iteration L.
    pub inner_iterations: usize,
    /// Master seed; perturbation and replica streams are derived from it.
    pub seed: u64,
    /// Diagnostic mode: keep θ at its initial value (a(n) ≡ 0) while the
    /// estimates evolve normally.
    pub freeze_theta: bool,
}

impl OptimizerConfig {
    /// Benchmark defaults around a given kernel and box: Newton with the
    /// Jacobi floor at ε = 0.1, exponents (1.0, 0.85, 0.65).
    pub fn new(spec: QGaussianSpec, bounds: BoxConstraint) -> Self {
        OptimizerConfig {
            algorithm: Algorithm::Newton,
            spec,
            bounds,
            pd_policy: PdProjectionPolicy::jacobi(0.1).expect("static epsilon is valid"),
            a_exponent: 1.0,
            b_exponent: 0.85,
            c_exponent: 0.65,
            outer_iterations: 5000,
            inner_iterations: 100,
            seed: 0,
            freeze_theta: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        StepSchedule::new(self.a_exponent)?;
        StepSchedule::new(self.b_exponent)?;
        StepSchedule::new(self.c_exponent)?;
        if self.spec.dim() != self.bounds.dim() {
            return Err(ConfigError::DimensionMismatch {
                spec: self.spec.dim(),
                bounds: self.bounds.dim(),
            });
        }
        if self.algorithm == Algorithm::Newton && self.spec.q() <= 0.0 {
            return Err(ConfigError::AlgorithmQRange { q: self.spec.q() });
        }
        if self.inner_iterations == 0 {
            return Err(ConfigError::ZeroInner);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum UpdateError {
    /// Gains must lie in (0, 1].
    GainOutOfRange {
        gain: f64,
    },
    /// Increments must be finite to keep the estimates finite.
    NonFiniteIncrement,
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
}

impl fmt::Display for UpdateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpdateError::GainOutOfRange { gain } => {
                write!(f, "averaging gain {gain} must lie in (0, 1]")
            }
            UpdateError::NonFiniteIncrement => write!(f, "increment contains NaN or infinity"),
            UpdateError::DimensionMismatch { expected, got } => {
                write!(f, "expected dimension {expected}, got {got}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for UpdateError {}

/// The fast-timescale state: running gradient estimate Z and running Hessian
/// estimate W. Both start at zero and are overwritten by the first update
/// (whose gain is 1); neither is ever reset between outer iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorState {
    pub z: Vec<f64>,
    pub w: Matrix,
}

impl EstimatorState {
    pub fn zeros(dim: usize) -> Self {
        EstimatorState {
            z: vec![0.0; dim],
            w: Matrix::zeros(dim),
        }
    }

    /// Z ← (1 − gain)·Z + gain·increment.
    pub fn update_gradient(&mut self, gain: f64, increment: &[f64]) -> Result<(), UpdateError> {
        if !(gain > 0.0 && gain <= 1.0) {
            return Err(UpdateError::GainOutOfRange { gain });
        }
        if increment.len() != self.z.len() {
            return Err(UpdateError::DimensionMismatch {
                expected: self.z.len(),
                got: increment.len(),
            });
        }
        if !linalg::all_finite(increment) {
            return Err(UpdateError::NonFiniteIncrement);
        }
        for (z, g) in self.z.iter_mut().zip(increment) {
            *z = (1.0 - gain) * *z + gain * g;
        }
        Ok(())
    }

    /// W ← (1 − gain)·W + gain·increment.
    pub fn update_hessian(&mut self, gain: f64, increment: &Matrix) -> Result<(), UpdateError> {
        if !(gain > 0.0 && gain <= 1.0) {
            return Err(UpdateError::GainOutOfRange { gain });
        }
        if increment.dim() != self.w.dim() {
            return Err(UpdateError::DimensionMismatch {
                expected: self.w.dim(),
                got: increment.dim(),
            });
        }
        if !increment.is_finite() {
            return Err(UpdateError::NonFiniteIncrement);
        }
        self.w.blend(gain, increment);
        Ok(())
    }

    /// Both fast updates with their respective gains.
    pub fn fast_update(
        &mut self,
        gradient_gain: f64,
        hessian_gain: f64,
        gradient_increment: &[f64],
        hessian_increment: &Matrix,
    ) -> Result<(), UpdateError> {
        self.update_gradient(gradient_gain, gradient_increment)?;
        self.update_hessian(hessian_gain, hessian_increment)
    }
}

/// Snapshot after outer iteration `iteration` (row 0 is the initial point).
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub iteration: usize,
    pub theta: Vec<f64>,
    /// ‖θ − θ*‖ when the environment defines a target.
    pub distance: Option<f64>,
    /// Euclidean norm of the gradient estimate Z.
    pub grad_estimate_norm: f64,
    /// Frobenius norm of the Hessian estimate W (zero for the gradient
    /// algorithm, which never touches W).
    pub hessian_estimate_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    /// Gradient and Hessian estimates as they stood after the last outer
    /// iteration.
    pub final_state: EstimatorState,
}

impl Trajectory {
    pub fn final_theta(&self) -> &[f64] {
        &self
            .rows
            .last()
            .expect("trajectories always include row 0")
            .theta
    }

    pub fn final_distance(&self) -> Option<f64> {
        self.rows
            .last()
            .expect("trajectories always include row 0")
            .distance
    }
}

/// Euclidean distance ‖θ − target‖.
pub fn distance_to_target(theta: &[f64], target: &[f64]) -> f64 {
    assert_eq!(theta.len(), target.len(), "dimension mismatch");
    let mut acc = 0.0;
    for (t, s) in theta.iter().zip(target) {
        let d = t - s;
        acc += d * d;
    }
    crate::math::sqrt(acc)
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunError {
    Config(ConfigError),
    /// The initial point must be finite and inside the box.
    InfeasibleStart,
    /// Initial point (or target) has the wrong length.
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
    /// A replica produced a NaN or infinite cost.
    NonFiniteCost {
        iteration: usize,
    },
    /// The iterate or an estimate left the finite range.
    NonFiniteState {
        iteration: usize,
    },
    Estimator(EstimatorError),
    Update(UpdateError),
    Projection(ProjectionError),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "invalid configuration: {e}"),
            RunError::InfeasibleStart => write!(f, "initial point is not inside the box"),
            RunError::DimensionMismatch { expected, got } => {
                write!(f, "expected dimension {expected}, got {got}")
            }
            RunError::NonFiniteCost { iteration } => {
                write!(
                    f,
                    "non-finite cost observation at outer iteration {iteration}"
                )
            }
            RunError::NonFiniteState { iteration } => {
                write!(
                    f,
                    "non-finite iterate or estimate at outer iteration {iteration}"
                )
            }
            RunError::Estimator(e) => write!(f, "estimator failure: {e}"),
            RunError::Update(e) => write!(f, "estimate update failure: {e}"),
            RunError::Projection(e) => write!(f, "projection failure: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<EstimatorError> for RunError {
    fn from(e: EstimatorError) -> Self {
        RunError::Estimator(e)
    }
}

impl From<UpdateError> for RunError {
    fn from(e: UpdateError) -> Self {
        RunError::Update(e)
    }
}

impl From<ProjectionError> for RunError {
    fn from(e: ProjectionError) -> Self {
        RunError::Projection(e)
    }
}

/// Distinct labels for the independent random streams one run consumes.
const PERTURBATION_STREAM: u64 = 1;
const PLUS_REPLICA_STREAM: u64 = 2;
const MINUS_REPLICA_STREAM: u64 = 3;

/// Run the optimizer against an environment from `initial_theta`, returning
/// the full trajectory (M + 1 rows including the initial point).
///
/// The run is a pure function of (config, environment definition,
/// initial point): all randomness comes from streams derived from
/// `config.seed`, so equal inputs give bit-identical trajectories.
pub fn run<S: SimSystem>(
    config: &OptimizerConfig,
    system: &S,
    initial_theta: &[f64],
) -> Result<Trajectory, RunError> {
    config.validate()?;
    let dim = config.spec.dim();
    if initial_theta.len() != dim {
        return Err(RunError::DimensionMismatch {
            expected: dim,
            got: initial_theta.len(),
        });
    }
    if !linalg::all_finite(initial_theta) || !config.bounds.contains(initial_theta) {
        return Err(RunError::InfeasibleStart);
    }
    let target: Option<Vec<f64>> = match system.target() {
        Some(t) if t.len() != dim => {
            return Err(RunError::DimensionMismatch {
                expected: dim,
                got: t.len(),
            })
        }
        Some(t) => Some(t.to_vec()),
        None => None,
    };

    let a_schedule = StepSchedule::new(config.a_exponent).expect("validated");
    let b_schedule = StepSchedule::new(config.b_exponent).expect("validated");
    let c_schedule = StepSchedule::new(config.c_exponent).expect("validated");
    let newton = config.algorithm == Algorithm::Newton;
    let beta = config.spec.beta();

    let mut perturbation_rng =
        ChaCha8Rng::seed_from_u64(seeds::derive_seed(config.seed, PERTURBATION_STREAM));
    let mut plus_replica =
        system.create_replica(seeds::derive_seed(config.seed, PLUS_REPLICA_STREAM));
    let mut minus_replica =
        system.create_replica(seeds::derive_seed(config.seed, MINUS_REPLICA_STREAM));

    let mut theta = initial_theta.to_vec();
    let mut state = EstimatorState::zeros(dim);
    let mut theta_plus = vec![0.0; dim];
    let mut theta_minus = vec![0.0; dim];

    let snapshot = |n: usize, theta: &[f64], state: &EstimatorState| TrajectoryRow {
        iteration: n,
        theta: theta.to_vec(),
        distance: target.as_ref().map(|t| distance_to_target(theta, t)),
        grad_estimate_norm: linalg::norm(&state.z),
        hessian_estimate_norm: state.w.frobenius_norm(),
    };

    let mut rows = Vec::with_capacity(config.outer_iterations + 1);
    rows.push(snapshot(0, &theta, &state));

    for n in 0..config.outer_iterations {
        let a_n = if config.freeze_theta {
            0.0
        } else {
            a_schedule.step_size(n)
        };
        let b_n = b_schedule.step_size(n);
        let c_n = c_schedule.step_size(n);

        let pert = config.spec.sample(&mut perturbation_rng);
        for i in 0..dim {
            theta_plus[i] = theta[i] + beta * pert.eta[i];
            theta_minus[i] = theta[i] - beta * pert.eta[i];
        }
        config.bounds.project_in_place(&mut theta_plus);
        config.bounds.project_in_place(&mut theta_minus);

        for _ in 0..config.inner_iterations {
            let cost_plus = plus_replica.observe_cost(&theta_plus);
            let cost_minus = minus_replica.observe_cost(&theta_minus);
            if !cost_plus.is_finite() || !cost_minus.is_finite() {
                return Err(RunError::NonFiniteCost { iteration: n });
            }
            let g = estimators::grad_increment(&config.spec, &pert, cost_plus, cost_minus)?;
            state.update_gradient(b_n, &g)?;
            if newton {
                let h = estimators::hess_increment(&config.spec, &pert, cost_plus, cost_minus)?;
                state.update_hessian(c_n, &h)?;
            }
        }

        if config.freeze_theta {
            // Keep the estimates evolving but leave theta untouched, bit for
            // bit; the Hessian floor still applies so W stays usable.
            if newton {
                state.w = project_pd(&config.pd_policy, &state.w)?;
            }
        } else if newton {
            state.w = project_pd(&config.pd_policy, &state.w)?;
            let direction = newton_direction(&config.pd_policy, &state.w, &state.z)?;
            for (t, d) in theta.iter_mut().zip(&direction) {
                *t -= a_n * d;
            }
        } else {
            for (t, d) in theta.iter_mut().zip(&state.z) {
                *t -= a_n * d;
            }
        }
        if !linalg::all_finite(&theta) || !linalg::all_finite(&state.z) || !state.w.is_finite() {
            return Err(RunError::NonFiniteState { iteration: n });
        }
        config.bounds.project_in_place(&mut theta);
        rows.push(snapshot(n + 1, &theta, &state));
    }
    Ok(Trajectory {
        rows,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::AnalyticSystem;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn quadratic_system(target: &[f64], noise_sd: f64) -> AnalyticSystem {
        let center = target.to_vec();
        AnalyticSystem::new(
            move |x: &[f64]| {
                x.iter()
                    .zip(&center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
            },
            noise_sd,
        )
        .with_target(target.to_vec())
    }

    fn small_config(algorithm: Algorithm) -> OptimizerConfig {
        let spec = QGaussianSpec::new(2, 1.0, 0.05).unwrap();
        let bounds = BoxConstraint::uniform(2, -1.0, 1.0).unwrap();
        let mut config = OptimizerConfig::new(spec, bounds);
        config.algorithm = algorithm;
        config.outer_iterations = 500;
        config.inner_iterations = 50;
        config.seed = 42;
        config
    }

    #[test]
    fn step_sizes_match_hand_values() {
        assert_eq!(StepSchedule::new(1.0).unwrap().step_size(3), 0.25);
        assert_eq!(StepSchedule::new(0.85).unwrap().step_size(0), 1.0);
        let slow = StepSchedule::new(0.65).unwrap().step_size(1);
        assert!(close(slow, 0.637_280_313_659_631_1, 1e-15));
    }

    #[test]
    fn schedule_rejects_exponents_outside_the_admissible_range() {
        assert!(StepSchedule::new(0.5).is_err());
        assert!(StepSchedule::new(1.01).is_err());
        assert!(StepSchedule::new(f64::NAN).is_err());
        assert!(StepSchedule::new(0.51).is_ok());
        assert!(StepSchedule::new(1.0).is_ok());
    }

    #[test]
    fn algorithm_tokens_round_trip() {
        assert_eq!(Algorithm::parse("nqsf2"), Some(Algorithm::Newton));
        assert_eq!(Algorithm::parse("gqsf2"), Some(Algorithm::Gradient));
        assert_eq!(Algorithm::parse("newton"), None);
        assert_eq!(Algorithm::Newton.token(), "nqsf2");
        assert_eq!(Algorithm::Gradient.token(), "gqsf2");
    }

    #[test]
    fn first_update_overwrites_zero_state() {
        let mut state = EstimatorState::zeros(2);
        let h = Matrix::from_flat(2, [1.0, 2.0, 2.0, 5.0]);
        state.fast_update(1.0, 1.0, &[3.0, -1.0], &h).unwrap();
        assert_eq!(state.z, vec![3.0, -1.0]);
        assert_eq!(state.w, h);
    }

    #[test]
    fn halving_gain_averages_toward_the_increment() {
        let mut state = EstimatorState::zeros(1);
        state.z = vec![2.0];
        state.w = Matrix::from_flat(1, [4.0]);
        state
            .fast_update(0.5, 0.5, &[0.0], &Matrix::from_flat(1, [0.0]))
            .unwrap();
        assert_eq!(state.z, vec![1.0]);
        assert_eq!(state.w.get(0, 0), 2.0);
    }

    #[test]
    fn constant_increments_drive_the_state_to_them() {
        let schedule = StepSchedule::new(0.85).unwrap();
        let mut state = EstimatorState::zeros(1);
        let h = Matrix::from_flat(1, [5.0]);
        for n in 0..10_000 {
            state
                .fast_update(schedule.step_size(n), schedule.step_size(n), &[3.0], &h)
                .unwrap();
        }
        assert!(close(state.z[0], 3.0, 1e-3));
        assert!(close(state.w.get(0, 0), 5.0, 1e-3));
    }

    #[test]
    fn updates_reject_bad_gains_and_increments() {
        let mut state = EstimatorState::zeros(1);
        assert!(matches!(
            state.update_gradient(0.0, &[1.0]),
            Err(UpdateError::GainOutOfRange { .. })
        ));
        assert!(state.update_gradient(1.2, &[1.0]).is_err());
        assert_eq!(
            state.update_gradient(0.5, &[f64::NAN]),
            Err(UpdateError::NonFiniteIncrement)
        );
        assert!(matches!(
            state.update_gradient(0.5, &[1.0, 2.0]),
            Err(UpdateError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            state.update_hessian(0.5, &Matrix::zeros(3)),
            Err(UpdateError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn config_validation_catches_inconsistencies() {
        let mut config = small_config(Algorithm::Newton);
        config.a_exponent = 0.4;
        assert!(matches!(
            config.validate(),
            Err(ConfigError::ExponentOutOfRange { .. })
        ));

        let mut config = small_config(Algorithm::Newton);
        config.bounds = BoxConstraint::uniform(3, -1.0, 1.0).unwrap();
        assert!(matches!(
            config.validate(),
            Err(ConfigError::DimensionMismatch { .. })
        ));

        let mut config = small_config(Algorithm::Newton);
        config.spec = QGaussianSpec::new(2, -0.5, 0.05).unwrap();
        assert!(matches!(
            config.validate(),
            Err(ConfigError::AlgorithmQRange { .. })
        ));
        config.algorithm = Algorithm::Gradient;
        assert!(config.validate().is_ok());

        let mut config = small_config(Algorithm::Newton);
        config.inner_iterations = 0;
        assert_eq!(config.validate(), Err(ConfigError::ZeroInner));
    }

    #[test]
    fn distance_hand_values() {
        assert_eq!(distance_to_target(&[0.3, 0.3], &[0.3, 0.3]), 0.0);
        assert!(close(
            distance_to_target(&[0.4, 0.3], &[0.3, 0.3]),
            0.1,
            1e-15
        ));
        let sixes = vec![0.6; 20];
        let threes = vec![0.3; 20];
        assert!(close(
            distance_to_target(&sixes, &threes),
            1.341_640_786_499_873_8,
            1e-12
        ));
    }

    #[test]
    fn zero_outer_iterations_return_only_the_initial_row() {
        let system = quadratic_system(&[0.3, 0.3], 0.0);
        let mut config = small_config(Algorithm::Newton);
        config.outer_iterations = 0;
        let t = run(&config, &system, &[0.9, 0.9]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].iteration, 0);
        assert_eq!(t.final_theta(), &[0.9, 0.9]);
        let expected = distance_to_target(&[0.9, 0.9], &[0.3, 0.3]);
        assert_eq!(t.final_distance(), Some(expected));
        assert_eq!(t.rows[0].grad_estimate_norm, 0.0);
        assert_eq!(t.rows[0].hessian_estimate_norm, 0.0);
    }

    #[test]
    fn newton_solves_the_noiseless_quadratic() {
        let system = quadratic_system(&[0.3, 0.3], 0.0);
        let config = small_config(Algorithm::Newton);
        let t = run(&config, &system, &[0.9, 0.9]).unwrap();
        let d = t.final_distance().unwrap();
        assert!(d < 0.05, "final distance {d}");
        assert_eq!(t.rows.len(), 501);
    }

    #[test]
    fn gradient_algorithm_never_touches_the_hessian_estimate() {
        let system = quadratic_system(&[0.3, 0.3], 0.0);
        let config = small_config(Algorithm::Gradient);
        let t = run(&config, &system, &[0.9, 0.9]).unwrap();
        for row in &t.rows {
            assert_eq!(row.hessian_estimate_norm, 0.0);
        }
        let d = t.final_distance().unwrap();
        assert!(d < 0.2, "final distance {d}");
    }

    #[test]
    fn frozen_theta_stays_bit_identical_while_estimates_move() {
        let system = quadratic_system(&[0.0, 0.0], 0.1);
        let mut config = small_config(Algorithm::Newton);
        config.freeze_theta = true;
        config.outer_iterations = 100;
        config.inner_iterations = 5;
        let start = [0.5, -0.25];
        let t = run(&config, &system, &start).unwrap();
        for row in &t.rows {
            assert_eq!(row.theta, start.to_vec());
        }
        assert!(t.rows.last().unwrap().grad_estimate_norm > 0.0);
    }

    #[test]
    fn every_iterate_stays_inside_the_box() {
        let system = quadratic_system(&[0.3, 0.3], 0.5);
        let mut config = small_config(Algorithm::Newton);
        config.outer_iterations = 200;
        config.inner_iterations = 2;
        let t = run(&config, &system, &[0.9, 0.9]).unwrap();
        for row in &t.rows {
            assert!(config.bounds.contains(&row.theta), "row {}", row.iteration);
        }
    }

    #[test]
    fn equal_seeds_give_bit_identical_trajectories() {
        let system = quadratic_system(&[0.3, 0.3], 1.0);
        let config = small_config(Algorithm::Newton);
        let a = run(&config, &system, &[0.9, 0.9]).unwrap();
        let b = run(&config, &system, &[0.9, 0.9]).unwrap();
        assert_eq!(a, b);
        let mut other = config.clone();
        other.seed = 43;
        let c = run(&other, &system, &[0.9, 0.9]).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn infeasible_or_mismatched_starts_are_rejected() {
        let system = quadratic_system(&[0.3, 0.3], 0.0);
        let config = small_config(Algorithm::Newton);
        assert_eq!(
            run(&config, &system, &[2.0, 0.0]),
            Err(RunError::InfeasibleStart)
        );
        assert!(matches!(
            run(&config, &system, &[0.5]),
            Err(RunError::DimensionMismatch { .. })
        ));
    }
}
