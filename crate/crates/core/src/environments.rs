//! Objective environments behind one replica interface.
//!
//! The optimizer interacts with an environment only through
//! [`SimReplica::observe_cost`]: hand over the current parameter vector, get
//! one noisy cost observation back. Replicas own their random streams and
//! whatever internal state persists between observations, so a plus and a
//! minus replica can evolve independently from a shared parameter trajectory.
//!
//! Two environments are provided: [`AnalyticSystem`] wraps a closed-form
//! objective with optional additive Gaussian noise (used for exactness
//! cross-checks), and [`QueueNetwork`] is a two-node open queueing network
//! with feedback whose long-run sojourn cost depends on the service-rate
//! parameters. The queue is simulated event by event; each observation
//! advances the simulation by exactly one event, so costs arrive as a
//! Markov sequence rather than i.i.d. noise.

use alloc::collections::VecDeque;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::projections::BoxConstraint;

/// One independent simulation instance with persistent state and private
/// randomness.
pub trait SimReplica {
    /// Advance the environment one step under `params` and return the cost
    /// observed at the new state.
    fn observe_cost(&mut self, params: &[f64]) -> f64;
}

/// A family of replicas plus the metadata the optimizer needs: how to spawn
/// an independent replica from a seed, and (when the environment defines
/// one) the parameter vector trajectories should report their distance to.
pub trait SimSystem {
    type Replica: SimReplica;

    fn create_replica(&self, seed: u64) -> Self::Replica;

    fn target(&self) -> Option<&[f64]> {
        None
    }
}

/// Shareable closed-form objective.
pub type Objective = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Closed-form objective J with observations J(θ) + σ·z, z standard normal.
/// With σ = 0 observations are exact (a noise variate is still drawn, so the
/// stream advances identically regardless of σ).
pub struct AnalyticSystem {
    objective: Objective,
    noise_sd: f64,
    target: Option<Vec<f64>>,
}

impl AnalyticSystem {
    pub fn new<F>(objective: F, noise_sd: f64) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        assert!(
            noise_sd.is_finite() && noise_sd >= 0.0,
            "noise standard deviation must be finite and nonnegative"
        );
        AnalyticSystem {
            objective: Arc::new(objective),
            noise_sd,
            target: None,
        }
    }

    /// Record the known minimizer so trajectories report distances to it.
    pub fn with_target(mut self, target: Vec<f64>) -> Self {
        self.target = Some(target);
        self
    }

    /// One noisy observation of the objective using an external generator.
    pub fn observe<R: Rng + ?Sized>(&self, params: &[f64], rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        (self.objective)(params) + self.noise_sd * z
    }
}

pub struct AnalyticReplica {
    objective: Objective,
    noise_sd: f64,
    rng: ChaCha8Rng,
}

impl SimReplica for AnalyticReplica {
    fn observe_cost(&mut self, params: &[f64]) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        (self.objective)(params) + self.noise_sd * z
    }
}

impl SimSystem for AnalyticSystem {
    type Replica = AnalyticReplica;

    fn create_replica(&self, seed: u64) -> AnalyticReplica {
        AnalyticReplica {
            objective: Arc::clone(&self.objective),
            noise_sd: self.noise_sd,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn target(&self) -> Option<&[f64]> {
        self.target.as_deref()
    }
}

/// Parameters of the two-node feedback network.
///
/// External Poisson arrivals enter each node; node 1 departures always move
/// to node 2; a node 2 departure leaves the system with probability
/// `leave_probability`, otherwise it rejoins the back of node 1's queue.
/// Service at node k takes u·(1 + ‖θₖ − θ̄ₖ‖²)/Rₖ with u uniform on (0, 1),
/// where θₖ is that node's slice of the parameter vector: service is fastest
/// when the parameters sit at `theta_bar`, which is therefore the target the
/// optimizer should approach.
#[derive(Clone, Debug, PartialEq)]
pub struct QueueNetworkConfig {
    /// External Poisson arrival rates (λ₁, λ₂).
    pub arrival_rates: [f64; 2],
    /// Probability that a node 2 departure exits the system (the complement
    /// feeds back into node 1).
    pub leave_probability: f64,
    /// Service-rate constants (R₁, R₂): larger means faster service.
    pub service_rate_constants: [f64; 2],
    /// How many parameter coordinates each node owns (N₁, N₂).
    pub node_dims: [usize; 2],
    /// The service-optimal parameter vector, length N₁ + N₂.
    pub theta_bar: Vec<f64>,
    /// Feasible region for the parameter vector.
    pub bounds: BoxConstraint,
}

impl Default for QueueNetworkConfig {
    /// The benchmark profile: λ = (0.2, 0.1), leave probability 0.4,
    /// R = (10, 20), ten parameters per node constrained to [0.1, 0.6] with
    /// θ̄ = 0.3 everywhere.
    fn default() -> Self {
        let dim = 20;
        QueueNetworkConfig {
            arrival_rates: [0.2, 0.1],
            leave_probability: 0.4,
            service_rate_constants: [10.0, 20.0],
            node_dims: [10, 10],
            theta_bar: alloc::vec![0.3; dim],
            bounds: BoxConstraint::uniform(dim, 0.1, 0.6).expect("static bounds are valid"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum QueueConfigError {
    InvalidArrivalRate { node: usize, rate: f64 },
    InvalidLeaveProbability { p: f64 },
    InvalidRateConstant { node: usize, value: f64 },
    ZeroNodeDimension { node: usize },
    ThetaBarWrongLength { expected: usize, got: usize },
    ThetaBarNotFinite,
    BoundsWrongLength { expected: usize, got: usize },
}

impl fmt::Display for QueueConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueueConfigError::InvalidArrivalRate { node, rate } => {
                write!(
                    f,
                    "arrival rate {rate} at node {node} must be finite and positive"
                )
            }
            QueueConfigError::InvalidLeaveProbability { p } => {
                write!(f, "leave probability {p} must lie strictly between 0 and 1")
            }
            QueueConfigError::InvalidRateConstant { node, value } => {
                write!(
                    f,
                    "rate constant {value} at node {node} must be finite and positive"
                )
            }
            QueueConfigError::ZeroNodeDimension { node } => {
                write!(f, "node {node} must own at least one parameter coordinate")
            }
            QueueConfigError::ThetaBarWrongLength { expected, got } => {
                write!(f, "theta_bar has length {got}, expected {expected}")
            }
            QueueConfigError::ThetaBarNotFinite => write!(f, "theta_bar must be finite"),
            QueueConfigError::BoundsWrongLength { expected, got } => {
                write!(f, "bounds have dimension {got}, expected {expected}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for QueueConfigError {}

impl QueueNetworkConfig {
    /// Total parameter dimension N₁ + N₂.
    pub fn dim(&self) -> usize {
        self.node_dims[0] + self.node_dims[1]
    }

    fn node_range(&self, node: usize) -> Range<usize> {
        if node == 0 {
            0..self.node_dims[0]
        } else {
            self.node_dims[0]..self.dim()
        }
    }

    pub fn validate(&self) -> Result<(), QueueConfigError> {
        for (node, rate) in self.arrival_rates.iter().enumerate() {
            if !rate.is_finite() || *rate <= 0.0 {
                return Err(QueueConfigError::InvalidArrivalRate { node, rate: *rate });
            }
        }
        let p = self.leave_probability;
        if !(p > 0.0 && p < 1.0) {
            return Err(QueueConfigError::InvalidLeaveProbability { p });
        }
        for (node, value) in self.service_rate_constants.iter().enumerate() {
            if !value.is_finite() || *value <= 0.0 {
                return Err(QueueConfigError::InvalidRateConstant {
                    node,
                    value: *value,
                });
            }
        }
        for (node, d) in self.node_dims.iter().enumerate() {
            if *d == 0 {
                return Err(QueueConfigError::ZeroNodeDimension { node });
            }
        }
        if self.theta_bar.len() != self.dim() {
            return Err(QueueConfigError::ThetaBarWrongLength {
                expected: self.dim(),
                got: self.theta_bar.len(),
            });
        }
        if !crate::linalg::all_finite(&self.theta_bar) {
            return Err(QueueConfigError::ThetaBarNotFinite);
        }
        if self.bounds.dim() != self.dim() {
            return Err(QueueConfigError::BoundsWrongLength {
                expected: self.dim(),
                got: self.bounds.dim(),
            });
        }
        Ok(())
    }

    /// Service duration at `node` for uniform variate u ∈ (0, 1]:
    /// u·(1 + ‖θₖ − θ̄ₖ‖²)/Rₖ using the node's slice of `params`.
    pub fn service_time(&self, node: usize, params: &[f64], u: f64) -> f64 {
        assert!(node < 2, "node index out of range");
        assert_eq!(params.len(), self.dim(), "params have wrong dimension");
        assert!(u > 0.0 && u <= 1.0, "uniform variate must lie in (0, 1]");
        let range = self.node_range(node);
        let mut dist_sq = 0.0;
        for i in range.clone() {
            let d = params[i] - self.theta_bar[i];
            dist_sq += d * d;
        }
        u * (1.0 + dist_sq) / self.service_rate_constants[node]
    }
}

/// The two-node feedback network as a [`SimSystem`]; spawning a replica
/// builds an empty network with three independent random streams (arrivals,
/// services, routing) derived from the given seed.
pub struct QueueNetwork {
    config: QueueNetworkConfig,
}

impl QueueNetwork {
    pub fn new(config: QueueNetworkConfig) -> Result<Self, QueueConfigError> {
        config.validate()?;
        Ok(QueueNetwork { config })
    }

    pub fn config(&self) -> &QueueNetworkConfig {
        &self.config
    }
}

impl SimSystem for QueueNetwork {
    type Replica = QueueReplica;

    fn create_replica(&self, seed: u64) -> QueueReplica {
        QueueReplica::new(self.config.clone(), seed)
    }

    fn target(&self) -> Option<&[f64]> {
        Some(&self.config.theta_bar)
    }
}

/// Event counts and busy time accumulated by a replica, for diagnostics such
/// as flow-balance and utilization checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplicaCounters {
    pub events: u64,
    pub external_arrivals: [u64; 2],
    pub completions: [u64; 2],
    pub exits: u64,
    pub busy_time: [f64; 2],
}

struct InService {
    entered_network: f64,
    completes_at: f64,
}

struct NodeState {
    /// Network-entry times of queued customers, back of the queue last.
    waiting: VecDeque<f64>,
    in_service: Option<InService>,
}

impl NodeState {
    fn count(&self) -> usize {
        self.waiting.len() + usize::from(self.in_service.is_some())
    }
}

enum PendingEvent {
    Arrival(usize),
    Completion(usize),
}

/// One running instance of the network. State persists across observations;
/// each [`SimReplica::observe_cost`] call processes exactly one event
/// (whichever of the four candidate events is earliest, external arrivals
/// winning ties over completions and node 1 over node 2) and returns the
/// total age of all customers currently in the system: the sum over
/// customers of (current clock − their network-entry time).
pub struct QueueReplica {
    config: QueueNetworkConfig,
    clock: f64,
    nodes: [NodeState; 2],
    next_arrival: [f64; 2],
    interarrival: [Exp<f64>; 2],
    arrival_rng: ChaCha8Rng,
    service_rng: ChaCha8Rng,
    routing_rng: ChaCha8Rng,
    counters: ReplicaCounters,
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

impl QueueReplica {
    fn new(config: QueueNetworkConfig, seed: u64) -> QueueReplica {
        let interarrival = [
            Exp::new(config.arrival_rates[0]).expect("validated rate"),
            Exp::new(config.arrival_rates[1]).expect("validated rate"),
        ];
        let mut arrival_rng = stream(seed, 0);
        let service_rng = stream(seed, 1);
        let routing_rng = stream(seed, 2);
        let next_arrival = [
            interarrival[0].sample(&mut arrival_rng),
            interarrival[1].sample(&mut arrival_rng),
        ];
        QueueReplica {
            config,
            clock: 0.0,
            nodes: [
                NodeState {
                    waiting: VecDeque::new(),
                    in_service: None,
                },
                NodeState {
                    waiting: VecDeque::new(),
                    in_service: None,
                },
            ],
            next_arrival,
            interarrival,
            arrival_rng,
            service_rng,
            routing_rng,
            counters: ReplicaCounters::default(),
        }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn customers_in_system(&self) -> usize {
        self.nodes[0].count() + self.nodes[1].count()
    }

    pub fn counters(&self) -> &ReplicaCounters {
        &self.counters
    }

    fn completion_time(&self, node: usize) -> f64 {
        self.nodes[node]
            .in_service
            .as_ref()
            .map_or(f64::INFINITY, |s| s.completes_at)
    }

    /// If `node` has an idle server and a waiting customer, begin service
    /// under the current parameters.
    fn try_start_service(&mut self, node: usize, params: &[f64]) {
        if self.nodes[node].in_service.is_some() || self.nodes[node].waiting.is_empty() {
            return;
        }
        let entered_network = self.nodes[node].waiting.pop_front().expect("nonempty");
        let u = loop {
            let u: f64 = self.service_rng.gen();
            if u > 0.0 {
                break u;
            }
        };
        let duration = self.config.service_time(node, params, u);
        self.nodes[node].in_service = Some(InService {
            entered_network,
            completes_at: self.clock + duration,
        });
    }

    /// Sum of (clock − network-entry time) over every customer present,
    /// waiting or in service.
    fn cost_now(&self) -> f64 {
        let mut total = 0.0;
        for node in &self.nodes {
            for entered in &node.waiting {
                total += self.clock - entered;
            }
            if let Some(s) = &node.in_service {
                total += self.clock - s.entered_network;
            }
        }
        total
    }

    /// Process the single earliest pending event (external arrival at either
    /// node or a service completion, arrivals and lower node index winning
    /// ties), then return the total customer age at the new clock.
    pub fn advance_and_observe(&mut self, params: &[f64]) -> f64 {
        assert_eq!(
            params.len(),
            self.config.dim(),
            "params have wrong dimension"
        );
        let candidates = [
            (PendingEvent::Arrival(0), self.next_arrival[0]),
            (PendingEvent::Arrival(1), self.next_arrival[1]),
            (PendingEvent::Completion(0), self.completion_time(0)),
            (PendingEvent::Completion(1), self.completion_time(1)),
        ];
        let mut best_time = f64::INFINITY;
        let mut best = PendingEvent::Arrival(0);
        for (event, time) in candidates {
            if time < best_time {
                best_time = time;
                best = event;
            }
        }
        let dt = best_time - self.clock;
        for (k, node) in self.nodes.iter().enumerate() {
            if node.in_service.is_some() {
                self.counters.busy_time[k] += dt;
            }
        }
        self.clock = best_time;
        self.counters.events += 1;
        match best {
            PendingEvent::Arrival(k) => {
                self.counters.external_arrivals[k] += 1;
                self.nodes[k].waiting.push_back(self.clock);
                self.next_arrival[k] =
                    self.clock + self.interarrival[k].sample(&mut self.arrival_rng);
            }
            PendingEvent::Completion(k) => {
                let done = self.nodes[k]
                    .in_service
                    .take()
                    .expect("completion without service");
                self.counters.completions[k] += 1;
                if k == 0 {
                    self.nodes[1].waiting.push_back(done.entered_network);
                } else {
                    let u: f64 = self.routing_rng.gen();
                    if u < self.config.leave_probability {
                        self.counters.exits += 1;
                    } else {
                        self.nodes[0].waiting.push_back(done.entered_network);
                    }
                }
            }
        }
        self.try_start_service(0, params);
        self.try_start_service(1, params);
        self.cost_now()
    }
}

impl SimReplica for QueueReplica {
    fn observe_cost(&mut self, params: &[f64]) -> f64 {
        self.advance_and_observe(params)
    }
}
