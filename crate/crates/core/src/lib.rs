#![cfg_attr(not(feature = "std"), no_std)]

//! Derivative-free stochastic optimization driven by q-Gaussian smoothing.
//!
//! The crate estimates gradients and Hessians of a black-box objective from
//! two-sided function observations at q-Gaussian-perturbed points, then feeds
//! those estimates into a two-timescale projected stochastic-approximation
//! loop (a Newton variant and a gradient variant). It ships a two-node
//! feedback queueing network as the reference simulation benchmark plus
//! analytic objectives for exact cross-checks.
//!
//! Everything in this crate is deterministic given a seed: random substreams
//! (perturbations, the two simulation replicas) are derived from the run seed
//! and never shared, and scalar math is routed through `libm` so results do
//! not depend on the platform's libm or on the `std` feature.

extern crate alloc;

mod math;

pub mod environments;
pub mod estimators;
pub mod linalg;
pub mod optimizer;
pub mod projections;
pub mod qgaussian;
pub mod seeds;
pub mod stats;
