//! Batch experiment front-end for the q-Gaussian smoothed-functional
//! optimizers: plan files, seeded replicated sweeps with CSV output,
//! trajectory export, and statistical verification suites.

pub mod config;
pub mod pool;
pub mod sweep;
pub mod trajectory;
pub mod verify;
