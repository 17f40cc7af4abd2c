//! Two-sided smoothed-functional estimators.
//!
//! Given a perturbation η and the pair of observed costs h⁺ = h(θ + βη),
//! h⁻ = h(θ − βη), these functions produce single-sample estimates whose
//! expectations are the gradient and Hessian of the smoothed objective:
//!
//! * gradient increment:  η (h⁺ − h⁻) / (β s ρ),
//! * Hessian increment:   H(η) (h⁺ + h⁻) / (β² s),
//!
//! with s = N + 2 − Nq and the weight matrix
//!
//! * H(η)ᵢⱼ = (2q/s) ηᵢηⱼ / ρ²  off the diagonal,
//! * H(η)ᵢᵢ = (2q/s) ηᵢ² / ρ² − 1/ρ,
//!
//! which collapses to ηηᵀ − I in the Gaussian case. The two-sided form
//! cancels the zeroth-order term exactly: constant objectives produce a
//! gradient increment of exactly zero.
//!
//! [`batch_gradient`] and [`batch_hessian`] average fresh-perturbation
//! increments for a callable objective; the optimizer loop instead feeds
//! increments into its own running averages.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::linalg::Matrix;
use crate::qgaussian::{Perturbation, QGaussianSpec};

/// Single-sample gradient estimate, one entry per parameter coordinate.
pub type GradientIncrement = Vec<f64>;

/// Single-sample Hessian estimate, a full symmetric N×N matrix.
pub type HessianIncrement = Matrix;

#[derive(Clone, Debug, PartialEq)]
pub enum EstimatorError {
    /// H(η) and the Hessian increment divide by ρ²; ρ must be positive.
    RhoNotPositive { rho: f64 },
    /// The gradient increment divides by ρ; ρ must be nonzero.
    RhoZero,
}

impl fmt::Display for EstimatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorError::RhoNotPositive { rho } => {
                write!(f, "Hessian weight needs rho > 0, got rho = {rho}")
            }
            EstimatorError::RhoZero => write!(f, "gradient increment needs rho != 0"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EstimatorError {}

/// The Hessian weight matrix H(η). Symmetric by construction; for q = 1
/// (where ρ = 1 exactly) it reduces to ηηᵀ − I.
pub fn h_matrix(spec: &QGaussianSpec, pert: &Perturbation) -> Result<Matrix, EstimatorError> {
    assert_eq!(
        pert.eta.len(),
        spec.dim(),
        "perturbation has wrong dimension"
    );
    if pert.rho.is_nan() || pert.rho <= 0.0 {
        return Err(EstimatorError::RhoNotPositive { rho: pert.rho });
    }
    let c = 2.0 * spec.q() / spec.scale_factor();
    let inv_rho = 1.0 / pert.rho;
    let inv_rho_sq = inv_rho * inv_rho;
    let eta = &pert.eta;
    // Multiply in an orientation-independent order so the (i, j) and (j, i)
    // entries are bit-identical, keeping the matrix exactly symmetric.
    Ok(Matrix::from_fn(spec.dim(), |i, j| {
        let v = c * (eta[i.min(j)] * eta[i.max(j)]) * inv_rho_sq;
        if i == j {
            v - inv_rho
        } else {
            v
        }
    }))
}

/// Single-sample estimate of the smoothed gradient at θ from one two-sided
/// cost pair: η (h⁺ − h⁻) / (β s ρ).
pub fn grad_increment(
    spec: &QGaussianSpec,
    pert: &Perturbation,
    cost_plus: f64,
    cost_minus: f64,
) -> Result<GradientIncrement, EstimatorError> {
    assert_eq!(
        pert.eta.len(),
        spec.dim(),
        "perturbation has wrong dimension"
    );
    if pert.rho == 0.0 {
        return Err(EstimatorError::RhoZero);
    }
    let d = (cost_plus - cost_minus) / (spec.beta() * spec.scale_factor() * pert.rho);
    Ok(pert.eta.iter().map(|e| e * d).collect())
}

/// Single-sample estimate of the smoothed Hessian: H(η) (h⁺ + h⁻) / (β² s).
pub fn hess_increment(
    spec: &QGaussianSpec,
    pert: &Perturbation,
    cost_plus: f64,
    cost_minus: f64,
) -> Result<HessianIncrement, EstimatorError> {
    let mut h = h_matrix(spec, pert)?;
    let beta = spec.beta();
    h.scale((cost_plus + cost_minus) / (beta * beta * spec.scale_factor()));
    Ok(h)
}

/// Monte Carlo estimate of the smoothed objective value
/// E[(J(θ + βη) + J(θ − βη)) / 2] using `num_samples` fresh perturbations.
/// For a constant objective this returns the constant exactly.
pub fn smoothed_value<R, F>(
    objective: F,
    spec: &QGaussianSpec,
    theta: &[f64],
    num_samples: usize,
    rng: &mut R,
) -> f64
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(theta.len(), spec.dim(), "theta has wrong dimension");
    assert!(num_samples >= 1, "need at least one sample");
    let beta = spec.beta();
    let mut plus = vec![0.0; theta.len()];
    let mut minus = vec![0.0; theta.len()];
    let mut sum = 0.0;
    for _ in 0..num_samples {
        let pert = spec.sample(rng);
        for i in 0..theta.len() {
            plus[i] = theta[i] + beta * pert.eta[i];
            minus[i] = theta[i] - beta * pert.eta[i];
        }
        sum += 0.5 * (objective(&plus) + objective(&minus));
    }
    sum / num_samples as f64
}

/// Average of `num_samples` gradient increments for a callable objective,
/// each from a fresh perturbation. Estimates the gradient of the smoothed
/// objective at θ.
pub fn batch_gradient<R, F>(
    objective: F,
    spec: &QGaussianSpec,
    theta: &[f64],
    num_samples: usize,
    rng: &mut R,
) -> GradientIncrement
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(theta.len(), spec.dim(), "theta has wrong dimension");
    assert!(num_samples >= 1, "need at least one sample");
    let beta = spec.beta();
    let n = theta.len();
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut sum = vec![0.0; n];
    for _ in 0..num_samples {
        let pert = spec.sample(rng);
        for i in 0..n {
            plus[i] = theta[i] + beta * pert.eta[i];
            minus[i] = theta[i] - beta * pert.eta[i];
        }
        let g = grad_increment(spec, &pert, objective(&plus), objective(&minus))
            .expect("sampler only yields interior perturbations");
        for i in 0..n {
            sum[i] += g[i];
        }
    }
    let inv = 1.0 / num_samples as f64;
    for v in &mut sum {
        *v *= inv;
    }
    sum
}

/// Average of `num_samples` Hessian increments for a callable objective.
pub fn batch_hessian<R, F>(
    objective: F,
    spec: &QGaussianSpec,
    theta: &[f64],
    num_samples: usize,
    rng: &mut R,
) -> HessianIncrement
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(theta.len(), spec.dim(), "theta has wrong dimension");
    assert!(num_samples >= 1, "need at least one sample");
    let beta = spec.beta();
    let n = theta.len();
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut sum = Matrix::zeros(n);
    for _ in 0..num_samples {
        let pert = spec.sample(rng);
        for i in 0..n {
            plus[i] = theta[i] + beta * pert.eta[i];
            minus[i] = theta[i] - beta * pert.eta[i];
        }
        let h = hess_increment(spec, &pert, objective(&plus), objective(&minus))
            .expect("sampler only yields interior perturbations");
        sum.add_scaled(1.0, &h);
    }
    sum.scale(1.0 / num_samples as f64);
    sum
}
