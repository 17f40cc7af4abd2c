//! The two projection operators of the optimizer loop.
//!
//! [`BoxConstraint`] clamps the parameter vector componentwise into a
//! rectangle; it is applied to the iterate and to both perturbed evaluation
//! points. [`project_pd`] floors the running Hessian estimate onto the cone
//! of symmetric matrices with minimum eigenvalue at least ε, either exactly
//! through an eigendecomposition (`FullSpectral`) or cheaply by discarding
//! off-diagonal terms and flooring the diagonal (`Jacobi`).
//! [`newton_direction`] then solves W d = z against the floored matrix.

use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{self, Matrix};

/// Rectangle { θ : lower ≤ θ ≤ upper } with strict lower < upper per
/// coordinate. Projection is the componentwise clamp, which is the exact
/// Euclidean projection for a box.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxConstraint {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProjectionError {
    /// Bounds must be nonempty, finite, and ordered lower < upper.
    InvalidBounds {
        index: usize,
    },
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
    /// The matrix (or right-hand side) contains NaN or infinity.
    NonFinite,
    /// ε must be finite and strictly positive.
    InvalidEpsilon {
        epsilon: f64,
    },
    /// A Newton solve was attempted against a matrix below the ε floor.
    FloorViolated {
        epsilon: f64,
    },
}

impl fmt::Display for ProjectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectionError::InvalidBounds { index } => {
                write!(
                    f,
                    "bounds at coordinate {index} are not finite with lower < upper"
                )
            }
            ProjectionError::DimensionMismatch { expected, got } => {
                write!(f, "expected dimension {expected}, got {got}")
            }
            ProjectionError::NonFinite => write!(f, "input contains NaN or infinity"),
            ProjectionError::InvalidEpsilon { epsilon } => {
                write!(
                    f,
                    "eigenvalue floor epsilon = {epsilon} must be finite and positive"
                )
            }
            ProjectionError::FloorViolated { epsilon } => {
                write!(
                    f,
                    "matrix does not meet the eigenvalue floor epsilon = {epsilon}"
                )
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ProjectionError {}

impl BoxConstraint {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ProjectionError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(ProjectionError::DimensionMismatch {
                expected: lower.len().max(1),
                got: upper.len(),
            });
        }
        for i in 0..lower.len() {
            if !lower[i].is_finite() || !upper[i].is_finite() || lower[i] >= upper[i] {
                return Err(ProjectionError::InvalidBounds { index: i });
            }
        }
        Ok(BoxConstraint { lower, upper })
    }

    /// The same interval [lower, upper] in every coordinate.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self, ProjectionError> {
        BoxConstraint::new(alloc::vec![lower; dim], alloc::vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Componentwise lower ≤ θᵢ ≤ upper (closed box). NaN coordinates are
    /// never contained.
    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(t, (lo, hi))| *t >= *lo && *t <= *hi)
    }

    pub fn project_in_place(&self, theta: &mut [f64]) {
        assert_eq!(theta.len(), self.dim(), "theta has wrong dimension");
        for (t, (lo, hi)) in theta.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *t = t.clamp(*lo, *hi);
        }
    }

    pub fn project(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = theta.to_vec();
        self.project_in_place(&mut out);
        out
    }
}

/// How the positive-definite floor is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdVariant {
    /// Symmetrize, eigendecompose, clamp every eigenvalue to at least ε,
    /// reconstruct. Exact projection in Frobenius norm onto the ε-floored
    /// cone; O(N³) per call.
    FullSpectral,
    /// Zero the off-diagonal entries and clamp each diagonal entry to at
    /// least ε. O(N²) per call and the resulting Newton solve is a
    /// coordinatewise division, at the cost of discarding curvature
    /// cross-terms.
    Jacobi,
}

impl PdVariant {
    pub fn token(&self) -> &'static str {
        match self {
            PdVariant::FullSpectral => "full_spectral",
            PdVariant::Jacobi => "jacobi",
        }
    }

    pub fn parse(s: &str) -> Option<PdVariant> {
        match s {
            "full_spectral" => Some(PdVariant::FullSpectral),
            "jacobi" => Some(PdVariant::Jacobi),
            _ => None,
        }
    }
}

impl fmt::Display for PdVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A projection variant together with its eigenvalue floor ε > 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdProjectionPolicy {
    variant: PdVariant,
    epsilon: f64,
}

impl PdProjectionPolicy {
    pub fn new(variant: PdVariant, epsilon: f64) -> Result<Self, ProjectionError> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(ProjectionError::InvalidEpsilon { epsilon });
        }
        Ok(PdProjectionPolicy { variant, epsilon })
    }

    pub fn jacobi(epsilon: f64) -> Result<Self, ProjectionError> {
        PdProjectionPolicy::new(PdVariant::Jacobi, epsilon)
    }

    pub fn full_spectral(epsilon: f64) -> Result<Self, ProjectionError> {
        PdProjectionPolicy::new(PdVariant::FullSpectral, epsilon)
    }

    pub fn variant(&self) -> PdVariant {
        self.variant
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Round-off allowance used when deciding whether a matrix already sits on
/// the floored cone: reconstruction after an eigendecomposition is only
/// accurate to a small multiple of machine precision times the matrix scale.
fn floor_slack(scale: f64) -> f64 {
    1e-12 * if scale > 1.0 { scale } else { 1.0 }
}

/// Floor a (not necessarily symmetric) matrix onto the symmetric cone with
/// minimum eigenvalue ≥ ε. Idempotent exactly: a matrix already on the cone
/// is returned unchanged (after exact symmetrization, which is the identity
/// for symmetric input), so projecting twice gives bit-identical output.
pub fn project_pd(policy: &PdProjectionPolicy, w: &Matrix) -> Result<Matrix, ProjectionError> {
    if !w.is_finite() {
        return Err(ProjectionError::NonFinite);
    }
    let eps = policy.epsilon();
    match policy.variant() {
        PdVariant::Jacobi => Ok(Matrix::from_fn(w.dim(), |i, j| {
            if i == j {
                let d = w.get(i, i);
                if d > eps {
                    d
                } else {
                    eps
                }
            } else {
                0.0
            }
        })),
        PdVariant::FullSpectral => {
            let sym = w.symmetrized();
            let eig = sym.sym_eigen();
            let slack = floor_slack(sym.frobenius_norm());
            if eig.values.iter().all(|v| *v >= eps - slack) {
                return Ok(sym);
            }
            let n = sym.dim();
            let clamped: Vec<f64> = eig
                .values
                .iter()
                .map(|v| if *v > eps { *v } else { eps })
                .collect();
            // Reconstruct V diag(clamped) V^T, filling the upper triangle and
            // mirroring so the output is exactly symmetric.
            let mut out = Matrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    let mut acc = 0.0;
                    for (k, lam) in clamped.iter().enumerate() {
                        acc += eig.vectors.get(i, k) * lam * eig.vectors.get(j, k);
                    }
                    out.set(i, j, acc);
                    out.set(j, i, acc);
                }
            }
            Ok(out)
        }
    }
}

/// Solve W d = z for the Newton direction against a matrix that has already
/// been floored by [`project_pd`] with the same policy.
///
/// * `Jacobi`: coordinatewise division by the diagonal (off-diagonal entries
///   are ignored, matching the Jacobi floor which zeroes them).
/// * `FullSpectral`: Cholesky solve; the floor is checked by factoring
///   W − (ε − slack)·I first.
///
/// Returns [`ProjectionError::FloorViolated`] when the matrix does not meet
/// the ε floor, rather than producing an unstable or wrongly-signed step.
pub fn newton_direction(
    policy: &PdProjectionPolicy,
    w: &Matrix,
    z: &[f64],
) -> Result<Vec<f64>, ProjectionError> {
    if z.len() != w.dim() {
        return Err(ProjectionError::DimensionMismatch {
            expected: w.dim(),
            got: z.len(),
        });
    }
    if !w.is_finite() || !linalg::all_finite(z) {
        return Err(ProjectionError::NonFinite);
    }
    let eps = policy.epsilon();
    match policy.variant() {
        PdVariant::Jacobi => {
            let floor = eps - floor_slack(eps);
            let mut d = Vec::with_capacity(z.len());
            for (i, zi) in z.iter().enumerate() {
                let wii = w.get(i, i);
                if wii < floor {
                    return Err(ProjectionError::FloorViolated { epsilon: eps });
                }
                d.push(zi / wii);
            }
            Ok(d)
        }
        PdVariant::FullSpectral => {
            let slack = floor_slack(w.frobenius_norm());
            // Accept anything a full-spectral floor could have produced:
            // lambda_min >= eps - slack up to reconstruction round-off.
            let shift = eps - 2.0 * slack;
            let shifted = w.plus_scaled_identity(-shift);
            if shifted.cholesky().is_none() {
                return Err(ProjectionError::FloorViolated { epsilon: eps });
            }
            let chol = w
                .cholesky()
                .ok_or(ProjectionError::FloorViolated { epsilon: eps })?;
            Ok(chol.solve(z))
        }
    }
}
