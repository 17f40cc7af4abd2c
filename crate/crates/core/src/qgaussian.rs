//! Standard multivariate q-Gaussian perturbations.
//!
//! A `QGaussianSpec` fixes the dimension N, the deformation parameter q, and
//! the smoothing width β callers use when forming θ ± βη. The family is
//! admissible (normalizable) exactly when q < 1 + 2/N. Three regimes share
//! one interface:
//!
//! * q = 1: the standard normal, handled by an explicit branch so that ρ ≡ 1
//!   holds exactly rather than up to round-off;
//! * q > 1: heavy tails on all of ℝᴺ (a scaled Student-t);
//! * q < 1: compact support on the ball ‖x‖² < s/(1−q), where
//!   s = N + 2 − Nq.
//!
//! Sampling is exact and rejection-free in all regimes, and every draw comes
//! back as a [`Perturbation`] with its ρ factor cached, since the smoothed
//! gradient and Hessian estimators divide by powers of ρ.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Beta, ChiSquared, Distribution, StandardNormal};

use crate::linalg;
use crate::math;

/// Parameters of a standard N-dimensional q-Gaussian smoothing kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct QGaussianSpec {
    dim: usize,
    q: f64,
    beta: f64,
}

/// One sampled perturbation η together with ρ(η) = 1 − (1−q)‖η‖²/s, cached
/// at draw time. For q = 1 the cached value is exactly 1.0.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    pub eta: Vec<f64>,
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpecError {
    /// The dimension must be at least 1.
    ZeroDimension,
    /// q must be finite and strictly below 1 + 2/N.
    QOutOfRange { q: f64, limit: f64 },
    /// The smoothing width must be finite and strictly positive.
    InvalidBeta { beta: f64 },
    /// The ρ-weighted moment targets require q > 0.
    MomentTargetsUndefined { q: f64 },
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::ZeroDimension => write!(f, "dimension must be at least 1"),
            SpecError::QOutOfRange { q, limit } => {
                write!(f, "q = {q} is not admissible; need a finite q < {limit}")
            }
            SpecError::InvalidBeta { beta } => {
                write!(
                    f,
                    "smoothing width beta = {beta} must be finite and positive"
                )
            }
            SpecError::MomentTargetsUndefined { q } => {
                write!(
                    f,
                    "moment targets with 1/rho^2 weights require q > 0, got q = {q}"
                )
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SpecError {}

/// Closed-form expectations of ρ-weighted monomials under the standard
/// q-Gaussian, with s = N + 2 − Nq:
///
/// * E[1/ρ] = E[ηᵢ²/ρ] = s/2 for every coordinate i,
/// * E[ηᵢ²/ρ²] = E[ηᵢ²ηⱼ²/ρ²] = s²/(4q) for i ≠ j,
/// * E[ηᵢ⁴/ρ²] = 3s²/(4q).
///
/// These are what make the two-sided estimators unbiased, and the Monte
/// Carlo verification suites test sample means against exactly these fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentTargets {
    /// E[1/ρ], which equals E[ηᵢ²/ρ].
    pub inv_rho: f64,
    /// E[ηᵢ²/ρ²].
    pub coord_sq_over_rho_sq: f64,
    /// E[ηᵢ⁴/ρ²].
    pub coord_quartic_over_rho_sq: f64,
    /// E[ηᵢ²ηⱼ²/ρ²] for distinct coordinates (meaningful when N ≥ 2).
    pub cross_sq_over_rho_sq: f64,
}

impl QGaussianSpec {
    pub fn new(dim: usize, q: f64, beta: f64) -> Result<Self, SpecError> {
        if dim == 0 {
            return Err(SpecError::ZeroDimension);
        }
        let limit = 1.0 + 2.0 / dim as f64;
        if !q.is_finite() || q >= limit {
            return Err(SpecError::QOutOfRange { q, limit });
        }
        if !beta.is_finite() || beta <= 0.0 {
            return Err(SpecError::InvalidBeta { beta });
        }
        Ok(QGaussianSpec { dim, q, beta })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Supremum of admissible q for this dimension: 1 + 2/N, exclusive.
    pub fn q_limit(&self) -> f64 {
        1.0 + 2.0 / self.dim as f64
    }

    /// s = N + 2 − Nq. This single scalar sets the support radius, the ρ
    /// denominator, and every moment target; it is positive for admissible q.
    pub fn scale_factor(&self) -> f64 {
        let n = self.dim as f64;
        n + 2.0 - n * self.q
    }

    pub fn is_gaussian(&self) -> bool {
        self.q == 1.0
    }

    /// Radius of the support ball for q < 1; `None` when the support is all
    /// of ℝᴺ (q ≥ 1).
    pub fn support_radius(&self) -> Option<f64> {
        if self.q < 1.0 {
            Some(math::sqrt(self.scale_factor() / (1.0 - self.q)))
        } else {
            None
        }
    }

    /// ρ(η) = 1 − (1−q)‖η‖²/s, the reweighting factor the estimators divide
    /// by. Returns exactly 1.0 when q = 1 for any η.
    pub fn rho(&self, eta: &[f64]) -> f64 {
        assert_eq!(eta.len(), self.dim, "eta has wrong dimension");
        if self.q == 1.0 {
            return 1.0;
        }
        1.0 - (1.0 - self.q) * linalg::norm_sq(eta) / self.scale_factor()
    }

    /// Whether x lies in the (open) support of the density. Always true for
    /// q ≥ 1; for q < 1 the support is the open ball ‖x‖² < s/(1−q).
    pub fn support_contains(&self, x: &[f64]) -> bool {
        assert_eq!(x.len(), self.dim, "point has wrong dimension");
        if self.q >= 1.0 {
            return true;
        }
        linalg::norm_sq(x) < self.scale_factor() / (1.0 - self.q)
    }

    /// The normalizing constant K such that the density integrates to one:
    ///
    /// * q = 1: (2π)^{N/2},
    /// * q < 1: (s/(1−q))^{N/2} π^{N/2} Γ(a) / Γ(a + N/2) with a = (2−q)/(1−q),
    /// * q > 1: (s/(q−1))^{N/2} π^{N/2} Γ(a − N/2) / Γ(a) with a = 1/(q−1).
    ///
    /// Gamma ratios are evaluated in log space so large dimensions and q near
    /// the admissibility limit do not overflow.
    pub fn normalizing_constant(&self) -> f64 {
        let half_n = 0.5 * self.dim as f64;
        let s = self.scale_factor();
        if self.q == 1.0 {
            return math::exp(half_n * math::ln(2.0 * core::f64::consts::PI));
        }
        let pi = core::f64::consts::PI;
        if self.q < 1.0 {
            let a = (2.0 - self.q) / (1.0 - self.q);
            let radial = half_n * math::ln(s / (1.0 - self.q) * pi);
            math::exp(radial) * math::gamma_ratio(a, a + half_n)
        } else {
            let a = 1.0 / (self.q - 1.0);
            let radial = half_n * math::ln(s / (self.q - 1.0) * pi);
            math::exp(radial) * math::gamma_ratio(a - half_n, a)
        }
    }

    /// Density of the standard q-Gaussian at x. Exactly zero outside the
    /// support when q < 1.
    pub fn density(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "point has wrong dimension");
        let k = self.normalizing_constant();
        if self.q == 1.0 {
            return math::exp(-0.5 * linalg::norm_sq(x)) / k;
        }
        let t = 1.0 - (1.0 - self.q) * linalg::norm_sq(x) / self.scale_factor();
        if t <= 0.0 {
            0.0
        } else {
            math::powf(t, 1.0 / (1.0 - self.q)) / k
        }
    }

    /// Draw one perturbation. Exact (rejection-free) in every regime:
    ///
    /// * q = 1: N independent standard normals, ρ = 1;
    /// * q > 1: η = z √(ν/w) with z standard normal and w ~ χ²_ν,
    ///   ν = s/(q−1), which is the Student-t representation of the heavy
    ///   tail (for N = 1, q = 2 this is exactly the standard Cauchy);
    /// * q < 1: η = R √t · u with u uniform on the unit sphere and
    ///   t ~ Beta(N/2, (2−q)/(1−q)), R the support radius, so that
    ///   ρ = 1 − t lands in (0, 1) and the draw is strictly interior.
    ///
    /// Degenerate intermediate draws (t at an endpoint, w = 0, a zero normal
    /// vector) are resampled; they occur with probability zero and only at
    /// the resolution floor of the generator.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Perturbation {
        let mut eta = vec![0.0; self.dim];
        if self.q == 1.0 {
            for e in &mut eta {
                *e = rng.sample::<f64, _>(StandardNormal);
            }
            return Perturbation { eta, rho: 1.0 };
        }
        if self.q > 1.0 {
            let nu = self.scale_factor() / (self.q - 1.0);
            let chi = ChiSquared::new(nu).expect("nu is positive for admissible q");
            loop {
                let w: f64 = chi.sample(rng);
                if !(w > 0.0 && w.is_finite()) {
                    continue;
                }
                let f = math::sqrt(nu / w);
                for e in &mut eta {
                    let z: f64 = rng.sample(StandardNormal);
                    *e = z * f;
                }
                let rho = self.rho(&eta);
                return Perturbation { eta, rho };
            }
        }
        let shape = (2.0 - self.q) / (1.0 - self.q);
        let radial = Beta::new(0.5 * self.dim as f64, shape).expect("shapes are positive");
        let radius = math::sqrt(self.scale_factor() / (1.0 - self.q));
        loop {
            let t: f64 = radial.sample(rng);
            if !(t > 0.0 && t < 1.0) {
                continue;
            }
            let mut norm_sq = 0.0;
            for e in &mut eta {
                let z: f64 = rng.sample::<f64, _>(StandardNormal);
                *e = z;
                norm_sq += z * z;
            }
            if norm_sq <= 1e-300 {
                continue;
            }
            let f = radius * math::sqrt(t / norm_sq);
            for e in &mut eta {
                *e *= f;
            }
            let rho = self.rho(&eta);
            if rho > 0.0 {
                return Perturbation { eta, rho };
            }
        }
    }

    /// Closed-form targets for the ρ-weighted moments. The ρ² items carry a
    /// 1/q factor, so these are defined only for q > 0 (q = 1 included).
    pub fn moment_identity_targets(&self) -> Result<MomentTargets, SpecError> {
        if self.q <= 0.0 {
            return Err(SpecError::MomentTargetsUndefined { q: self.q });
        }
        let s = self.scale_factor();
        let over_q = s * s / (4.0 * self.q);
        Ok(MomentTargets {
            inv_rho: 0.5 * s,
            coord_sq_over_rho_sq: over_q,
            coord_quartic_over_rho_sq: 3.0 * over_q,
            cross_sq_over_rho_sq: over_q,
        })
    }
}
