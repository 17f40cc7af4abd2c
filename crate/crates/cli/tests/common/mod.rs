//! Oracle machinery for the release-gate suite: double-exponential
//! quadrature built from first principles, the perturbation density written
//! directly from its defining formula, and a known-spectrum matrix builder.
//! Nothing in this module calls the library code paths it is used to check.

#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

/// Tanh-sinh (double-exponential) quadrature over (a, b). Robust to algebraic
/// endpoint singularities, which Gauss-Legendre handles poorly.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let h = 1.0 / 64.0;
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for side in [-1.0, 1.0] {
        let mut k = if side < 0.0 { 1 } else { 0 };
        loop {
            let t = side * (k as f64) * h;
            let s = 0.5 * PI * t.sinh();
            let x = s.tanh();
            // Past this point nodes round onto the endpoint itself.
            if x.abs() >= 1.0 {
                break;
            }
            let w = 0.5 * PI * t.cosh() / (s.cosh() * s.cosh());
            if w * half < 1e-300 {
                break;
            }
            let y = mid + half * x;
            if y <= a || y >= b {
                break;
            }
            let v = f(y);
            if v != 0.0 {
                sum += w * half * v;
            }
            k += 1;
            if k > 4096 {
                break;
            }
        }
    }
    sum * h
}

/// ∫₀^∞ f(r) dr via r = tan(u) on (0, π/2).
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F) -> f64 {
    integrate(
        |u| {
            let t = u.tan();
            let sec2 = 1.0 + t * t;
            let v = f(t);
            if v == 0.0 {
                0.0
            } else {
                v * sec2
            }
        },
        0.0,
        0.5 * PI,
    )
}

/// Surface area of the unit sphere in ℝⁿ: 2π^{n/2}/Γ(n/2).
pub fn surface_area(n: usize) -> f64 {
    let hn = 0.5 * n as f64;
    2.0 * (hn * PI.ln() - libm::lgamma(hn)).exp()
}

/// For u uniform on the unit sphere in ℝⁿ: E[u₁²] = 1/n.
pub fn sphere_coord_sq(n: usize) -> f64 {
    1.0 / n as f64
}

/// E[u₁⁴] = 3/(n(n+2)).
pub fn sphere_coord_quartic(n: usize) -> f64 {
    3.0 / (n as f64 * (n as f64 + 2.0))
}

/// E[u₁²u₂²] = 1/(n(n+2)), n ≥ 2.
pub fn sphere_cross_sq(n: usize) -> f64 {
    1.0 / (n as f64 * (n as f64 + 2.0))
}

/// The perturbation law written straight from its formula: unnormalized
/// radial profile max(0, 1 − (1−q)r²/(N+2−Nq))^{1/(1−q)}, exp(−r²/2) at q=1.
pub struct RadialLaw {
    pub dim: usize,
    pub q: f64,
}

impl RadialLaw {
    pub fn scale(&self) -> f64 {
        let n = self.dim as f64;
        n + 2.0 - n * self.q
    }

    pub fn rho_at(&self, r_sq: f64) -> f64 {
        1.0 - (1.0 - self.q) * r_sq / self.scale()
    }

    pub fn support_radius(&self) -> Option<f64> {
        if self.q < 1.0 {
            Some((self.scale() / (1.0 - self.q)).sqrt())
        } else {
            None
        }
    }

    fn weight(&self, r: f64, rho: f64) -> f64 {
        if self.q == 1.0 {
            (-0.5 * r * r).exp()
        } else if rho <= 0.0 {
            0.0
        } else {
            rho.powf(1.0 / (1.0 - self.q))
        }
    }

    /// Unnormalized density at radius r (interior evaluations).
    pub fn unnorm(&self, r: f64) -> f64 {
        self.weight(r, self.rho_at(r * r))
    }

    /// ∫_{ℝᴺ} g(r, ρ(r)) dx over the support, as a 1-d radial integral. For
    /// compact support (q < 1) the substitution r = R sin φ gives ρ = cos²φ
    /// without cancellation, so endpoint-singular integrands stay accurate.
    fn radial_integral<F: Fn(f64, f64) -> f64 + Copy>(&self, g: F) -> f64 {
        let nm1 = (self.dim - 1) as i32;
        let one_dim = match self.support_radius() {
            Some(radius) => integrate(
                |phi| {
                    let c = phi.cos();
                    let rho = c * c;
                    let r = radius * phi.sin();
                    let v = g(r, rho);
                    if v == 0.0 {
                        0.0
                    } else {
                        v * r.powi(nm1) * radius * c
                    }
                },
                0.0,
                0.5 * PI,
            ),
            None => integrate_half_line(|r| {
                let v = g(r, self.rho_at(r * r));
                if v == 0.0 {
                    0.0
                } else {
                    v * r.powi(nm1)
                }
            }),
        };
        surface_area(self.dim) * one_dim
    }

    /// ∫_{ℝᴺ} unnorm(‖x‖) dx, the normalizing constant, by quadrature.
    pub fn norm_quadrature(&self) -> f64 {
        self.radial_integral(|r, rho| self.weight(r, rho))
    }

    /// Normalized E[ r^{r_pow} / ρ^{rho_pow} ], by quadrature.
    pub fn radial_moment(&self, r_pow: i32, rho_pow: i32) -> f64 {
        let raw = self.radial_integral(|r, rho| {
            if rho <= 0.0 {
                return 0.0;
            }
            let u = self.weight(r, rho);
            if u == 0.0 {
                return 0.0;
            }
            u * r.powi(r_pow) / rho.powi(rho_pow)
        });
        raw / self.norm_quadrature()
    }

    /// Normalized E[ x_i^{2a} x_j^{2b} / ρ^{rho_pow} ] for i ≠ j, reduced to a
    /// radial integral through the classical sphere moments.
    pub fn coordinate_moment(&self, a: u32, b: u32, rho_pow: i32) -> f64 {
        let sphere_factor = match (a, b) {
            (0, 0) => 1.0,
            (1, 0) | (0, 1) => sphere_coord_sq(self.dim),
            (2, 0) | (0, 2) => sphere_coord_quartic(self.dim),
            (1, 1) => sphere_cross_sq(self.dim),
            _ => panic!("unsupported coordinate powers"),
        };
        sphere_factor * self.radial_moment(2 * (a + b) as i32, rho_pow)
    }
}

/// Symmetric matrix with a prescribed spectrum: diag(eigs) conjugated by a
/// product of random Givens rotations. Returned row-major, exactly symmetric.
pub fn symmetric_with_spectrum<R: rand::Rng>(rng: &mut R, eigs: &[f64]) -> Vec<f64> {
    let n = eigs.len();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = eigs[i];
    }
    for _ in 0..3 * n.max(2) {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n.saturating_sub(1).max(1));
        if n > 1 && j >= i {
            j += 1;
        }
        if i == j {
            continue;
        }
        let angle: f64 = rng.gen_range(0.0..TAU);
        let (c, s) = (angle.cos(), angle.sin());
        for k in 0..n {
            let aki = a[k * n + i];
            let akj = a[k * n + j];
            a[k * n + i] = c * aki - s * akj;
            a[k * n + j] = s * aki + c * akj;
        }
        for k in 0..n {
            let aik = a[i * n + k];
            let ajk = a[j * n + k];
            a[i * n + k] = c * aik - s * ajk;
            a[j * n + k] = s * aik + c * ajk;
        }
    }
    for i in 0..n {
        for j in 0..i {
            let sym = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = sym;
            a[j * n + i] = sym;
        }
    }
    a
}
