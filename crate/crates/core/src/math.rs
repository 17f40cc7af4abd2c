//! Scalar math routed through `libm` unconditionally: identical results with
//! and without `std`, and access to `lgamma`, which `std` does not expose.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Γ(a)/Γ(b) for a, b > 0, evaluated in log space so near-boundary shape
/// parameters (where either Γ value overflows) stay finite.
#[inline]
pub(crate) fn gamma_ratio(a: f64, b: f64) -> f64 {
    exp(libm::lgamma(a) - libm::lgamma(b))
}
