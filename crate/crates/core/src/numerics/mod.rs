//! Numerically stable standard-normal special functions, log-space
//! utilities and adaptive quadrature.
//!
//! The free functions here validate their arguments; the raw kernels live in
//! [`normal`] for callers that have already checked their inputs.

pub mod logspace;
pub mod normal;
pub mod quadrature;

pub use logspace::{log_add_exp, log_diff_exp, log_sum_exp, LogValue};
pub use quadrature::{
    adaptive_quadrature, composite_gauss_legendre, gauss_legendre, integrate, integrate_centered,
    QuadratureConfig, QuadratureEstimate,
};

use crate::error::{ensure_positive, Error, Result};

fn ensure_finite_input(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "expected a finite argument, got {x}"
        )))
    }
}

/// `φ(x) = exp(-x²/2) / √(2π)`.
pub fn std_normal_pdf(x: f64) -> Result<f64> {
    ensure_finite_input(x)?;
    Ok(normal::pdf(x))
}

/// `ln φ(x)`, finite even where `φ(x)` underflows.
pub fn log_std_normal_pdf(x: f64) -> Result<f64> {
    ensure_finite_input(x)?;
    Ok(normal::log_pdf(x))
}

pub fn std_normal_cdf(x: f64) -> Result<f64> {
    ensure_finite_input(x)?;
    Ok(normal::cdf(x))
}

pub fn log_std_normal_cdf(x: f64) -> Result<LogValue> {
    ensure_finite_input(x)?;
    Ok(LogValue::from_ln(normal::log_cdf(x)))
}

pub fn inverse_std_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "probability must lie in (0, 1), got {p}"
        )));
    }
    Ok(normal::inverse_cdf(p))
}

/// Inverse of `ln Φ`, for probabilities too small to represent directly.
pub fn inverse_log_std_normal_cdf(log_p: f64) -> Result<f64> {
    if log_p.is_nan() || log_p >= 0.0 || log_p == f64::NEG_INFINITY {
        return Err(Error::Domain(format!(
            "log-probability must lie in (-inf, 0), got {log_p}"
        )));
    }
    Ok(normal::inverse_log_cdf(log_p))
}

/// `Δ(x) = Φ((a - x)/σ) - Φ((-a - x)/σ)`, the Gaussian mass that a
/// location-`x` normal puts on `[-a, a]`.
pub fn delta_mass(x: f64, a: f64, sigma: f64) -> Result<f64> {
    check_delta_args(x, a, sigma)?;
    Ok(normal::interval_mass((-a - x) / sigma, (a - x) / sigma))
}

pub fn log_delta_mass(x: f64, a: f64, sigma: f64) -> Result<LogValue> {
    check_delta_args(x, a, sigma)?;
    Ok(LogValue::from_ln(log_delta_unchecked(x, a, sigma)))
}

#[inline]
pub(crate) fn log_delta_unchecked(x: f64, a: f64, sigma: f64) -> f64 {
    normal::log_interval_mass((-a - x) / sigma, (a - x) / sigma)
}

fn check_delta_args(x: f64, a: f64, sigma: f64) -> Result<()> {
    ensure_finite_input(x)?;
    ensure_positive("half-width a", a)?;
    ensure_positive("sigma", sigma)?;
    Ok(())
}

/// Fixed-order pairwise summation; the result depends only on the order of
/// `values`, never on thread scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
