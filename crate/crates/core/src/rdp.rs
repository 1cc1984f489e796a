//! Closed-form Rényi divergences between shifted mechanism outputs,
//! per-instance RDP with direction maximization, composition and conversion
//! to `(ε, δ)`-DP.
//!
//! All bounded-kind formulas are assembled from `ln Φ` and `ln Δ` values and
//! combined with log-sum-exp, so orders up to 64 and locations far outside
//! the support stay finite.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::mechanisms::{MechanismKind, MechanismSpec, SupportInterval};
use crate::numerics::{log_sum_exp, normal, pairwise_sum};

/// Default Rényi orders.
pub const DEFAULT_ALPHA_GRID: [f64; 10] = [1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 16.0, 32.0, 64.0];

/// Roundoff allowance below zero before a divergence is treated as a bug.
const NEGATIVE_SLACK: f64 = 1e-12;

/// `α c² / (2σ²)`.
pub fn renyi_gaussian(alpha: f64, c: f64, sigma: f64) -> Result<f64> {
    check_order(alpha)?;
    check_shift(c)?;
    ensure_positive("sigma", sigma)?;
    Ok(alpha * c * c / (2.0 * sigma * sigma))
}

/// `D_α(N^R(θ, σ², [-a, a]) ‖ N^R(θ + c, σ², [-a, a]))`.
///
/// Returns `+∞` when an endpoint atom of the second law underflows to zero
/// while the matching atom of the first does not.
pub fn renyi_rectified(alpha: f64, theta: f64, c: f64, sigma: f64, half_width: f64) -> Result<f64> {
    let s = check_bounded_args(alpha, theta, c, sigma, half_width)?;
    finalize(rectified_divergence(alpha, theta, theta + c, sigma, s))
}

/// `D_α(N^T(θ, σ², [-a, a]) ‖ N^T(θ + c, σ², [-a, a]))`, equal to the
/// Gaussian divergence plus
/// `ln Δ(θ+c)/Δ(θ) + (α-1)⁻¹ ln Δ(θ+(1-α)c)/Δ(θ)`.
pub fn renyi_truncated(alpha: f64, theta: f64, c: f64, sigma: f64, half_width: f64) -> Result<f64> {
    let s = check_bounded_args(alpha, theta, c, sigma, half_width)?;
    finalize(truncated_divergence(alpha, theta, theta + c, sigma, s))
}

/// Rényi divergence between the two-point output laws of the stochastic-sign
/// mechanism at `θ` and `θ + c`.
pub fn renyi_sign(alpha: f64, theta: f64, c: f64, sigma: f64) -> Result<f64> {
    check_order(alpha)?;
    ensure_finite("theta", theta)?;
    check_shift(c)?;
    ensure_positive("sigma", sigma)?;
    finalize(sign_divergence(alpha, theta, theta + c, sigma))
}

/// `D_α(M(θ_p) ‖ M(θ_q))` for any mechanism kind. Shifts may have either
/// sign and the support may be any interval.
pub fn divergence(spec: &MechanismSpec, alpha: f64, theta_p: f64, theta_q: f64) -> Result<f64> {
    check_order(alpha)?;
    ensure_finite("theta", theta_p)?;
    ensure_finite("theta'", theta_q)?;
    finalize(divergence_unchecked(spec, alpha, theta_p, theta_q))
}

fn divergence_unchecked(spec: &MechanismSpec, alpha: f64, tp: f64, tq: f64) -> f64 {
    let sigma = spec.sigma();
    if tp == tq {
        return 0.0;
    }
    match spec.kind() {
        MechanismKind::Gaussian => {
            let c = tq - tp;
            alpha * c * c / (2.0 * sigma * sigma)
        }
        MechanismKind::Rectified => {
            rectified_divergence(alpha, tp, tq, sigma, spec.interval().expect("bounded kind"))
        }
        MechanismKind::Truncated => {
            truncated_divergence(alpha, tp, tq, sigma, spec.interval().expect("bounded kind"))
        }
        MechanismKind::Sign => sign_divergence(alpha, tp, tq, sigma),
    }
}

/// `ln Δ(x)`: log of the mass `N(x, σ²)` puts on the support.
#[inline]
fn log_mass(x: f64, sigma: f64, s: SupportInterval) -> f64 {
    normal::log_interval_mass((s.lower() - x) / sigma, (s.upper() - x) / sigma)
}

/// `ln(p^α q^(1-α))` from `ln p`, `ln q`, with `0^α q^(1-α) = 0` and
/// `p^α 0^(1-α) = ∞` for `p > 0`.
#[inline]
fn log_power_pair(alpha: f64, log_p: f64, log_q: f64) -> f64 {
    if log_p == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if log_q == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        alpha * log_p + (1.0 - alpha) * log_q
    }
}

fn rectified_divergence(alpha: f64, tp: f64, tq: f64, sigma: f64, s: SupportInterval) -> f64 {
    if tp == tq {
        return 0.0;
    }
    let c = tq - tp;
    let interior = (alpha * alpha - alpha) * c * c / (2.0 * sigma * sigma)
        + log_mass(tp + (1.0 - alpha) * c, sigma, s);
    let lower = log_power_pair(
        alpha,
        normal::log_cdf((s.lower() - tp) / sigma),
        normal::log_cdf((s.lower() - tq) / sigma),
    );
    let upper = log_power_pair(
        alpha,
        normal::log_cdf((tp - s.upper()) / sigma),
        normal::log_cdf((tq - s.upper()) / sigma),
    );
    log_sum_exp(&[interior, lower, upper]) / (alpha - 1.0)
}

fn truncated_divergence(alpha: f64, tp: f64, tq: f64, sigma: f64, s: SupportInterval) -> f64 {
    if tp == tq {
        return 0.0;
    }
    let c = tq - tp;
    let base = log_mass(tp, sigma, s);
    let gaussian = alpha * c * c / (2.0 * sigma * sigma);
    gaussian
        + (log_mass(tq, sigma, s) - base)
        + (log_mass(tp + (1.0 - alpha) * c, sigma, s) - base) / (alpha - 1.0)
}

fn sign_divergence(alpha: f64, tp: f64, tq: f64, sigma: f64) -> f64 {
    if tp == tq {
        return 0.0;
    }
    let (p, q) = (tp / sigma, tq / sigma);
    let plus = log_power_pair(alpha, normal::log_cdf(p), normal::log_cdf(q));
    let minus = log_power_pair(alpha, normal::log_cdf(-p), normal::log_cdf(-q));
    log_sum_exp(&[plus, minus]) / (alpha - 1.0)
}

/// Applies the floor: roundoff negatives become 0, real negatives and NaN
/// are internal errors, `+∞` passes through.
fn finalize(eps: f64) -> Result<f64> {
    if eps.is_nan() {
        return Err(Error::Consistency("divergence evaluated to NaN".into()));
    }
    if eps < -NEGATIVE_SLACK {
        return Err(Error::Consistency(format!(
            "divergence evaluated to {eps:e} < 0"
        )));
    }
    Ok(eps.max(0.0))
}

/// Per-coordinate worst-case shift, the L∞ clip bound of the accountant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity(f64);

impl Sensitivity {
    pub fn new(c: f64) -> Result<Self> {
        check_shift(c)?;
        Ok(Sensitivity(c))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Per-instance RDP at `theta`: the largest of `D(θ ‖ θ+s)` and `D(θ+s ‖ θ)`
/// over `s = ±c`.
///
/// For the truncated kind the divergence grows with the shift magnitude, so
/// `|s| = c` is the worst case. For the rectified kind that is assumed; see
/// [`per_instance_rdp_scalar_scan`] to also try interior magnitudes.
pub fn per_instance_rdp_scalar(
    spec: &MechanismSpec,
    alpha: f64,
    theta: f64,
    sens: Sensitivity,
) -> Result<f64> {
    per_instance_rdp_scalar_scan(spec, alpha, theta, sens, 1)
}

/// As [`per_instance_rdp_scalar`], additionally maximizing over the shift
/// magnitudes `c k / m` for `k = 1..=m` when the kind is rectified.
pub fn per_instance_rdp_scalar_scan(
    spec: &MechanismSpec,
    alpha: f64,
    theta: f64,
    sens: Sensitivity,
    m: usize,
) -> Result<f64> {
    check_order(alpha)?;
    ensure_finite("theta", theta)?;
    if m == 0 {
        return Err(Error::Parameter(
            "scan needs at least one shift magnitude".into(),
        ));
    }
    let c = sens.value();
    if spec.kind() == MechanismKind::Gaussian {
        return renyi_gaussian(alpha, c, spec.sigma());
    }
    let magnitudes = if spec.kind() == MechanismKind::Rectified {
        m
    } else {
        1
    };
    let mut worst = 0.0f64;
    for k in 1..=magnitudes {
        let shift = c * k as f64 / magnitudes as f64;
        for s in [shift, -shift] {
            let forward = finalize(divergence_unchecked(spec, alpha, theta, theta + s))?;
            let backward = finalize(divergence_unchecked(spec, alpha, theta + s, theta))?;
            worst = worst.max(forward).max(backward);
        }
    }
    Ok(worst)
}

/// Sum of the per-coordinate worst cases for a tensor release with
/// independent coordinates. Coordinates are evaluated in parallel and summed
/// in a fixed pairwise order.
pub fn per_instance_rdp_vector(
    spec: &MechanismSpec,
    alpha: f64,
    theta: &[f64],
    sens: Sensitivity,
) -> Result<f64> {
    let per: Vec<f64> = per_coordinate_rdp(spec, alpha, theta, sens)?;
    Ok(pairwise_sum(&per))
}

pub(crate) fn per_coordinate_rdp(
    spec: &MechanismSpec,
    alpha: f64,
    theta: &[f64],
    sens: Sensitivity,
) -> Result<Vec<f64>> {
    theta
        .par_iter()
        .map(|&t| per_instance_rdp_scalar(spec, alpha, t, sens))
        .collect()
}

/// One `(α, ε)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdpPoint {
    pub alpha: f64,
    pub epsilon: f64,
}

/// `ε` over a strictly increasing grid of orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdpCurve {
    points: Vec<RdpPoint>,
}

impl RdpCurve {
    pub fn new(points: Vec<RdpPoint>) -> Result<Self> {
        for p in &points {
            check_order(p.alpha)?;
            if p.epsilon.is_nan() || p.epsilon < 0.0 {
                return Err(Error::Parameter(format!(
                    "epsilon must be >= 0, got {} at alpha {}",
                    p.epsilon, p.alpha
                )));
            }
        }
        if points.windows(2).any(|w| w[0].alpha >= w[1].alpha) {
            return Err(Error::Parameter(
                "alpha grid must be strictly increasing".into(),
            ));
        }
        Ok(RdpCurve { points })
    }

    /// Evaluates `f` at every order in `alphas`.
    pub fn from_fn<F: FnMut(f64) -> Result<f64>>(alphas: &[f64], mut f: F) -> Result<Self> {
        let points = alphas
            .iter()
            .map(|&alpha| {
                Ok(RdpPoint {
                    alpha,
                    epsilon: f(alpha)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn points(&self) -> &[RdpPoint] {
        &self.points
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.alpha).collect()
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.epsilon).collect()
    }

    pub fn epsilon_at(&self, alpha: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.alpha == alpha)
            .map(|p| p.epsilon)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// `ε` multiplied by `k`, as for `k` identical compositions.
    pub fn scaled(&self, k: f64) -> RdpCurve {
        RdpCurve {
            points: self
                .points
                .iter()
                .map(|p| RdpPoint {
                    alpha: p.alpha,
                    epsilon: p.epsilon * k,
                })
                .collect(),
        }
    }
}

/// Pointwise sum over curves on the same grid.
pub fn compose_rdp(curves: &[RdpCurve]) -> Result<RdpCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::Parameter("nothing to compose".into()))?;
    let grid = first.alphas();
    for c in &curves[1..] {
        if c.alphas() != grid {
            return Err(Error::Shape("RDP curves use different alpha grids".into()));
        }
    }
    let points = grid
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let terms: Vec<f64> = curves.iter().map(|c| c.points[i].epsilon).collect();
            RdpPoint {
                alpha,
                epsilon: pairwise_sum(&terms),
            }
        })
        .collect();
    Ok(RdpCurve { points })
}

/// Result of converting an RDP curve to `(ε, δ)`-DP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpConversion {
    pub epsilon: f64,
    pub best_alpha: f64,
}

/// `min_α ε_α + ln(1/δ)/(α-1)` over the curve; ties go to the smaller order.
pub fn rdp_to_dp(curve: &RdpCurve, delta: f64) -> Result<DpConversion> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let first = curve
        .points
        .first()
        .ok_or_else(|| Error::Parameter("cannot convert an empty RDP curve".into()))?;
    let log_inv_delta = -delta.ln();
    let mut best = DpConversion {
        epsilon: f64::INFINITY,
        best_alpha: first.alpha,
    };
    for p in &curve.points {
        let eps = p.epsilon + log_inv_delta / (p.alpha - 1.0);
        if eps < best.epsilon {
            best = DpConversion {
                epsilon: eps,
                best_alpha: p.alpha,
            };
        }
    }
    Ok(best)
}

fn check_order(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "Renyi order must be finite and > 1, got {alpha}"
        )))
    }
}

fn check_shift(c: f64) -> Result<()> {
    if c.is_finite() && c >= 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "sensitivity must be finite and >= 0, got {c}"
        )))
    }
}

fn check_bounded_args(
    alpha: f64,
    theta: f64,
    c: f64,
    sigma: f64,
    half_width: f64,
) -> Result<SupportInterval> {
    check_order(alpha)?;
    ensure_finite("theta", theta)?;
    check_shift(c)?;
    ensure_positive("sigma", sigma)?;
    SupportInterval::symmetric(half_width)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_values() {
        assert_eq!(renyi_gaussian(2.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(renyi_gaussian(2.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(renyi_gaussian(2.0, 1.0, 2.0).unwrap(), 0.25);
        assert!(renyi_gaussian(1.0, 1.0, 1.0).is_err());
        assert!(renyi_gaussian(2.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn zero_shift_is_zero() {
        for theta in [-2.0, 0.0, 0.7] {
            assert_eq!(renyi_rectified(3.0, theta, 0.0, 1.0, 1.0).unwrap(), 0.0);
            assert_eq!(renyi_truncated(3.0, theta, 0.0, 1.0, 1.0).unwrap(), 0.0);
            assert_eq!(renyi_sign(3.0, theta, 0.0, 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn wide_support_recovers_gaussian() {
        for (alpha, theta, c, sigma) in [
            (2.0f64, 0.0f64, 1.0f64, 1.0f64),
            (8.0, -1.5, 0.5, 0.5),
            (32.0, 2.0, 0.1, 2.0),
        ] {
            let a = theta.abs() + alpha * c + 40.0 * sigma;
            let g = renyi_gaussian(alpha, c, sigma).unwrap();
            assert!((renyi_rectified(alpha, theta, c, sigma, a).unwrap() - g).abs() < 1e-9);
            assert!((renyi_truncated(alpha, theta, c, sigma, a).unwrap() - g).abs() < 1e-9);
        }
    }

    #[test]
    fn high_order_deep_tail_is_finite() {
        let e = renyi_rectified(64.0, 3.0, 1.0, 0.5, 0.5).unwrap();
        assert!(e.is_finite());
        assert!(e <= renyi_gaussian(64.0, 1.0, 0.5).unwrap());
        let e = renyi_truncated(64.0, -3.0, 1.0, 0.5, 0.5).unwrap();
        assert!(e.is_finite());
    }

    #[test]
    fn underflowed_atom_gives_infinity() {
        // The lower atom of the second law is below every double, the first is not.
        let e = renyi_rectified(2.0, 0.0, 1e155, 1.0, 1.0).unwrap();
        assert_eq!(e, f64::INFINITY);
    }

    #[test]
    fn gaussian_kind_ignores_location() {
        let spec = MechanismSpec::gaussian(0.8).unwrap();
        let sens = Sensitivity::new(0.5).unwrap();
        let expected = renyi_gaussian(4.0, 0.5, 0.8).unwrap();
        for theta in [-5.0, 0.0, 3.3] {
            assert_eq!(
                per_instance_rdp_scalar(&spec, 4.0, theta, sens).unwrap(),
                expected
            );
        }
    }

    #[test]
    fn centered_branches_coincide() {
        let spec = MechanismSpec::symmetric(MechanismKind::Truncated, 1.0, 1.0).unwrap();
        let plus = divergence(&spec, 2.0, 0.0, 0.5).unwrap();
        let minus = divergence(&spec, 2.0, 0.0, -0.5).unwrap();
        assert!((plus - minus).abs() < 1e-15);
    }

    #[test]
    fn scalar_is_max_of_four() {
        let spec = MechanismSpec::symmetric(MechanismKind::Truncated, 1.0, 1.0).unwrap();
        let sens = Sensitivity::new(1.0).unwrap();
        let four = [
            divergence(&spec, 2.0, 1.5, 2.5).unwrap(),
            divergence(&spec, 2.0, 2.5, 1.5).unwrap(),
            divergence(&spec, 2.0, 1.5, 0.5).unwrap(),
            divergence(&spec, 2.0, 0.5, 1.5).unwrap(),
        ];
        let max = four.iter().copied().fold(0.0, f64::max);
        assert_eq!(per_instance_rdp_scalar(&spec, 2.0, 1.5, sens).unwrap(), max);
    }

    #[test]
    fn rectified_scan_never_lowers_the_bound() {
        let spec = MechanismSpec::symmetric(MechanismKind::Rectified, 1.0, 1.0).unwrap();
        let sens = Sensitivity::new(1.0).unwrap();
        for theta in [-2.0, -0.5, 0.0, 1.2] {
            let ends = per_instance_rdp_scalar(&spec, 4.0, theta, sens).unwrap();
            let scan = per_instance_rdp_scalar_scan(&spec, 4.0, theta, sens, 16).unwrap();
            assert!(scan >= ends);
        }
    }

    #[test]
    fn vector_sums_coordinates() {
        let spec = MechanismSpec::boxed(MechanismKind::Rectified, 1.0, 1.0).unwrap();
        let sens = Sensitivity::new(0.5).unwrap();
        let one = per_instance_rdp_scalar(&spec, 2.0, 0.0, sens).unwrap();
        assert_eq!(
            per_instance_rdp_vector(&spec, 2.0, &[0.0], sens).unwrap(),
            one
        );
        let three = per_instance_rdp_vector(&spec, 2.0, &[0.0; 3], sens).unwrap();
        assert!((three - 3.0 * one).abs() < 1e-15);
    }

    #[test]
    fn curve_validation() {
        let p = |alpha, epsilon| RdpPoint { alpha, epsilon };
        assert!(RdpCurve::new(vec![p(2.0, 1.0), p(2.0, 1.0)]).is_err());
        assert!(RdpCurve::new(vec![p(1.0, 1.0)]).is_err());
        assert!(RdpCurve::new(vec![p(2.0, -1.0)]).is_err());
        assert!(RdpCurve::new(vec![p(2.0, f64::INFINITY)]).is_ok());
    }

    #[test]
    fn composition_adds_pointwise() {
        let a = RdpCurve::from_fn(&[2.0, 4.0], Ok).unwrap();
        let b = RdpCurve::from_fn(&[2.0, 4.0], |al| Ok(0.5 * al)).unwrap();
        let c = compose_rdp(&[a.clone(), b]).unwrap();
        assert_eq!(c.epsilons(), vec![3.0, 6.0]);
        assert_eq!(compose_rdp(std::slice::from_ref(&a)).unwrap(), a);
        let t = compose_rdp(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert_eq!(t, a.scaled(3.0));
        let other = RdpCurve::from_fn(&[2.0, 8.0], Ok).unwrap();
        assert!(compose_rdp(&[a, other]).is_err());
    }

    #[test]
    fn infinity_propagates() {
        let a = RdpCurve::from_fn(&[2.0], |_| Ok(f64::INFINITY)).unwrap();
        let b = RdpCurve::from_fn(&[2.0], |_| Ok(1.0)).unwrap();
        assert_eq!(
            compose_rdp(&[a, b]).unwrap().epsilons(),
            vec![f64::INFINITY]
        );
    }

    #[test]
    fn conversion_examples() {
        let single = RdpCurve::from_fn(&[2.0], |_| Ok(1.0)).unwrap();
        let out = rdp_to_dp(&single, 1e-5).unwrap();
        assert!((out.epsilon - (1.0 + 1e5f64.ln())).abs() < 1e-12);
        assert_eq!(out.best_alpha, 2.0);

        let grid = RdpCurve::from_fn(&[2.0, 4.0, 8.0], |al| Ok(al / 2.0)).unwrap();
        let out = rdp_to_dp(&grid, 1e-6).unwrap();
        assert_eq!(out.best_alpha, 8.0);
        assert!((out.epsilon - (4.0 + 1e6f64.ln() / 7.0)).abs() < 1e-12);

        assert!(rdp_to_dp(&single, 0.0).is_err());
        assert!(rdp_to_dp(&RdpCurve::new(vec![]).unwrap(), 1e-5).is_err());
    }

    #[test]
    fn conversion_ties_go_to_smaller_order() {
        // ε_2 + L = ε_3 + L/2 with L = ln(1/δ).
        let l = 1e-4f64.recip().ln();
        let curve = RdpCurve::new(vec![
            RdpPoint {
                alpha: 2.0,
                epsilon: 0.0,
            },
            RdpPoint {
                alpha: 3.0,
                epsilon: l / 2.0,
            },
        ])
        .unwrap();
        assert_eq!(rdp_to_dp(&curve, 1e-4).unwrap().best_alpha, 2.0);
    }
}
