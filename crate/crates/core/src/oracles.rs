//! Brute-force reference computations for the closed forms in [`crate::rdp`]
//! and [`crate::fil`].
//!
//! Nothing here calls the closed forms. Divergences integrate `p^α q^(1-α)`
//! directly (with normalizers found by quadrature), Fisher information is the
//! variance of the score, and matrices come from finite differences of the
//! expected log-likelihood.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::mechanisms::{stream_rng, MechanismKind, MechanismSpec, SupportInterval};
use crate::numerics::{
    composite_gauss_legendre, integrate, integrate_centered, log_sum_exp, normal, QuadratureConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    Quadrature,
    QuadraturePlusAtoms,
    FiniteDifference,
    DiscretePmf,
    TensorProduct,
    MonteCarlo,
}

impl OracleMethod {
    pub fn name(self) -> &'static str {
        match self {
            OracleMethod::Quadrature => "quadrature",
            OracleMethod::QuadraturePlusAtoms => "quadrature_plus_atoms",
            OracleMethod::FiniteDifference => "finite_difference",
            OracleMethod::DiscretePmf => "discrete_pmf",
            OracleMethod::TensorProduct => "tensor_product",
            OracleMethod::MonteCarlo => "monte_carlo",
        }
    }
}

impl fmt::Display for OracleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OracleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            OracleMethod::Quadrature,
            OracleMethod::QuadraturePlusAtoms,
            OracleMethod::FiniteDifference,
            OracleMethod::DiscretePmf,
            OracleMethod::TensorProduct,
            OracleMethod::MonteCarlo,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::Parameter(format!("unknown oracle method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub error_bound: f64,
    pub method: OracleMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOracleResult {
    pub matrix: DMatrix<f64>,
    pub error_bound: f64,
    pub method: OracleMethod,
}

/// Interior density of a one-dimensional mechanism, kept as
/// `ln p(x) = -(x-θ)²/(2σ²) - ln_norm` so products of powers stay in log space.
#[derive(Debug, Clone, Copy)]
struct LogKernel {
    theta: f64,
    sigma: f64,
    ln_norm: f64,
    ln_norm_err: f64,
}

impl LogKernel {
    #[inline]
    fn ln_density(&self, x: f64) -> f64 {
        let z = (x - self.theta) / self.sigma;
        -0.5 * z * z - self.ln_norm
    }
}

/// Normalizer of the interior density. For the truncated kind this is
/// `ln(σ √(2π) Z)` with the mass `Z` found by quadrature.
fn kernel(spec: &MechanismSpec, theta: f64, cfg: &QuadratureConfig) -> Result<LogKernel> {
    let sigma = spec.sigma();
    let gaussian_norm = sigma.ln() + normal::LN_SQRT_2PI;
    let (ln_norm, ln_norm_err) = match spec.kind() {
        MechanismKind::Truncated => {
            let s = spec.interval().expect("bounded kind");
            let (ln_mass, err) = ln_gaussian_mass(theta, sigma, s, cfg)?;
            (gaussian_norm + ln_mass, err)
        }
        _ => (gaussian_norm, 0.0),
    };
    Ok(LogKernel {
        theta,
        sigma,
        ln_norm,
        ln_norm_err,
    })
}

/// `ln ∫_s φ((x-θ)/σ)/σ dx` by quadrature, shifted so the integrand peaks at 1.
fn ln_gaussian_mass(
    theta: f64,
    sigma: f64,
    s: SupportInterval,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    let peak = theta.clamp(s.lower(), s.upper());
    let zp = (peak - theta) / sigma;
    let est = integrate_split(
        |x| {
            let z = (x - theta) / sigma;
            (-0.5 * (z * z - zp * zp)).exp()
        },
        s.lower(),
        s.upper(),
        peak,
        cfg,
    )?;
    let ln_mass = est.0.ln() - 0.5 * zp * zp - sigma.ln() - normal::LN_SQRT_2PI;
    Ok((ln_mass, est.1 / est.0))
}

/// Adaptive quadrature on `[lo, hi]` split at `at` when it is interior.
fn integrate_split<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    at: f64,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    if at > lo && at < hi {
        let a = integrate(&mut f, lo, at, cfg)?;
        let b = integrate(&mut f, at, hi, cfg)?;
        Ok((a.value + b.value, a.error_bound + b.error_bound))
    } else {
        let a = integrate(&mut f, lo, hi, cfg)?;
        Ok((a.value, a.error_bound))
    }
}

fn check_pair(alpha: f64, tp: f64, tq: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::Parameter(format!(
            "Renyi order must be finite and > 1, got {alpha}"
        )));
    }
    ensure_finite("theta", tp)?;
    ensure_finite("theta'", tq)?;
    Ok(())
}

/// `D_α(M(θ_p) ‖ M(θ_q))` by direct integration of `p^α q^(1-α)`.
///
/// Rectified atoms enter as exact mass products; the sign kind is a two-point
/// sum.
pub fn oracle_renyi(
    spec: &MechanismSpec,
    theta_p: f64,
    theta_q: f64,
    alpha: f64,
    cfg: &QuadratureConfig,
) -> Result<OracleResult> {
    check_pair(alpha, theta_p, theta_q)?;
    cfg.validate()?;
    let sigma = spec.sigma();
    if spec.kind() == MechanismKind::Sign {
        let (tp, tq) = (theta_p / sigma, theta_q / sigma);
        let p = [normal::cdf(-tp), normal::cdf(tp)];
        let q = [normal::cdf(-tq), normal::cdf(tq)];
        let ln_terms: Vec<f64> = p
            .iter()
            .zip(q)
            .map(|(p, q)| alpha * p.ln() + (1.0 - alpha) * q.ln())
            .collect();
        return Ok(OracleResult {
            value: log_sum_exp(&ln_terms) / (alpha - 1.0),
            error_bound: 1e-14 * (1.0 + ln_terms.iter().map(|t| t.abs()).fold(0.0, f64::max)),
            method: OracleMethod::DiscretePmf,
        });
    }

    let kp = kernel(spec, theta_p, cfg)?;
    let kq = kernel(spec, theta_q, cfg)?;
    let ln_integrand = |x: f64| alpha * kp.ln_density(x) + (1.0 - alpha) * kq.ln_density(x);
    // ln_integrand is a concave quadratic with unit curvature in x/σ.
    let vertex = alpha * theta_p + (1.0 - alpha) * theta_q;

    let (lo, hi) = match spec.interval() {
        Some(s) => (s.lower(), s.upper()),
        None => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let peak = vertex.clamp(lo, hi);
    let shift = ln_integrand(peak);
    let (integral, err) = if spec.interval().is_some() {
        integrate_split(|x| (ln_integrand(x) - shift).exp(), lo, hi, peak, cfg)?
    } else {
        let e = integrate_centered(
            |x| (ln_integrand(x) - shift).exp(),
            lo,
            hi,
            peak,
            sigma,
            cfg,
        )?;
        (e.value, e.error_bound)
    };
    let mut terms = vec![shift + integral.ln()];
    let mut method = OracleMethod::Quadrature;
    if spec.kind() == MechanismKind::Rectified {
        method = OracleMethod::QuadraturePlusAtoms;
        let s = spec.interval().expect("bounded kind");
        let atom = |lp: f64, lq: f64| {
            if lp == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else if lq == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                alpha * lp + (1.0 - alpha) * lq
            }
        };
        terms.push(atom(
            normal::log_cdf((s.lower() - theta_p) / sigma),
            normal::log_cdf((s.lower() - theta_q) / sigma),
        ));
        terms.push(atom(
            normal::log_cdf((theta_p - s.upper()) / sigma),
            normal::log_cdf((theta_q - s.upper()) / sigma),
        ));
    }
    let total = log_sum_exp(&terms);
    // The quadrature term's share of the total scales its relative error.
    let share = (terms[0] - total).exp().min(1.0);
    let rel = err / integral + alpha * kp.ln_norm_err + (alpha - 1.0) * kq.ln_norm_err;
    Ok(OracleResult {
        value: total / (alpha - 1.0),
        error_bound: share * rel / (alpha - 1.0)
            + 4.0 * f64::EPSILON * (total.abs() + 1.0) / (alpha - 1.0),
        method,
    })
}

/// Fisher information `E[(∂θ ln p)²]` of the location parameter (the square
/// of the FIL factor).
///
/// Gaussian and truncated kinds integrate the score variance; the rectified
/// kind adds the endpoint atoms to the interior integral; the sign kind sums
/// over its two outcomes.
pub fn oracle_fisher(
    spec: &MechanismSpec,
    theta: f64,
    cfg: &QuadratureConfig,
) -> Result<OracleResult> {
    ensure_finite("theta", theta)?;
    cfg.validate()?;
    let sigma = spec.sigma();
    match spec.kind() {
        MechanismKind::Gaussian => {
            let e = integrate_centered(
                |x| {
                    let z = (x - theta) / sigma;
                    z * z * normal::pdf(z) / sigma
                },
                f64::NEG_INFINITY,
                f64::INFINITY,
                theta,
                sigma,
                cfg,
            )?;
            Ok(OracleResult {
                value: e.value / (sigma * sigma),
                error_bound: e.error_bound / (sigma * sigma),
                method: OracleMethod::Quadrature,
            })
        }
        MechanismKind::Sign => {
            let t = theta / sigma;
            let d = normal::pdf(t) / sigma;
            let (p, q) = (normal::cdf(t), normal::cdf(-t));
            let value = d * d / p + d * d / q;
            Ok(OracleResult {
                value,
                error_bound: 1e-14 * value,
                method: OracleMethod::DiscretePmf,
            })
        }
        MechanismKind::Truncated => {
            let s = spec.interval().expect("bounded kind");
            let (lo, hi) = (s.lower(), s.upper());
            let peak = theta.clamp(lo, hi);
            let zp = (peak - theta) / sigma;
            // Unnormalized weight, 1 at the peak.
            let w = |x: f64| {
                let z = (x - theta) / sigma;
                (-0.5 * (z * z - zp * zp)).exp()
            };
            let (mass, e0) = integrate_split(w, lo, hi, peak, cfg)?;
            let (m1, e1) = integrate_split(|x| (x - peak) * w(x), lo, hi, peak, cfg)?;
            let mean = m1 / mass;
            let (m2, e2) =
                integrate_split(|x| (x - peak - mean).powi(2) * w(x), lo, hi, peak, cfg)?;
            let var = m2 / mass;
            let s4 = sigma.powi(4);
            let rel = e0 / mass
                + e2 / m2.max(f64::MIN_POSITIVE)
                + 2.0 * (e1 / mass).abs() * mean.abs() / var.max(f64::MIN_POSITIVE);
            Ok(OracleResult {
                value: var / s4,
                error_bound: rel * var / s4,
                method: OracleMethod::Quadrature,
            })
        }
        MechanismKind::Rectified => {
            let s = spec.interval().expect("bounded kind");
            let (lo, hi) = (s.lower(), s.upper());
            let peak = theta.clamp(lo, hi);
            let zp = (peak - theta) / sigma;
            let ln_scale = normal::log_pdf(zp) - sigma.ln();
            // Interior: E[((x-θ)/σ²)²] over (lo, hi), scaled by the density at the peak.
            let (interior, err) = integrate_split(
                |x| {
                    let z = (x - theta) / sigma;
                    z * z * (-0.5 * (z * z - zp * zp)).exp()
                },
                lo,
                hi,
                peak,
                cfg,
            )?;
            let interior_ln = if interior > 0.0 {
                interior.ln() + ln_scale - 2.0 * sigma.ln()
            } else {
                f64::NEG_INFINITY
            };
            // Atoms: mass Φ(z) with score ∓φ(z)/(σΦ(z)).
            let za = (lo - theta) / sigma;
            let zb = (theta - hi) / sigma;
            let atom_a = 2.0 * normal::log_pdf(za) - normal::log_cdf(za) - 2.0 * sigma.ln();
            let atom_b = 2.0 * normal::log_pdf(zb) - normal::log_cdf(zb) - 2.0 * sigma.ln();
            let total_ln = log_sum_exp(&[interior_ln, atom_a, atom_b]);
            let value = total_ln.exp();
            let share = (interior_ln - total_ln).exp();
            let rel = if interior > 0.0 { err / interior } else { 0.0 };
            Ok(OracleResult {
                value,
                error_bound: (share * rel + 1e-14) * value,
                method: OracleMethod::QuadraturePlusAtoms,
            })
        }
    }
}

/// Fisher information of the nearest-level quantizer on the alphabet
/// `{a, a + Δ, ..., b}`, `Δ = (b-a)/k`, by direct differentiation of its pmf.
pub fn oracle_quantized_fisher(
    theta: f64,
    sigma: f64,
    support: SupportInterval,
    k_levels: usize,
) -> Result<OracleResult> {
    ensure_finite("theta", theta)?;
    if k_levels < 2 {
        return Err(Error::Parameter(format!(
            "k_levels must be at least 2, got {k_levels}"
        )));
    }
    let (a, b) = (support.lower(), support.upper());
    let step = (b - a) / k_levels as f64;
    let cut = |i: usize| (a + (i as f64 - 0.5) * step - theta) / sigma;
    let mut probs = Vec::with_capacity(k_levels + 1);
    let mut derivs = Vec::with_capacity(k_levels + 1);
    for i in 0..=k_levels {
        let (cdf_lo, pdf_lo) = if i == 0 {
            (0.0, 0.0)
        } else {
            (normal::cdf(cut(i)), normal::pdf(cut(i)))
        };
        let (cdf_hi, pdf_hi) = if i == k_levels {
            (1.0, 0.0)
        } else {
            (normal::cdf(cut(i + 1)), normal::pdf(cut(i + 1)))
        };
        // The last cell is written as an upper tail to keep its mass exact.
        let p = if i == k_levels {
            normal::cdf(-cut(i))
        } else {
            cdf_hi - cdf_lo
        };
        probs.push(p);
        derivs.push((pdf_lo - pdf_hi) / sigma);
    }
    let value = discrete_fisher(&probs, &derivs);
    Ok(OracleResult {
        value,
        error_bound: 1e-13 * value,
        method: OracleMethod::DiscretePmf,
    })
}

/// `Σ (∂p_i)² / p_i`, skipping zero-probability outcomes.
pub fn discrete_fisher(probs: &[f64], derivs: &[f64]) -> f64 {
    probs
        .iter()
        .zip(derivs)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, d)| d * d / p)
        .sum()
}

/// Fisher information matrix of a dataset released through `query` and the
/// coordinatewise mechanism `spec`, as minus the finite-difference Hessian of
/// the expected log-likelihood.
///
/// `query` maps the `n × k` dataset to the `d` released locations (`d ≤ 3`).
/// The expectation over outputs uses fixed quadrature nodes drawn from the
/// output law at `dataset`; the Hessian is taken over the flattened dataset
/// (row-major) with steps `h = max(1e-3, 1e-3 |x|)` and `h/2`, combined by
/// Richardson extrapolation.
pub fn oracle_fim_finite_difference<Q>(
    spec: &MechanismSpec,
    query: Q,
    dataset: &DMatrix<f64>,
    cfg: &QuadratureConfig,
) -> Result<MatrixOracleResult>
where
    Q: Fn(&DMatrix<f64>) -> Vec<f64> + Sync,
{
    cfg.validate()?;
    let base = query(dataset);
    if base.is_empty() || base.len() > 3 {
        return Err(Error::Parameter(format!(
            "finite-difference oracle supports 1 to 3 outputs, got {}",
            base.len()
        )));
    }
    if dataset.len() > 16 {
        return Err(Error::Parameter(
            "finite-difference oracle supports at most 16 dataset entries".into(),
        ));
    }
    let outcome_nodes: Vec<Vec<(f64, f64)>> = base
        .iter()
        .map(|&t| output_nodes(spec, t, cfg))
        .collect::<Result<_>>()?;

    let expected_ll = |d: &DMatrix<f64>| -> Result<f64> {
        let locs = query(d);
        if locs.len() != base.len() {
            return Err(Error::Shape(
                "query output length changed under perturbation".into(),
            ));
        }
        let mut total = 0.0;
        for (nodes, &loc) in outcome_nodes.iter().zip(&locs) {
            for &(x, w) in nodes {
                if w > 0.0 {
                    total += w * spec.log_likelihood(loc, x)?;
                }
            }
        }
        Ok(total)
    };

    // Row-major flattening of the dataset.
    let (rows, cols) = dataset.shape();
    let m = rows * cols;
    let flat_index = |u: usize| (u / cols, u % cols);
    let steps: Vec<f64> = (0..m)
        .map(|u| {
            let (i, j) = flat_index(u);
            1e-3f64.max(1e-3 * dataset[(i, j)].abs())
        })
        .collect();

    let hessian_at = |scale: f64| -> Result<DMatrix<f64>> {
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|u| (u..m).map(move |v| (u, v))).collect();
        let values: Vec<f64> = pairs
            .par_iter()
            .map(|&(u, v)| {
                let hu = steps[u] * scale;
                let hv = steps[v] * scale;
                let eval = |su: f64, sv: f64| {
                    let mut d = dataset.clone();
                    let (ui, uj) = flat_index(u);
                    let (vi, vj) = flat_index(v);
                    d[(ui, uj)] += su * hu;
                    d[(vi, vj)] += sv * hv;
                    expected_ll(&d)
                };
                let val = (eval(1.0, 1.0)? - eval(1.0, -1.0)? - eval(-1.0, 1.0)?
                    + eval(-1.0, -1.0)?)
                    / (4.0 * hu * hv);
                Ok(val)
            })
            .collect::<Result<_>>()?;
        let mut h = DMatrix::zeros(m, m);
        for (&(u, v), val) in pairs.iter().zip(values) {
            h[(u, v)] = val;
            h[(v, u)] = val;
        }
        Ok(h)
    };
    let coarse = hessian_at(1.0)?;
    let fine = hessian_at(0.5)?;
    let extrapolated = (&fine * 4.0 - &coarse) / 3.0;
    let error_bound = (&extrapolated - &fine).amax();
    Ok(MatrixOracleResult {
        matrix: -extrapolated,
        error_bound,
        method: OracleMethod::FiniteDifference,
    })
}

/// Quadrature nodes `(x, weight)` for expectations under the output law at
/// `theta`; weights include the density, atoms appear as single nodes.
fn output_nodes(
    spec: &MechanismSpec,
    theta: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<(f64, f64)>> {
    let sigma = spec.sigma();
    let mut nodes = Vec::new();
    match spec.kind() {
        MechanismKind::Sign => {
            let (m, p) = crate::mechanisms::sign_pmf(theta, sigma)?;
            nodes.push((-1.0, m));
            nodes.push((1.0, p));
        }
        MechanismKind::Gaussian => {
            let reach = cfg.infinite_domain_cutoff_sigmas * sigma;
            for (x, w) in composite_gauss_legendre(theta - reach, theta + reach, 96, 20) {
                nodes.push((x, w * normal::pdf((x - theta) / sigma) / sigma));
            }
        }
        MechanismKind::Truncated | MechanismKind::Rectified => {
            let s = spec.interval().expect("bounded kind");
            let panels = panel_count(s.upper() - s.lower(), sigma);
            let k = kernel(spec, theta, cfg)?;
            for (x, w) in composite_gauss_legendre(s.lower(), s.upper(), panels, 20) {
                nodes.push((x, w * k.ln_density(x).exp()));
            }
            if spec.kind() == MechanismKind::Rectified {
                nodes.push((s.lower(), normal::cdf((s.lower() - theta) / sigma)));
                nodes.push((s.upper(), normal::cdf((theta - s.upper()) / sigma)));
            }
        }
    }
    Ok(nodes)
}

fn panel_count(width: f64, length_scale: f64) -> usize {
    ((4.0 * width / length_scale).ceil() as usize).clamp(8, 400)
}

/// `D_α` between two product laws over the box, summed over the full tensor
/// grid of per-coordinate nodes (rectified atoms included as nodes on faces,
/// edges and corners). Supports up to three coordinates.
pub fn oracle_renyi_multidim(
    spec: &MechanismSpec,
    theta: &[f64],
    theta_prime: &[f64],
    alpha: f64,
    cfg: &QuadratureConfig,
) -> Result<OracleResult> {
    if theta.len() != theta_prime.len() {
        return Err(Error::Shape(format!(
            "locations of length {} and {}",
            theta.len(),
            theta_prime.len()
        )));
    }
    if theta.is_empty() || theta.len() > 3 {
        return Err(Error::Parameter(format!(
            "tensor oracle supports 1 to 3 coordinates, got {}",
            theta.len()
        )));
    }
    if !spec.kind().is_bounded() {
        return Err(Error::Unsupported(
            "tensor oracle integrates over a bounded box".into(),
        ));
    }
    for (&t, &u) in theta.iter().zip(theta_prime) {
        check_pair(alpha, t, u)?;
    }
    cfg.validate()?;
    let fine = tensor_divergence(spec, theta, theta_prime, alpha, cfg, 1)?;
    let coarse = tensor_divergence(spec, theta, theta_prime, alpha, cfg, 2)?;
    Ok(OracleResult {
        value: fine,
        error_bound: (fine - coarse).abs() + 1e-14 * (1.0 + fine.abs()),
        method: OracleMethod::TensorProduct,
    })
}

/// One tensor-grid evaluation; `coarsen` divides the panel count.
fn tensor_divergence(
    spec: &MechanismSpec,
    theta: &[f64],
    theta_prime: &[f64],
    alpha: f64,
    cfg: &QuadratureConfig,
    coarsen: usize,
) -> Result<f64> {
    let s = spec.interval().expect("bounded kind");
    let sigma = spec.sigma();
    let d = theta.len();
    // Per coordinate: node factors w · exp(L - shift) and the shift.
    let mut factors: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut shift_total = 0.0;
    let budget_per_dim = (2.0e8f64).powf(1.0 / d as f64) as usize;
    for (&tp, &tq) in theta.iter().zip(theta_prime) {
        let kp = kernel(spec, tp, cfg)?;
        let kq = kernel(spec, tq, cfg)?;
        let vertex = alpha * tp + (1.0 - alpha) * tq;
        let peak = vertex.clamp(s.lower(), s.upper());
        let dist = (vertex - peak).abs();
        // Interior features are no narrower than σ²/dist near the clamped peak.
        let scale = sigma.min(sigma * sigma / dist.max(1e-300));
        let order = 20;
        let panels = (panel_count(s.upper() - s.lower(), scale) / coarsen)
            .min(budget_per_dim / order)
            .max(2);
        let mut nodes: Vec<(f64, f64)> =
            composite_gauss_legendre(s.lower(), s.upper(), panels, order)
                .into_iter()
                .map(|(x, w)| {
                    (
                        w,
                        alpha * kp.ln_density(x) + (1.0 - alpha) * kq.ln_density(x),
                    )
                })
                .collect();
        if spec.kind() == MechanismKind::Rectified {
            let lp = normal::log_cdf((s.lower() - tp) / sigma);
            let lq = normal::log_cdf((s.lower() - tq) / sigma);
            nodes.push((1.0, alpha * lp + (1.0 - alpha) * lq));
            let lp = normal::log_cdf((tp - s.upper()) / sigma);
            let lq = normal::log_cdf((tq - s.upper()) / sigma);
            nodes.push((1.0, alpha * lp + (1.0 - alpha) * lq));
        }
        let shift = nodes.iter().map(|n| n.1).fold(f64::NEG_INFINITY, f64::max);
        shift_total += shift;
        factors.push(
            nodes
                .into_iter()
                .map(|(w, l)| w * (l - shift).exp())
                .collect(),
        );
    }
    // Full tensor sum, parallel over the first coordinate.
    let total: f64 = match d {
        1 => factors[0].iter().sum(),
        2 => factors[0]
            .par_iter()
            .map(|&f0| factors[1].iter().map(|&f1| f0 * f1).sum::<f64>())
            .collect::<Vec<_>>()
            .iter()
            .sum(),
        _ => factors[0]
            .par_iter()
            .map(|&f0| {
                factors[1]
                    .iter()
                    .map(|&f1| factors[2].iter().map(|&f2| f0 * f1 * f2).sum::<f64>())
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
            .iter()
            .sum(),
    };
    Ok((shift_total + total.ln()) / (alpha - 1.0))
}

/// Monte-Carlo estimate of `D_α(M(θ_p) ‖ M(θ_q))` from `E_p[(p/q)^(α-1)]`,
/// with a one-standard-error bound. Used to cross-check quadrature values
/// before they are frozen, not in routine tests.
pub fn monte_carlo_renyi(
    spec: &MechanismSpec,
    theta_p: f64,
    theta_q: f64,
    alpha: f64,
    draws: usize,
    seed: u64,
) -> Result<OracleResult> {
    check_pair(alpha, theta_p, theta_q)?;
    if draws < 2 {
        return Err(Error::Parameter(
            "Monte-Carlo estimate needs at least 2 draws".into(),
        ));
    }
    const CHUNK: usize = 1 << 16;
    let chunks = draws.div_ceil(CHUNK);
    let sums: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let n = CHUNK.min(draws - c * CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let x = spec.sample(theta_p, &mut rng)?;
                let r = ((alpha - 1.0)
                    * (spec.log_likelihood(theta_p, x)? - spec.log_likelihood(theta_q, x)?))
                .exp();
                s1 += r;
                s2 += r * r;
            }
            Ok((s1, s2, n))
        })
        .collect::<Result<_>>()?;
    let (s1, s2, n) = sums
        .iter()
        .fold((0.0, 0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let n = n as f64;
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    let se = (var / n).sqrt();
    Ok(OracleResult {
        value: mean.ln() / (alpha - 1.0),
        error_bound: se / mean / (alpha - 1.0),
        method: OracleMethod::MonteCarlo,
    })
}

/// One row of the golden-value table.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenEntry {
    pub name: String,
    /// `key=value` pairs separated by commas.
    pub params: String,
    pub value: f64,
    pub error_bound: f64,
    pub method: OracleMethod,
}

impl GoldenEntry {
    /// Looks up a numeric parameter by key.
    pub fn param(&self, key: &str) -> Option<f64> {
        self.params
            .split(',')
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| k.trim() == key)
            .and_then(|(_, v)| v.trim().parse().ok())
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        self.params
            .split(',')
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| k.trim() == key)
            .map(|(_, v)| v.trim())
    }
}

pub const GOLDEN_HEADER: &str = "# bounded-dp golden values v1";

/// Tab-separated table: `name  params  value  error_bound  method`.
pub fn write_golden_table<W: Write>(mut out: W, entries: &[GoldenEntry]) -> Result<()> {
    writeln!(out, "{GOLDEN_HEADER}")?;
    writeln!(out, "# name\tparams\tvalue\terror_bound\tmethod")?;
    for e in entries {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            e.name,
            e.params,
            crate::format::sig17(e.value),
            crate::format::sig17(e.error_bound),
            e.method
        )?;
    }
    Ok(())
}

pub fn read_golden_table<R: BufRead>(input: R) -> Result<Vec<GoldenEntry>> {
    let mut entries = Vec::new();
    let mut saw_header = false;
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim() == GOLDEN_HEADER {
            saw_header = true;
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            return Err(Error::Parse {
                line: lineno,
                message: format!("missing '{GOLDEN_HEADER}' header"),
            });
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 5 tab-separated fields, found {}", fields.len()),
            });
        }
        let num = |s: &str, what: &str| {
            s.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad {what} '{s}'"),
            })
        };
        entries.push(GoldenEntry {
            name: fields[0].to_string(),
            params: fields[1].to_string(),
            value: num(fields[2], "value")?,
            error_bound: num(fields[3], "error bound")?,
            method: fields[4].trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("unknown method '{}'", fields[4]),
            })?,
        });
    }
    Ok(entries)
}

pub fn load_golden_table(path: &Path) -> Result<Vec<GoldenEntry>> {
    let file = std::fs::File::open(path)?;
    read_golden_table(std::io::BufReader::new(file))
}

pub mod grid;
