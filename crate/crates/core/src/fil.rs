//! Fisher information loss (FIL) of the four mechanisms, multidimensional
//! Fisher information matrices and their composition.
//!
//! Every `eta_*` function returns the per-coordinate factor `η` such that the
//! FIL of releasing `f(D)` is `η ‖J_f‖₂`. Squaring gives the Fisher
//! information of the location parameter.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::mechanisms::{MechanismKind, MechanismSpec, SupportInterval};
use crate::numerics::normal;

/// `1/σ`.
pub fn eta_gaussian(sigma: f64) -> Result<f64> {
    ensure_positive("sigma", sigma)?;
    Ok(1.0 / sigma)
}

/// FIL factor of the truncated Gaussian on `support`.
///
/// This is the standard deviation of the truncated law divided by `σ²`; the
/// ratios `φ/Z` are formed in log space so a location far outside the
/// support does not produce `0/0`.
pub fn eta_truncated(theta: f64, sigma: f64, support: SupportInterval) -> Result<f64> {
    ensure_finite("theta", theta)?;
    ensure_positive("sigma", sigma)?;
    let (za, zb) = reflect_to_lower(
        (support.lower() - theta) / sigma,
        (support.upper() - theta) / sigma,
    );
    Ok(truncated_variance_ratio(za, zb).sqrt() / sigma)
}

/// `Var(Z | za < Z < zb)` for a standard normal `Z`.
fn truncated_variance_ratio(za: f64, zb: f64) -> f64 {
    let log_z = normal::log_interval_mass(za, zb);
    let ra = (normal::log_pdf(za) - log_z).exp();
    let rb = (normal::log_pdf(zb) - log_z).exp();
    let v = 1.0 + za * ra - zb * rb - (ra - rb) * (ra - rb);
    v.clamp(0.0, 1.0)
}

/// FIL factor of the rectified Gaussian on `support`.
///
/// Written through the hazard excess `h(t) = φ(t)/Φ(-t) - t`:
/// `σ²η² = φ(za) h(-za) + φ(zb) h(zb) + Φ(zb) - Φ(za)`, a sum of positive
/// terms, which avoids the cancellation between the atom terms `φ²/Φ` and the
/// boundary terms `z φ(z)`.
pub fn eta_rectified(theta: f64, sigma: f64, support: SupportInterval) -> Result<f64> {
    ensure_finite("theta", theta)?;
    ensure_positive("sigma", sigma)?;
    let za = (support.lower() - theta) / sigma;
    let zb = (support.upper() - theta) / sigma;
    let lower = endpoint_term(za, -za);
    let upper = endpoint_term(zb, zb);
    let interior = normal::interval_mass(za, zb);
    Ok((lower + upper + interior).sqrt() / sigma)
}

/// `φ(z) h(t)`, evaluated as `exp(ln φ(z) + ln h(t))`.
fn endpoint_term(z: f64, t: f64) -> f64 {
    (normal::log_pdf(z) + normal::hazard_excess(t).ln()).exp()
}

/// FIL factor of the stochastic-sign mechanism,
/// `φ(θ/σ) / (σ √(Φ(θ/σ) Φ(-θ/σ)))`.
pub fn eta_sign(theta: f64, sigma: f64) -> Result<f64> {
    ensure_finite("theta", theta)?;
    ensure_positive("sigma", sigma)?;
    let t = theta / sigma;
    let log_eta = normal::log_pdf(t) - 0.5 * (normal::log_cdf(t) + normal::log_cdf(-t));
    Ok(log_eta.exp() / sigma)
}

/// FIL factor of a Gaussian observation quantized to the uniform alphabet
/// `{a, a + Δ, ..., b}` with `Δ = (b - a)/k`, rounding to the nearest level.
///
/// The outer levels collect everything beyond the first and last midpoint,
/// so as `k` grows the output law tends to the rectified Gaussian and so does
/// this value.
pub fn eta_quantized(
    theta: f64,
    sigma: f64,
    support: SupportInterval,
    k_levels: usize,
) -> Result<f64> {
    ensure_finite("theta", theta)?;
    ensure_positive("sigma", sigma)?;
    if k_levels < 2 {
        return Err(Error::Parameter(format!(
            "k_levels must be at least 2, got {k_levels}"
        )));
    }
    let (a, b) = (support.lower(), support.upper());
    let step = (b - a) / k_levels as f64;
    // Standardized decision boundaries, padded with the infinite ends.
    let boundary = |i: usize| -> f64 {
        if i == 0 {
            f64::NEG_INFINITY
        } else if i > k_levels {
            f64::INFINITY
        } else {
            (a + (i as f64 - 0.5) * step - theta) / sigma
        }
    };
    let terms: Vec<f64> = (0..=k_levels)
        .map(|i| {
            let (lo, hi) = (boundary(i), boundary(i + 1));
            let log_p = normal::log_interval_mass(lo, hi);
            (2.0 * log_abs_pdf_diff(lo, hi) - log_p).exp()
        })
        .collect();
    Ok(crate::numerics::pairwise_sum(&terms).sqrt() / sigma)
}

/// `ln |φ(x) - φ(y)|` without cancellation for nearby `x`, `y`.
fn log_abs_pdf_diff(x: f64, y: f64) -> f64 {
    let (near, far) = if x.abs() <= y.abs() { (x, y) } else { (y, x) };
    if far.is_infinite() {
        return normal::log_pdf(near);
    }
    // φ(near) - φ(far) = φ(near) (1 - exp(-(far² - near²)/2))
    let gap = 0.5 * (far - near) * (far + near);
    normal::log_pdf(near) + (-(-gap).exp_m1()).ln()
}

/// The `η` matching `spec` at location `theta`.
pub fn eta_for(spec: &MechanismSpec, theta: f64) -> Result<f64> {
    match spec.kind() {
        MechanismKind::Gaussian => eta_gaussian(spec.sigma()),
        MechanismKind::Sign => eta_sign(theta, spec.sigma()),
        MechanismKind::Rectified => eta_rectified(theta, spec.sigma(), bounded(spec)?),
        MechanismKind::Truncated => eta_truncated(theta, spec.sigma(), bounded(spec)?),
    }
}

fn bounded(spec: &MechanismSpec) -> Result<SupportInterval> {
    spec.interval()
        .ok_or_else(|| Error::Parameter(format!("{} mechanism needs a support", spec.kind())))
}

/// Reflect `(za, zb)` so the interval sits in the lower tail; FIL factors
/// are invariant under this.
fn reflect_to_lower(za: f64, zb: f64) -> (f64, f64) {
    if za + zb > 0.0 {
        (-zb, -za)
    } else {
        (za, zb)
    }
}

/// Symmetric positive semidefinite Fisher information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherInformationMatrix {
    matrix: DMatrix<f64>,
}

impl FisherInformationMatrix {
    /// Accepts `matrix` if it is square, symmetric to roundoff and has no
    /// eigenvalue below `-1e-9 ‖M‖₂`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape(format!(
                "Fisher information must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(
                "Fisher information has non-finite entries".into(),
            ));
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::Consistency(format!(
                "matrix is not symmetric (max |M - Mᵀ| = {asym:e})"
            )));
        }
        let fim = FisherInformationMatrix { matrix };
        let eig = fim.eigenvalues();
        let norm = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-9 * norm {
            return Err(Error::Consistency(format!(
                "matrix is not positive semidefinite (min eigenvalue {min:e}, norm {norm:e})"
            )));
        }
        Ok(fim)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    /// `‖I‖₂`, the largest eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().into_iter().fold(0.0, f64::max)
    }

    /// FIL `η = √‖I‖₂`.
    pub fn fil(&self) -> f64 {
        self.spectral_norm().sqrt()
    }
}

/// `Jᵀ diag(η²) J` for a `d × m` Jacobian of the released query.
pub fn assemble_fim(etas: &[f64], jacobian: &DMatrix<f64>) -> Result<FisherInformationMatrix> {
    if etas.len() != jacobian.nrows() {
        return Err(Error::Shape(format!(
            "{} eta values for a Jacobian with {} rows",
            etas.len(),
            jacobian.nrows()
        )));
    }
    check_etas(etas)?;
    let weighted = scale_rows(etas, jacobian);
    let m = weighted.transpose() * &weighted;
    // Exact symmetry regardless of summation order in the product.
    let m = 0.5 * (&m + m.transpose());
    FisherInformationMatrix::new(m)
}

/// Per-example FIL in both conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerExampleFil {
    /// `‖diag(η) J_i‖₂`, the default reported value.
    pub spectral: f64,
    /// `‖ηᵀ J_i‖₂²`, the squared row-vector form.
    pub literal_squared: f64,
}

/// FIL of one example whose contribution to the released `d`-vector has
/// Jacobian `J_i` (`d × k`).
pub fn per_example_fil(etas: &[f64], jacobian: &DMatrix<f64>) -> Result<PerExampleFil> {
    if etas.len() != jacobian.nrows() {
        return Err(Error::Shape(format!(
            "{} eta values for a Jacobian with {} rows",
            etas.len(),
            jacobian.nrows()
        )));
    }
    check_etas(etas)?;
    let weighted = scale_rows(etas, jacobian);
    let spectral = if weighted.is_empty() {
        0.0
    } else {
        weighted.singular_values().max()
    };
    let row = jacobian.tr_mul(&nalgebra::DVector::from_column_slice(etas));
    Ok(PerExampleFil {
        spectral,
        literal_squared: row.norm_squared(),
    })
}

/// Fisher information adds over independent releases.
pub fn compose_fil(fims: &[FisherInformationMatrix]) -> Result<FisherInformationMatrix> {
    let first = fims
        .first()
        .ok_or_else(|| Error::Parameter("nothing to compose".into()))?;
    let mut total = first.matrix.clone();
    for f in &fims[1..] {
        if f.dim() != first.dim() {
            return Err(Error::Shape(format!(
                "cannot compose {0}x{0} with {1}x{1}",
                first.dim(),
                f.dim()
            )));
        }
        total += &f.matrix;
    }
    Ok(FisherInformationMatrix { matrix: total })
}

/// Scales `η` by the sampling rate `q`.
///
/// Experimental: no amplification rule for FIL under subsampling is derived
/// in this crate, and nothing calls this by default.
pub fn subsample_fil(eta: f64, q: f64) -> Result<f64> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::Parameter(format!(
            "eta must be finite and >= 0, got {eta}"
        )));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Parameter(format!(
            "sampling rate must lie in (0, 1], got {q}"
        )));
    }
    Ok(q * eta)
}

fn check_etas(etas: &[f64]) -> Result<()> {
    match etas.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        Some(e) => Err(Error::Parameter(format!(
            "eta values must be finite and >= 0, got {e}"
        ))),
        None => Ok(()),
    }
}

fn scale_rows(etas: &[f64], jacobian: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = jacobian.clone();
    for (mut row, &e) in out.row_iter_mut().zip(etas) {
        row *= e;
    }
    out
}
