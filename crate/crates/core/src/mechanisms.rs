//! Gaussian, rectified-Gaussian, truncated-Gaussian and stochastic-sign
//! mechanisms: sampling and likelihoods.
//!
//! A [`MechanismSpec`] fixes the kind, the noise scale and the support. The
//! location `theta` (the true query answer) is passed per call, and may lie
//! outside the support for both bounded kinds.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::numerics::logspace::{log_add_exp, log_diff_exp};
use crate::numerics::normal;

/// Closed interval `[lower, upper]` used as the support of a bounded mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportInterval {
    lower: f64,
    upper: f64,
}

impl SupportInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        ensure_finite("support lower bound", lower)?;
        ensure_finite("support upper bound", upper)?;
        if lower >= upper {
            return Err(Error::Parameter(format!(
                "support needs lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(SupportInterval { lower, upper })
    }

    /// `[-a, a]`.
    pub fn symmetric(half_width: f64) -> Result<Self> {
        ensure_positive("half-width", half_width)?;
        Ok(SupportInterval {
            lower: -half_width,
            upper: half_width,
        })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// Half-width when the interval is centered at zero.
    pub fn half_width(&self) -> Option<f64> {
        (self.lower == -self.upper).then_some(self.upper)
    }
}

/// The L∞ ball `{x : ‖x‖∞ ≤ a}`, applied coordinatewise as `[-a, a]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    half_width: f64,
}

impl SupportBox {
    pub fn new(half_width: f64) -> Result<Self> {
        ensure_positive("box half-width", half_width)?;
        Ok(SupportBox { half_width })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn interval(&self) -> SupportInterval {
        SupportInterval {
            lower: -self.half_width,
            upper: self.half_width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MechanismKind {
    Gaussian,
    Rectified,
    Truncated,
    Sign,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 4] = [
        MechanismKind::Gaussian,
        MechanismKind::Rectified,
        MechanismKind::Truncated,
        MechanismKind::Sign,
    ];

    pub fn is_bounded(self) -> bool {
        matches!(self, MechanismKind::Rectified | MechanismKind::Truncated)
    }

    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Gaussian => "gaussian",
            MechanismKind::Rectified => "rectified",
            MechanismKind::Truncated => "truncated",
            MechanismKind::Sign => "sign",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MechanismKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "unknown mechanism '{s}' (expected gaussian, rectified, truncated or sign)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Support {
    Unbounded,
    Interval(SupportInterval),
    Box(SupportBox),
}

/// Mechanism kind, noise scale and support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec {
    kind: MechanismKind,
    sigma: f64,
    support: Support,
}

impl MechanismSpec {
    pub fn new(kind: MechanismKind, sigma: f64, support: Support) -> Result<Self> {
        ensure_positive("sigma", sigma)?;
        let bounded_support = !matches!(support, Support::Unbounded);
        if kind.is_bounded() != bounded_support {
            return Err(Error::Parameter(format!(
                "{kind} mechanism {} a support set",
                if kind.is_bounded() {
                    "requires"
                } else {
                    "does not take"
                }
            )));
        }
        Ok(MechanismSpec {
            kind,
            sigma,
            support,
        })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(MechanismKind::Gaussian, sigma, Support::Unbounded)
    }

    pub fn sign(sigma: f64) -> Result<Self> {
        Self::new(MechanismKind::Sign, sigma, Support::Unbounded)
    }

    pub fn rectified(sigma: f64, support: SupportInterval) -> Result<Self> {
        Self::new(MechanismKind::Rectified, sigma, Support::Interval(support))
    }

    pub fn truncated(sigma: f64, support: SupportInterval) -> Result<Self> {
        Self::new(MechanismKind::Truncated, sigma, Support::Interval(support))
    }

    /// Tensor form over the box `‖x‖∞ ≤ a`.
    pub fn boxed(kind: MechanismKind, sigma: f64, half_width: f64) -> Result<Self> {
        let support = if kind.is_bounded() {
            Support::Box(SupportBox::new(half_width)?)
        } else {
            Support::Unbounded
        };
        Self::new(kind, sigma, support)
    }

    /// Scalar form on `[-a, a]`; `half_width` is ignored for unbounded kinds.
    pub fn symmetric(kind: MechanismKind, sigma: f64, half_width: f64) -> Result<Self> {
        let support = if kind.is_bounded() {
            Support::Interval(SupportInterval::symmetric(half_width)?)
        } else {
            Support::Unbounded
        };
        Self::new(kind, sigma, support)
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn support(&self) -> Support {
        self.support
    }

    /// Scalar support interval; a box contributes its per-coordinate interval.
    pub fn interval(&self) -> Option<SupportInterval> {
        match self.support {
            Support::Unbounded => None,
            Support::Interval(s) => Some(s),
            Support::Box(b) => Some(b.interval()),
        }
    }

    fn bounded_interval(&self) -> Result<SupportInterval> {
        self.interval().ok_or_else(|| {
            Error::Parameter(format!("{} mechanism has no support interval", self.kind))
        })
    }

    /// Draws one output at location `theta`.
    ///
    /// Gaussian, rectified and sign draws consume exactly one standard normal
    /// from `rng`, so with a shared stream the rectified output is the clamped
    /// Gaussian output draw by draw.
    pub fn sample<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> Result<f64> {
        ensure_finite("theta", theta)?;
        Ok(self.sample_unchecked(theta, rng))
    }

    fn sample_unchecked<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> f64 {
        match self.kind {
            MechanismKind::Gaussian => gaussian_draw(theta, self.sigma, rng),
            MechanismKind::Rectified => {
                let s = self.interval().expect("validated at construction");
                gaussian_draw(theta, self.sigma, rng).clamp(s.lower, s.upper)
            }
            MechanismKind::Truncated => {
                let s = self.interval().expect("validated at construction");
                let lo = (s.lower - theta) / self.sigma;
                let hi = (s.upper - theta) / self.sigma;
                let z = sample_truncated_standard(lo, hi, rng);
                (theta + self.sigma * z).clamp(s.lower, s.upper)
            }
            MechanismKind::Sign => {
                if gaussian_draw(theta, self.sigma, rng) > 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    /// Independent per-coordinate draws, consumed in index order.
    pub fn sample_vector<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        for &t in theta {
            ensure_finite("theta", t)?;
        }
        Ok(theta
            .iter()
            .map(|&t| self.sample_unchecked(t, rng))
            .collect())
    }

    /// Interior density at `x` together with the endpoint atoms.
    pub fn density(&self, theta: f64, x: f64) -> Result<Density> {
        ensure_finite("theta", theta)?;
        let sigma = self.sigma;
        match self.kind {
            MechanismKind::Gaussian => Ok(Density {
                interior: normal::pdf((x - theta) / sigma) / sigma,
                atom_lower: 0.0,
                atom_upper: 0.0,
            }),
            MechanismKind::Rectified => {
                let s = self.bounded_interval()?;
                let inside = s.lower < x && x < s.upper;
                Ok(Density {
                    interior: if inside {
                        normal::pdf((x - theta) / sigma) / sigma
                    } else {
                        0.0
                    },
                    atom_lower: normal::cdf((s.lower - theta) / sigma),
                    atom_upper: normal::cdf((theta - s.upper) / sigma),
                })
            }
            MechanismKind::Truncated => {
                let s = self.bounded_interval()?;
                let inside = s.lower < x && x < s.upper;
                let interior = if inside {
                    let log_z = normal::log_interval_mass(
                        (s.lower - theta) / sigma,
                        (s.upper - theta) / sigma,
                    );
                    (normal::log_pdf((x - theta) / sigma) - log_z).exp() / sigma
                } else {
                    0.0
                };
                Ok(Density {
                    interior,
                    atom_lower: 0.0,
                    atom_upper: 0.0,
                })
            }
            MechanismKind::Sign => Err(Error::Unsupported(
                "the sign mechanism has a two-point pmf; use sign_pmf".into(),
            )),
        }
    }

    /// Log-likelihood of one observed output. For the rectified kind an
    /// output exactly at an endpoint is the atom there; for the sign kind the
    /// output must be `-1` or `+1`.
    pub fn log_likelihood(&self, theta: f64, x: f64) -> Result<f64> {
        ensure_finite("theta", theta)?;
        let sigma = self.sigma;
        let z = (x - theta) / sigma;
        match self.kind {
            MechanismKind::Gaussian => Ok(normal::log_pdf(z) - sigma.ln()),
            MechanismKind::Rectified => {
                let s = self.bounded_interval()?;
                Ok(if x == s.lower {
                    normal::log_cdf((s.lower - theta) / sigma)
                } else if x == s.upper {
                    normal::log_cdf((theta - s.upper) / sigma)
                } else if s.lower < x && x < s.upper {
                    normal::log_pdf(z) - sigma.ln()
                } else {
                    f64::NEG_INFINITY
                })
            }
            MechanismKind::Truncated => {
                let s = self.bounded_interval()?;
                if !(s.lower < x && x < s.upper) {
                    return Ok(f64::NEG_INFINITY);
                }
                let log_z =
                    normal::log_interval_mass((s.lower - theta) / sigma, (s.upper - theta) / sigma);
                Ok(normal::log_pdf(z) - sigma.ln() - log_z)
            }
            MechanismKind::Sign => {
                if x == 1.0 {
                    Ok(normal::log_cdf(theta / sigma))
                } else if x == -1.0 {
                    Ok(normal::log_cdf(-theta / sigma))
                } else {
                    Err(Error::Domain(format!(
                        "sign mechanism outputs are -1 or +1, got {x}"
                    )))
                }
            }
        }
    }
}

/// Mixed density of a mechanism output: a density on the open support plus
/// point masses at its endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density {
    pub interior: f64,
    pub atom_lower: f64,
    pub atom_upper: f64,
}

/// `(P(-1), P(+1))` for the stochastic-sign mechanism.
pub fn sign_pmf(theta: f64, sigma: f64) -> Result<(f64, f64)> {
    ensure_finite("theta", theta)?;
    ensure_positive("sigma", sigma)?;
    let t = theta / sigma;
    Ok((normal::cdf(-t), normal::cdf(t)))
}

/// ChaCha20 stream `stream` under `seed`. Distinct streams are independent,
/// so trial `t` of a run can be regenerated alone.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[inline]
fn gaussian_draw<R: Rng + ?Sized>(theta: f64, sigma: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    theta + sigma * z
}

/// Windows whose mass is below this use the rejection sampler.
const LOG_MIN_WINDOW: f64 = -667.7; // ln(1e-290)

/// Standard normal conditioned on `(lo, hi)`.
fn sample_truncated_standard<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    // Work on whichever side keeps both endpoints in the lower tail.
    if lo + hi > 0.0 {
        return -sample_truncated_standard(-hi, -lo, rng);
    }
    let log_lo = normal::log_cdf(lo);
    let log_hi = normal::log_cdf(hi);
    let log_window = log_diff_exp(log_hi, log_lo);
    if log_window < LOG_MIN_WINDOW && hi < 0.0 {
        return -sample_upper_tail(-hi, -lo, rng);
    }
    let u: f64 = Open01.sample(rng);
    let z = normal::inverse_log_cdf(log_add_exp(log_lo, u.ln() + log_window));
    nudge_inside(z, lo, hi)
}

/// Rejection sampler for a standard normal on `[t, upper]` with `t > 0`,
/// using a truncated exponential proposal with the optimal rate for `t`.
fn sample_upper_tail<R: Rng + ?Sized>(t: f64, upper: f64, rng: &mut R) -> f64 {
    let lambda = 0.5 * (t + (t * t + 4.0).sqrt());
    let width = upper - t;
    // Mass of the proposal that lands inside the window.
    let inside = -(-lambda * width).exp_m1();
    loop {
        let u: f64 = Open01.sample(rng);
        let z = if inside >= 1.0 {
            let e: f64 = Exp1.sample(rng);
            t + e / lambda
        } else {
            t - (-u * inside).ln_1p() / lambda
        };
        let accept: f64 = Open01.sample(rng);
        let d = z - lambda;
        if accept.ln() <= -0.5 * d * d {
            return nudge_inside(z, t, upper);
        }
    }
}

fn nudge_inside(z: f64, lo: f64, hi: f64) -> f64 {
    if z <= lo {
        lo.next_up().min(0.5 * (lo + hi))
    } else if z >= hi {
        hi.next_down().max(0.5 * (lo + hi))
    } else {
        z
    }
}
