//! Grid sweeps comparing closed forms with their oracles. Shared by the
//! `oracle-check` command and the acceptance tests.

use rayon::prelude::*;

use crate::error::Result;
use crate::fil;
use crate::mechanisms::{MechanismKind, MechanismSpec};
use crate::numerics::QuadratureConfig;
use crate::rdp;

use super::{oracle_fisher, oracle_renyi};

/// `|closed - oracle| ≤ max(abs, rel |oracle|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const RDP: Tolerance = Tolerance {
        abs: 1e-8,
        rel: 1e-6,
    };
    pub const FIL: Tolerance = Tolerance {
        abs: 0.0,
        rel: 1e-6,
    };

    fn allowed(&self, reference: f64) -> f64 {
        self.abs.max(self.rel * reference.abs())
    }
}

/// `start, start + step, ..., stop` with the endpoint included.
pub fn inclusive_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdpGrid {
    pub alphas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub shifts: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub half_widths: Vec<f64>,
}

impl Default for RdpGrid {
    fn default() -> Self {
        RdpGrid {
            alphas: vec![1.5, 2.0, 4.0, 8.0, 32.0],
            thetas: inclusive_range(-3.0, 3.0, 0.25),
            shifts: vec![0.1, 0.5, 1.0],
            sigmas: vec![0.5, 1.0, 2.0],
            half_widths: vec![0.5, 1.0, 2.0],
        }
    }
}

impl RdpGrid {
    pub fn cells(&self) -> Vec<RdpCell> {
        let mut out = Vec::new();
        for &alpha in &self.alphas {
            for &theta in &self.thetas {
                for &c in &self.shifts {
                    for &sigma in &self.sigmas {
                        for &a in &self.half_widths {
                            out.push(RdpCell {
                                alpha,
                                theta,
                                c,
                                sigma,
                                a,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdpCell {
    pub alpha: f64,
    pub theta: f64,
    pub c: f64,
    pub sigma: f64,
    pub a: f64,
}

impl std::fmt::Display for RdpCell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "alpha={}, theta={}, c={}, sigma={}, a={}",
            self.alpha, self.theta, self.c, self.sigma, self.a
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilGrid {
    pub thetas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub half_widths: Vec<f64>,
}

impl Default for FilGrid {
    fn default() -> Self {
        FilGrid {
            thetas: inclusive_range(-4.0, 4.0, 0.25),
            sigmas: vec![0.5, 1.0, 2.0],
            half_widths: vec![0.5, 1.0, 2.0],
        }
    }
}

impl FilGrid {
    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &theta in &self.thetas {
            for &sigma in &self.sigmas {
                for &a in &self.half_widths {
                    out.push((theta, sigma, a));
                }
            }
        }
        out
    }
}

/// One closed-form/oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub params: String,
    pub closed_form: f64,
    pub oracle: f64,
    pub oracle_error_bound: f64,
    pub allowed: f64,
}

impl Comparison {
    pub fn deviation(&self) -> f64 {
        if self.closed_form == self.oracle {
            0.0
        } else {
            (self.closed_form - self.oracle).abs()
        }
    }

    pub fn passes(&self) -> bool {
        self.deviation() <= self.allowed
    }
}

/// Outcome of one formula over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCheck {
    pub formula: String,
    pub comparisons: Vec<Comparison>,
}

impl GridCheck {
    pub fn violations(&self) -> impl Iterator<Item = &Comparison> {
        self.comparisons.iter().filter(|c| !c.passes())
    }

    pub fn passed(&self) -> bool {
        self.violations().next().is_none()
    }

    /// Largest absolute deviation and where it occurs.
    pub fn worst(&self) -> Option<&Comparison> {
        self.comparisons
            .iter()
            .max_by(|a, b| a.deviation().total_cmp(&b.deviation()))
    }

    /// Largest deviation relative to the oracle value.
    pub fn worst_relative(&self) -> f64 {
        self.comparisons
            .iter()
            .map(|c| c.deviation() / c.oracle.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    pub fn summary(&self) -> String {
        match self.worst() {
            Some(w) => format!(
                "{}: {} cases, {} violations, worst |dev| {:.3e} (rel {:.3e}) at {}",
                self.formula,
                self.comparisons.len(),
                self.violations().count(),
                w.deviation(),
                self.worst_relative(),
                w.params
            ),
            None => format!("{}: no cases", self.formula),
        }
    }
}

/// Closed-form divergence of `kind` (rectified or truncated) against
/// [`oracle_renyi`] on every grid cell.
pub fn check_rdp(
    kind: MechanismKind,
    grid: &RdpGrid,
    tol: Tolerance,
    cfg: &QuadratureConfig,
) -> Result<GridCheck> {
    let comparisons = grid
        .cells()
        .par_iter()
        .map(|cell| {
            let closed = match kind {
                MechanismKind::Rectified => {
                    rdp::renyi_rectified(cell.alpha, cell.theta, cell.c, cell.sigma, cell.a)?
                }
                MechanismKind::Truncated => {
                    rdp::renyi_truncated(cell.alpha, cell.theta, cell.c, cell.sigma, cell.a)?
                }
                MechanismKind::Gaussian => rdp::renyi_gaussian(cell.alpha, cell.c, cell.sigma)?,
                MechanismKind::Sign => rdp::renyi_sign(cell.alpha, cell.theta, cell.c, cell.sigma)?,
            };
            let spec = MechanismSpec::symmetric(kind, cell.sigma, cell.a)?;
            let oracle = oracle_renyi(&spec, cell.theta, cell.theta + cell.c, cell.alpha, cfg)?;
            Ok(Comparison {
                params: cell.to_string(),
                closed_form: closed,
                oracle: oracle.value,
                oracle_error_bound: oracle.error_bound,
                allowed: tol.allowed(oracle.value),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridCheck {
        formula: format!("renyi_{kind}"),
        comparisons,
    })
}

/// Closed-form `η²` of `kind` against [`oracle_fisher`] on every grid cell.
pub fn check_fil(
    kind: MechanismKind,
    grid: &FilGrid,
    tol: Tolerance,
    cfg: &QuadratureConfig,
) -> Result<GridCheck> {
    let mut cells = grid.cells();
    if !kind.is_bounded() {
        // The support plays no role; keep one cell per (θ, σ).
        let first = grid.half_widths.first().copied();
        cells.retain(|c| Some(c.2) == first);
    }
    let comparisons = cells
        .par_iter()
        .map(|&(theta, sigma, a)| {
            let spec = MechanismSpec::symmetric(kind, sigma, a)?;
            let eta = fil::eta_for(&spec, theta)?;
            let oracle = oracle_fisher(&spec, theta, cfg)?;
            let params = match kind {
                MechanismKind::Sign | MechanismKind::Gaussian => {
                    format!("theta={theta}, sigma={sigma}")
                }
                _ => format!("theta={theta}, sigma={sigma}, a={a}"),
            };
            Ok(Comparison {
                params,
                closed_form: eta * eta,
                oracle: oracle.value,
                oracle_error_bound: oracle.error_bound,
                allowed: tol.allowed(oracle.value),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridCheck {
        formula: format!("eta_{kind}"),
        comparisons,
    })
}
