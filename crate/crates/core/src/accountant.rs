//! Per-step RDP and FIL accounting for gradient releases through a bounded
//! (or plain) Gaussian mechanism.
//!
//! One step: clip per-example gradients to `[-C, C]` coordinatewise, sum
//! them, and release the sum through the mechanism. Every coordinate is
//! accounted at its own location (the summed gradient there) with
//! sensitivity `C`; the total RDP is the sum over coordinates.

use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::fil;
use crate::format::{floats, nums, Num};
use crate::mechanisms::{MechanismKind, MechanismSpec};
use crate::numerics::pairwise_sum;
use crate::rdp::{self, RdpCurve, RdpPoint, Sensitivity};

/// Per-example gradients (`n × d`) with their L∞ clip bound.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBatch {
    per_example: DMatrix<f64>,
    clip_bound: f64,
    /// `true` where the raw entry exceeded the bound and was clamped.
    saturated: DMatrix<bool>,
    jacobians: Option<Vec<DMatrix<f64>>>,
}

impl GradientBatch {
    /// Wraps gradients that are already clipped. Nothing is clamped here;
    /// [`account_step`] rejects entries beyond the bound.
    pub fn new(per_example: DMatrix<f64>, clip_bound: f64) -> Result<Self> {
        ensure_positive("clip bound", clip_bound)?;
        if per_example.nrows() == 0 || per_example.ncols() == 0 {
            return Err(Error::Shape(format!(
                "gradient batch needs n >= 1 and d >= 1, got {}x{}",
                per_example.nrows(),
                per_example.ncols()
            )));
        }
        if let Some(v) = per_example.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "gradient entries must be finite, got {v}"
            )));
        }
        let saturated = DMatrix::from_element(per_example.nrows(), per_example.ncols(), false);
        Ok(GradientBatch {
            per_example,
            clip_bound,
            saturated,
            jacobians: None,
        })
    }

    /// Attaches per-example Jacobians `∇_{x_i} ĝ(x_i)`, each `d × k`.
    pub fn with_jacobians(mut self, jacobians: Vec<DMatrix<f64>>) -> Result<Self> {
        if jacobians.len() != self.n() {
            return Err(Error::Shape(format!(
                "{} Jacobians for {} examples",
                jacobians.len(),
                self.n()
            )));
        }
        if let Some(j) = jacobians.iter().find(|j| j.nrows() != self.d()) {
            return Err(Error::Shape(format!(
                "Jacobian has {} rows, expected d = {}",
                j.nrows(),
                self.d()
            )));
        }
        self.jacobians = Some(jacobians);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.per_example.nrows()
    }

    pub fn d(&self) -> usize {
        self.per_example.ncols()
    }

    pub fn clip_bound(&self) -> f64 {
        self.clip_bound
    }

    pub fn per_example(&self) -> &DMatrix<f64> {
        &self.per_example
    }

    pub fn saturated(&self) -> &DMatrix<bool> {
        &self.saturated
    }

    pub fn is_clipped(&self) -> bool {
        self.per_example.iter().all(|v| v.abs() <= self.clip_bound)
    }

    /// `Σ_i ĝ(x_i)`, summed per coordinate in a fixed pairwise order.
    pub fn summed(&self) -> Vec<f64> {
        self.per_example
            .column_iter()
            .map(|col| pairwise_sum(col.as_slice()))
            .collect()
    }
}

/// Clamps every entry to `[-C, C]` and records which entries saturated.
pub fn clip_linf(raw: &DMatrix<f64>, clip_bound: f64) -> Result<GradientBatch> {
    let mut batch = GradientBatch::new(raw.clone(), clip_bound)?;
    batch.saturated = raw.map(|v| v.abs() > clip_bound);
    batch.per_example = raw.map(|v| v.clamp(-clip_bound, clip_bound));
    Ok(batch)
}

/// Shortcuts and conventions a report relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assumption {
    /// Each coordinate maximized over shifts `±C` and both divergence orders.
    DirectionMax,
    /// Rectified worst case evaluated only at shift magnitude `C`.
    RectifiedEndpointShift,
    /// Rectified worst case scanned over interior shift magnitudes.
    RectifiedShiftScan,
    /// Per-example Jacobians were supplied by the caller and used as given.
    SuppliedJacobian,
    /// Per-example Jacobian taken as the identity with zero rows where the
    /// clip saturated.
    ClippedSumJacobian,
    /// Location is the noiseless summed gradient, not an average.
    SummedLocation,
    /// Sensitivity of an averaged query taken as a replace-one shift.
    ReplaceOneSensitivity,
}

impl Assumption {
    pub fn tag(self) -> &'static str {
        match self {
            Assumption::DirectionMax => "direction-max",
            Assumption::RectifiedEndpointShift => "rectified-endpoint-shift",
            Assumption::RectifiedShiftScan => "rectified-shift-scan",
            Assumption::SuppliedJacobian => "supplied-jacobian",
            Assumption::ClippedSumJacobian => "clipped-sum-jacobian",
            Assumption::SummedLocation => "summed-location",
            Assumption::ReplaceOneSensitivity => "replace-one-sensitivity",
        }
    }
}

/// Options for [`account_step_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct AccountingOptions {
    pub alpha_grid: Vec<f64>,
    /// Order at which per-coordinate ε is reported; must be on the grid.
    pub designated_alpha: f64,
    /// Number of shift magnitudes tried for the rectified kind (1 = endpoints).
    pub rectified_scan: usize,
}

impl Default for AccountingOptions {
    fn default() -> Self {
        AccountingOptions {
            alpha_grid: rdp::DEFAULT_ALPHA_GRID.to_vec(),
            designated_alpha: 2.0,
            rectified_scan: 1,
        }
    }
}

impl AccountingOptions {
    pub fn with_grid(alpha_grid: &[f64]) -> Self {
        let designated_alpha = if alpha_grid.contains(&2.0) {
            2.0
        } else {
            alpha_grid.first().copied().unwrap_or(2.0)
        };
        AccountingOptions {
            alpha_grid: alpha_grid.to_vec(),
            designated_alpha,
            rectified_scan: 1,
        }
    }
}

/// Output of one or more composed accounting steps.
#[derive(Debug, Clone, PartialEq)]
pub struct AccountingReport {
    pub rdp_curve: RdpCurve,
    pub designated_alpha: f64,
    pub per_coordinate_epsilon: Vec<f64>,
    /// Default (spectral-norm) per-example FIL.
    pub per_example_fil: Vec<f64>,
    /// Per-example `‖ηᵀ J_i‖₂²`.
    pub per_example_fil_squared: Vec<f64>,
    pub assumptions: Vec<Assumption>,
    pub step_count: usize,
}

/// Per-coordinate RDP over an α grid plus the `η` at each location.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationAccount {
    pub rdp_curve: RdpCurve,
    /// `per_alpha[k][j]`: ε of coordinate `j` at the `k`-th order.
    pub per_alpha: Vec<Vec<f64>>,
    pub etas: Vec<f64>,
    pub assumptions: Vec<Assumption>,
}

/// Accounts a release of `spec` at locations `theta` with per-coordinate
/// sensitivity `sens`.
pub fn account_location(
    theta: &[f64],
    spec: &MechanismSpec,
    sens: Sensitivity,
    alpha_grid: &[f64],
    rectified_scan: usize,
) -> Result<LocationAccount> {
    let mut per_alpha = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let eps: Vec<f64> = theta
            .iter()
            .map(|&t| rdp::per_instance_rdp_scalar_scan(spec, alpha, t, sens, rectified_scan))
            .collect::<Result<_>>()?;
        per_alpha.push(eps);
    }
    let points = alpha_grid
        .iter()
        .zip(&per_alpha)
        .map(|(&alpha, eps)| RdpPoint {
            alpha,
            epsilon: pairwise_sum(eps),
        })
        .collect();
    let rdp_curve = RdpCurve::new(points)?;
    let etas = theta
        .iter()
        .map(|&t| fil::eta_for(spec, t))
        .collect::<Result<_>>()?;

    let mut assumptions = vec![Assumption::DirectionMax];
    if spec.kind() == MechanismKind::Rectified {
        assumptions.push(if rectified_scan > 1 {
            Assumption::RectifiedShiftScan
        } else {
            Assumption::RectifiedEndpointShift
        });
    }
    Ok(LocationAccount {
        rdp_curve,
        per_alpha,
        etas,
        assumptions,
    })
}

/// One accounting step with default options on the given grid.
pub fn account_step(
    batch: &GradientBatch,
    spec: &MechanismSpec,
    alpha_grid: &[f64],
) -> Result<AccountingReport> {
    account_step_with(batch, spec, &AccountingOptions::with_grid(alpha_grid))
}

pub fn account_step_with(
    batch: &GradientBatch,
    spec: &MechanismSpec,
    opts: &AccountingOptions,
) -> Result<AccountingReport> {
    if !batch.is_clipped() {
        let (i, j) = first_unclipped(batch);
        return Err(Error::Precondition(format!(
            "gradient entry ({i}, {j}) = {} exceeds the clip bound {}; clip the batch first",
            batch.per_example[(i, j)],
            batch.clip_bound
        )));
    }
    if opts.alpha_grid.is_empty() {
        return Err(Error::Parameter("alpha grid is empty".into()));
    }
    let k = opts
        .alpha_grid
        .iter()
        .position(|&a| a == opts.designated_alpha)
        .ok_or_else(|| {
            Error::Parameter(format!(
                "designated alpha {} is not on the grid",
                opts.designated_alpha
            ))
        })?;

    let theta = batch.summed();
    let sens = Sensitivity::new(batch.clip_bound)?;
    let account = account_location(&theta, spec, sens, &opts.alpha_grid, opts.rectified_scan)?;

    let mut assumptions = account.assumptions.clone();
    assumptions.push(Assumption::SummedLocation);
    let mut per_example_fil = Vec::with_capacity(batch.n());
    let mut per_example_fil_squared = Vec::with_capacity(batch.n());
    match &batch.jacobians {
        Some(jacobians) => {
            assumptions.push(Assumption::SuppliedJacobian);
            for j in jacobians {
                let f = fil::per_example_fil(&account.etas, j)?;
                per_example_fil.push(f.spectral);
                per_example_fil_squared.push(f.literal_squared);
            }
        }
        None => {
            // Identity Jacobian masked by saturation: the spectral norm is the
            // largest active η, the squared form the sum of active η².
            assumptions.push(Assumption::ClippedSumJacobian);
            for i in 0..batch.n() {
                let active = (0..batch.d()).filter(|&j| !batch.saturated[(i, j)]);
                let (mut max, mut sq) = (0.0f64, 0.0);
                for j in active {
                    let e = account.etas[j];
                    max = max.max(e);
                    sq += e * e;
                }
                per_example_fil.push(max);
                per_example_fil_squared.push(sq);
            }
        }
    }

    Ok(AccountingReport {
        rdp_curve: account.rdp_curve,
        designated_alpha: opts.designated_alpha,
        per_coordinate_epsilon: account.per_alpha[k].clone(),
        per_example_fil,
        per_example_fil_squared,
        assumptions,
        step_count: 1,
    })
}

fn first_unclipped(batch: &GradientBatch) -> (usize, usize) {
    for i in 0..batch.n() {
        for j in 0..batch.d() {
            if batch.per_example[(i, j)].abs() > batch.clip_bound {
                return (i, j);
            }
        }
    }
    (0, 0)
}

/// Composes reports in order: RDP adds per order, per-example FIL adds in
/// the `η²` domain, step counts add.
pub fn run_composition(reports: &[AccountingReport]) -> Result<AccountingReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Parameter("nothing to compose".into()))?;
    for r in &reports[1..] {
        if r.designated_alpha != first.designated_alpha {
            return Err(Error::Shape(
                "reports use different designated orders".into(),
            ));
        }
        if r.per_coordinate_epsilon.len() != first.per_coordinate_epsilon.len()
            || r.per_example_fil.len() != first.per_example_fil.len()
        {
            return Err(Error::Shape("reports cover different shapes".into()));
        }
    }
    let curves: Vec<RdpCurve> = reports.iter().map(|r| r.rdp_curve.clone()).collect();
    let rdp_curve = rdp::compose_rdp(&curves)?;
    let column_sum = |get: &dyn Fn(&AccountingReport) -> &Vec<f64>, len: usize| -> Vec<f64> {
        (0..len)
            .map(|i| {
                let terms: Vec<f64> = reports.iter().map(|r| get(r)[i]).collect();
                pairwise_sum(&terms)
            })
            .collect()
    };
    let n = first.per_example_fil.len();
    let per_coordinate_epsilon = column_sum(
        &|r| &r.per_coordinate_epsilon,
        first.per_coordinate_epsilon.len(),
    );
    let per_example_fil = (0..n)
        .map(|i| {
            let sq: Vec<f64> = reports
                .iter()
                .map(|r| r.per_example_fil[i].powi(2))
                .collect();
            pairwise_sum(&sq).sqrt()
        })
        .collect();
    let per_example_fil_squared = column_sum(&|r| &r.per_example_fil_squared, n);
    let mut assumptions = Vec::new();
    for a in reports.iter().flat_map(|r| &r.assumptions) {
        if !assumptions.contains(a) {
            assumptions.push(*a);
        }
    }
    Ok(AccountingReport {
        rdp_curve,
        designated_alpha: first.designated_alpha,
        per_coordinate_epsilon,
        per_example_fil,
        per_example_fil_squared,
        assumptions,
        step_count: reports.iter().map(|r| r.step_count).sum(),
    })
}

/// JSON form of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub alpha_grid: Vec<Num>,
    pub epsilon_per_alpha: Vec<Num>,
    pub designated_alpha: Num,
    pub per_coordinate_epsilon_at_alpha: Vec<Num>,
    pub per_example_fil: Vec<Num>,
    pub per_example_fil_squared: Vec<Num>,
    pub assumptions: Vec<Assumption>,
    pub step_count: usize,
}

impl AccountingReport {
    pub fn to_json_value(&self) -> ReportJson {
        ReportJson {
            alpha_grid: nums(&self.rdp_curve.alphas()),
            epsilon_per_alpha: nums(&self.rdp_curve.epsilons()),
            designated_alpha: Num(self.designated_alpha),
            per_coordinate_epsilon_at_alpha: nums(&self.per_coordinate_epsilon),
            per_example_fil: nums(&self.per_example_fil),
            per_example_fil_squared: nums(&self.per_example_fil_squared),
            assumptions: self.assumptions.clone(),
            step_count: self.step_count,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: ReportJson = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        let alphas = floats(&r.alpha_grid);
        let eps = floats(&r.epsilon_per_alpha);
        if alphas.len() != eps.len() {
            return Err(Error::Shape(
                "alpha_grid and epsilon_per_alpha differ in length".into(),
            ));
        }
        let points = alphas
            .into_iter()
            .zip(eps)
            .map(|(alpha, epsilon)| RdpPoint { alpha, epsilon })
            .collect();
        Ok(AccountingReport {
            rdp_curve: RdpCurve::new(points)?,
            designated_alpha: r.designated_alpha.0,
            per_coordinate_epsilon: floats(&r.per_coordinate_epsilon_at_alpha),
            per_example_fil: floats(&r.per_example_fil),
            per_example_fil_squared: floats(&r.per_example_fil_squared),
            assumptions: r.assumptions,
            step_count: r.step_count,
        })
    }
}

/// Gradients read from a file, before any clipping.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientFile {
    pub gradients: DMatrix<f64>,
    pub clip_bound: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GradientJson {
    d: usize,
    n: usize,
    #[serde(rename = "C")]
    clip: f64,
    gradients: Vec<Vec<f64>>,
}

/// Parses a gradient file: JSON (`{"d", "n", "C", "gradients"}`) when the
/// first non-blank character is `{`, otherwise text with a header line
/// `d=<int> n=<int> C=<real>` followed by `n` rows of `d` numbers separated by
/// whitespace or commas. Lines starting with `#` are ignored.
pub fn parse_gradient_file(text: &str) -> Result<GradientFile> {
    if text.trim_start().starts_with('{') {
        return parse_gradient_json(text);
    }
    let mut header: Option<(usize, usize, f64)> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        let Some((d, n, _)) = header else {
            header = Some(parse_header(&fields, lineno)?);
            continue;
        };
        let row_no = rows.len() + 1;
        if row_no > n {
            return Err(Error::Parse {
                line: lineno,
                message: format!("row {row_no}: header declares only n = {n} rows"),
            });
        }
        if fields.len() != d {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "row {row_no}: expected d = {d} values, found {}",
                    fields.len()
                ),
            });
        }
        let row = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: lineno,
                        message: format!("row {row_no}: '{f}' is not a finite number"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let (d, n, clip) = header.ok_or(Error::Parse {
        line: 1,
        message: "missing header 'd=<int> n=<int> C=<real>'".into(),
    })?;
    if rows.len() != n {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: format!("header declares n = {n} rows, found {}", rows.len()),
        });
    }
    Ok(GradientFile {
        gradients: DMatrix::from_row_iterator(n, d, rows.into_iter().flatten()),
        clip_bound: clip,
    })
}

fn parse_header(fields: &[&str], lineno: usize) -> Result<(usize, usize, f64)> {
    let bad = |message: String| Error::Parse {
        line: lineno,
        message,
    };
    let (mut d, mut n, mut c) = (None, None, None);
    for f in fields {
        let (k, v) = f
            .split_once('=')
            .ok_or_else(|| bad(format!("header field '{f}' is not key=value")))?;
        match k.trim() {
            "d" => {
                d = Some(
                    v.parse::<usize>()
                        .map_err(|_| bad(format!("bad d '{v}'")))?,
                )
            }
            "n" => {
                n = Some(
                    v.parse::<usize>()
                        .map_err(|_| bad(format!("bad n '{v}'")))?,
                )
            }
            "C" | "c" => c = Some(v.parse::<f64>().map_err(|_| bad(format!("bad C '{v}'")))?),
            other => return Err(bad(format!("unknown header key '{other}'"))),
        }
    }
    let (d, n, c) = match (d, n, c) {
        (Some(d), Some(n), Some(c)) => (d, n, c),
        _ => return Err(bad("header must set d, n and C".into())),
    };
    if d == 0 || n == 0 {
        return Err(bad("header needs d >= 1 and n >= 1".into()));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(bad(format!("clip bound C must be > 0, got {c}")));
    }
    Ok((d, n, c))
}

fn parse_gradient_json(text: &str) -> Result<GradientFile> {
    let g: GradientJson = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    if g.d == 0 || g.n == 0 || !(g.clip.is_finite() && g.clip > 0.0) {
        return Err(Error::Parse {
            line: 1,
            message: "need d >= 1, n >= 1 and C > 0".into(),
        });
    }
    if g.gradients.len() != g.n {
        return Err(Error::Parse {
            line: 1,
            message: format!("n = {} but {} gradient rows", g.n, g.gradients.len()),
        });
    }
    if let Some((i, r)) = g.gradients.iter().enumerate().find(|(_, r)| r.len() != g.d) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "row {}: expected d = {} values, found {}",
                i + 1,
                g.d,
                r.len()
            ),
        });
    }
    Ok(GradientFile {
        gradients: DMatrix::from_row_iterator(g.n, g.d, g.gradients.into_iter().flatten()),
        clip_bound: g.clip,
    })
}

pub fn read_gradient_file(path: &Path) -> Result<GradientFile> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    parse_gradient_file(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.5, -3.0, 0.25, 0.75])
    }

    #[test]
    fn clip_behaviour() {
        let b = clip_linf(&toy(), 1.0).unwrap();
        assert_eq!(b.per_example()[(0, 1)], -1.0);
        assert_eq!(b.per_example()[(0, 0)], 0.5);
        assert!(b.saturated()[(0, 1)] && !b.saturated()[(1, 1)]);
        assert!(b.is_clipped());
        let inside = DMatrix::from_row_slice(1, 2, &[0.2, -0.3]);
        assert_eq!(clip_linf(&inside, 1.0).unwrap().per_example(), &inside);
        assert!(clip_linf(&inside, 0.0).is_err());
    }

    #[test]
    fn unclipped_batch_is_rejected() {
        let b = GradientBatch::new(toy(), 1.0).unwrap();
        let spec = MechanismSpec::gaussian(1.0).unwrap();
        assert!(matches!(
            account_step(&b, &spec, &[2.0]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn gaussian_step_matches_formula() {
        let b = clip_linf(&toy(), 1.0).unwrap();
        let spec = MechanismSpec::gaussian(2.0).unwrap();
        let r = account_step(&b, &spec, &[2.0, 4.0]).unwrap();
        // d α C² / (2σ²)
        assert_eq!(
            r.rdp_curve.epsilons(),
            vec![2.0 * 2.0 / 8.0, 2.0 * 4.0 / 8.0]
        );
        assert_eq!(r.per_coordinate_epsilon, vec![0.25, 0.25]);
        assert_eq!(r.per_example_fil, vec![0.5, 0.5]);
        // Example 0 saturated in coordinate 1.
        assert_eq!(r.per_example_fil_squared, vec![0.25, 0.5]);
    }

    #[test]
    fn composition_scales() {
        let b = clip_linf(&toy(), 1.0).unwrap();
        let spec = MechanismSpec::boxed(MechanismKind::Truncated, 1.0, 1.0).unwrap();
        let r = account_step(&b, &spec, &rdp::DEFAULT_ALPHA_GRID).unwrap();
        let t = run_composition(&[r.clone(), r.clone(), r.clone(), r.clone()]).unwrap();
        assert_eq!(t.step_count, 4);
        for (a, b) in t.rdp_curve.epsilons().iter().zip(r.rdp_curve.epsilons()) {
            assert!((a - 4.0 * b).abs() <= 1e-15 * a.abs());
        }
        for (a, b) in t.per_example_fil.iter().zip(&r.per_example_fil) {
            assert!((a - 2.0 * b).abs() <= 1e-15 * a);
        }
        assert_eq!(run_composition(std::slice::from_ref(&r)).unwrap(), r);
    }

    #[test]
    fn report_json_round_trip() {
        let b = clip_linf(&toy(), 1.0).unwrap();
        let spec = MechanismSpec::boxed(MechanismKind::Rectified, 0.7, 1.0).unwrap();
        let r = account_step(&b, &spec, &rdp::DEFAULT_ALPHA_GRID).unwrap();
        let text = r.to_json();
        let back = AccountingReport::from_json(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), text);
        assert!(text.contains("\"rectified-endpoint-shift\""));
    }

    #[test]
    fn text_file_parsing() {
        let f = parse_gradient_file("# toy\nd=2 n=2 C=1\n0.5 -3\n0.25, 0.75\n").unwrap();
        assert_eq!(f.gradients, toy());
        assert_eq!(f.clip_bound, 1.0);
        let err = parse_gradient_file("d=2 n=2 C=1\n0.5 -3\n0.25 x\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 3,
                message: "row 2: 'x' is not a finite number".into()
            }
        );
        assert!(matches!(
            parse_gradient_file("d=2 n=2 C=1\n1 2 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_gradient_file("d=2 n=3 C=1\n1 2\n").is_err());
        assert!(parse_gradient_file("d=2 C=1\n1 2\n").is_err());
    }

    #[test]
    fn json_file_parsing() {
        let f = parse_gradient_file(
            r#"{"d": 2, "n": 2, "C": 1.0, "gradients": [[0.5, -3], [0.25, 0.75]]}"#,
        )
        .unwrap();
        assert_eq!(f.gradients, toy());
        assert!(parse_gradient_file(
            r#"{"d": 3, "n": 2, "C": 1.0, "gradients": [[0.5, -3], [0.25, 0.75]]}"#
        )
        .is_err());
    }
}
