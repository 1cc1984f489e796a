//! Privacy curves over a location grid and the private mean estimation
//! trade-off study.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accountant::account_location;
use crate::error::{ensure_positive, Error, Result};
use crate::fil;
use crate::format::Num;
use crate::mechanisms::{stream_rng, MechanismKind, MechanismSpec};
use crate::numerics::normal;
use crate::numerics::pairwise_sum;
use crate::rdp::{self, Sensitivity};

/// One point of a privacy curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub mechanism: MechanismKind,
    pub sigma: Num,
    /// Absent for unbounded kinds.
    pub half_width: Option<Num>,
    pub theta: Num,
    pub eta: Num,
    /// `D_α(M(θ) ‖ M(θ + c))`.
    pub epsilon: Num,
}

pub const CURVE_CSV_HEADER: &str = "mechanism,sigma,half_width,theta,eta,epsilon";

impl CurveRow {
    pub fn csv(&self) -> String {
        let hw = self
            .half_width
            .map(|n| crate::format::sig17(n.0))
            .unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.mechanism,
            crate::format::sig17(self.sigma.0),
            hw,
            crate::format::sig17(self.theta.0),
            crate::format::sig17(self.eta.0),
            crate::format::sig17(self.epsilon.0)
        )
    }
}

/// `(θ, η, ε)` for every spec and location, with ε the order-`alpha`
/// divergence between the outputs at `θ` and `θ + c`.
pub fn privacy_curve(
    specs: &[MechanismSpec],
    thetas: &[f64],
    c: f64,
    alpha: f64,
) -> Result<Vec<CurveRow>> {
    if specs.is_empty() || thetas.is_empty() {
        return Err(Error::Parameter(
            "privacy curve needs at least one spec and one location".into(),
        ));
    }
    let mut rows = Vec::with_capacity(specs.len() * thetas.len());
    for spec in specs {
        let half_width = spec.interval().and_then(|s| s.half_width()).map(Num);
        for &theta in thetas {
            rows.push(CurveRow {
                mechanism: spec.kind(),
                sigma: Num(spec.sigma()),
                half_width,
                theta: Num(theta),
                eta: Num(fil::eta_for(spec, theta)?),
                epsilon: Num(rdp::divergence(spec, alpha, theta, theta + c)?),
            });
        }
    }
    Ok(rows)
}

/// Setup of one mean estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanEstimationConfig {
    pub n: usize,
    pub d: usize,
    /// True mean, shared by all coordinates.
    pub mu: f64,
    /// Noise standard deviation on the averaged query.
    pub sigma_noise: f64,
    /// Support box half-width for bounded kinds.
    pub half_width: f64,
    /// Data are clipped to `[-data_clip, data_clip]` before averaging.
    pub data_clip: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for MeanEstimationConfig {
    fn default() -> Self {
        MeanEstimationConfig {
            n: 900,
            d: 100,
            mu: 0.0,
            sigma_noise: 0.1,
            half_width: 1.0,
            data_clip: 1.0,
            trials: 5,
            seed: 0,
        }
    }
}

impl MeanEstimationConfig {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.trials == 0 {
            return Err(Error::Parameter("n, d and trials must be >= 1".into()));
        }
        if !self.mu.is_finite() {
            return Err(Error::Domain(format!("mu must be finite, got {}", self.mu)));
        }
        ensure_positive("sigma", self.sigma_noise)?;
        ensure_positive("half-width", self.half_width)?;
        ensure_positive("data clip", self.data_clip)
    }

    /// Replace-one sensitivity of the clipped average.
    pub fn sensitivity(&self) -> f64 {
        2.0 * self.data_clip / self.n as f64
    }
}

/// Averaged outcome of one mechanism over all trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffRecord {
    pub kind: MechanismKind,
    /// `E‖μ̂ − μ‖²` averaged over trials.
    pub mse: f64,
    /// Total per-instance RDP at order 2, averaged over trials.
    pub rdp2_epsilon: f64,
    /// Largest per-example FIL, averaged over trials.
    pub max_fil: f64,
    /// Median per-example FIL, averaged over trials.
    pub median_fil: f64,
    /// Mean `|E[M(x̄_j)] − x̄_j|` over coordinates and trials.
    pub biasedness: f64,
}

/// Data of one trial: coordinate means and the per-example clip mask.
struct TrialData {
    means: Vec<f64>,
    /// `active[i * d + j]`: example `i` was not clipped in coordinate `j`.
    active: Vec<bool>,
    /// Generator positioned after the data draws; noise continues from here.
    noise_rng: rand_chacha::ChaCha20Rng,
}

fn draw_trial(cfg: &MeanEstimationConfig, trial: usize) -> TrialData {
    let mut rng = stream_rng(cfg.seed, trial as u64);
    let mut sums = vec![Vec::with_capacity(cfg.n); cfg.d];
    let mut active = Vec::with_capacity(cfg.n * cfg.d);
    for _ in 0..cfg.n {
        for col in sums.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            let x = cfg.mu + z;
            active.push(x.abs() <= cfg.data_clip);
            col.push(x.clamp(-cfg.data_clip, cfg.data_clip));
        }
    }
    let means = sums
        .iter()
        .map(|c| pairwise_sum(c) / cfg.n as f64)
        .collect();
    TrialData {
        means,
        active,
        noise_rng: rng,
    }
}

fn mechanism(kind: MechanismKind, cfg: &MeanEstimationConfig) -> Result<MechanismSpec> {
    MechanismSpec::boxed(kind, cfg.sigma_noise, cfg.half_width)
}

/// Runs `cfg.trials` trials of `kind`. Trial `t` draws its data and noise
/// from stream `t` of `cfg.seed`, so all kinds see the same data.
pub fn run_mean_estimation(
    cfg: &MeanEstimationConfig,
    kind: MechanismKind,
) -> Result<TradeoffRecord> {
    cfg.validate()?;
    let trials: Vec<TrialData> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| draw_trial(cfg, t))
        .collect();
    evaluate(cfg, kind, &trials)
}

fn evaluate(
    cfg: &MeanEstimationConfig,
    kind: MechanismKind,
    trials: &[TrialData],
) -> Result<TradeoffRecord> {
    let spec = mechanism(kind, cfg)?;
    let sens = Sensitivity::new(cfg.sensitivity())?;
    let inv_n = 1.0 / cfg.n as f64;
    let (mut mse, mut eps, mut max_fil, mut median_fil, mut bias) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for trial in trials {
        let mut rng = trial.noise_rng.clone();
        let release = spec.sample_vector(&trial.means, &mut rng)?;
        let sq: Vec<f64> = release.iter().map(|r| (r - cfg.mu).powi(2)).collect();
        mse += pairwise_sum(&sq);

        let account = account_location(&trial.means, &spec, sens, &[2.0], 1)?;
        eps += account.rdp_curve.epsilons()[0];

        // Per-example Jacobian of the average is I/n with zero rows where the
        // example was clipped.
        let mut fils: Vec<f64> = trial
            .active
            .chunks(cfg.d)
            .map(|row| {
                row.iter()
                    .zip(&account.etas)
                    .filter(|(a, _)| **a)
                    .fold(0.0f64, |m, (_, e)| m.max(*e))
                    * inv_n
            })
            .collect();
        fils.sort_by(f64::total_cmp);
        max_fil += fils[fils.len() - 1];
        median_fil += median_sorted(&fils);

        let dev: Vec<f64> = trial
            .means
            .iter()
            .map(|&t| output_mean(&spec, t).map(|m| (m - t).abs()))
            .collect::<Result<_>>()?;
        bias += pairwise_sum(&dev) / cfg.d as f64;
    }
    let k = trials.len() as f64;
    Ok(TradeoffRecord {
        kind,
        mse: mse / k,
        rdp2_epsilon: eps / k,
        max_fil: max_fil / k,
        median_fil: median_fil / k,
        biasedness: bias / k,
    })
}

fn median_sorted(v: &[f64]) -> f64 {
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// `E[M(θ)]` of a scalar release.
pub fn output_mean(spec: &MechanismSpec, theta: f64) -> Result<f64> {
    let sigma = spec.sigma();
    Ok(match spec.kind() {
        MechanismKind::Gaussian => theta,
        MechanismKind::Sign => 2.0 * normal::cdf(theta / sigma) - 1.0,
        MechanismKind::Rectified => {
            let s = spec.interval().expect("bounded kind");
            let za = (s.lower() - theta) / sigma;
            let zb = (s.upper() - theta) / sigma;
            s.lower() * normal::cdf(za)
                + s.upper() * normal::cdf(-zb)
                + theta * normal::interval_mass(za, zb)
                + sigma * (normal::pdf(za) - normal::pdf(zb))
        }
        MechanismKind::Truncated => {
            let s = spec.interval().expect("bounded kind");
            let za = (s.lower() - theta) / sigma;
            let zb = (s.upper() - theta) / sigma;
            let lz = normal::log_interval_mass(za, zb);
            let shift = (normal::log_pdf(za) - lz).exp() - (normal::log_pdf(zb) - lz).exp();
            (theta + sigma * shift).clamp(s.lower(), s.upper())
        }
    })
}

/// Grid of the trade-off sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: MeanEstimationConfig,
    pub kinds: Vec<MechanismKind>,
    pub sigmas: Vec<f64>,
    pub half_widths: Vec<f64>,
    pub mus: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            base: MeanEstimationConfig::default(),
            kinds: vec![MechanismKind::Rectified, MechanismKind::Truncated],
            sigmas: vec![0.05, 0.1, 0.2, 0.4, 0.8],
            half_widths: vec![0.25, 0.5, 1.0, 2.0],
            mus: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }
}

/// One sweep cell compared against the Gaussian baseline at the same σ and μ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mechanism: MechanismKind,
    pub sigma: Num,
    pub half_width: Option<Num>,
    pub mu: Num,
    pub mse: Num,
    pub eps_alpha2: Num,
    pub eps_ratio_vs_gaussian: Num,
    /// `(mse − mse_gaussian) / mse_gaussian`.
    pub mse_change_vs_gaussian: Num,
    pub max_fil: Num,
    pub median_fil: Num,
    pub biasedness: Num,
}

pub const SWEEP_CSV_HEADER: &str =
    "mechanism,sigma,half_width,mu,mse,eps_alpha2,eps_ratio_vs_gaussian,mse_change_vs_gaussian,max_fil,median_fil,biasedness";

impl SweepRow {
    pub fn csv(&self) -> String {
        use crate::format::sig17;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.mechanism,
            sig17(self.sigma.0),
            self.half_width.map(|h| sig17(h.0)).unwrap_or_default(),
            sig17(self.mu.0),
            sig17(self.mse.0),
            sig17(self.eps_alpha2.0),
            sig17(self.eps_ratio_vs_gaussian.0),
            sig17(self.mse_change_vs_gaussian.0),
            sig17(self.max_fil.0),
            sig17(self.median_fil.0),
            sig17(self.biasedness.0)
        )
    }
}

/// Runs every `(μ, σ, a, kind)` cell plus a Gaussian row per `(μ, σ)`.
/// Rows are ordered by μ, then σ, then the Gaussian row, then kind and a.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &mu in &cfg.mus {
        let base = MeanEstimationConfig {
            mu,
            ..cfg.base.clone()
        };
        base.validate()?;
        let trials: Vec<TrialData> = (0..base.trials)
            .into_par_iter()
            .map(|t| draw_trial(&base, t))
            .collect();
        for &sigma in &cfg.sigmas {
            let at_sigma = MeanEstimationConfig {
                sigma_noise: sigma,
                ..base.clone()
            };
            let gauss = evaluate(&at_sigma, MechanismKind::Gaussian, &trials)?;
            rows.push(row(&gauss, &gauss, sigma, None, mu));
            let cells: Vec<(MechanismKind, f64)> = cfg
                .kinds
                .iter()
                .filter(|k| k.is_bounded())
                .flat_map(|&k| cfg.half_widths.iter().map(move |&a| (k, a)))
                .collect();
            let recs = cells
                .par_iter()
                .map(|&(kind, a)| {
                    let c = MeanEstimationConfig {
                        half_width: a,
                        ..at_sigma.clone()
                    };
                    evaluate(&c, kind, &trials).map(|r| row(&r, &gauss, sigma, Some(a), mu))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.extend(recs);
        }
    }
    Ok(rows)
}

fn row(
    r: &TradeoffRecord,
    gauss: &TradeoffRecord,
    sigma: f64,
    a: Option<f64>,
    mu: f64,
) -> SweepRow {
    SweepRow {
        mechanism: r.kind,
        sigma: Num(sigma),
        half_width: a.map(Num),
        mu: Num(mu),
        mse: Num(r.mse),
        eps_alpha2: Num(r.rdp2_epsilon),
        eps_ratio_vs_gaussian: Num(r.rdp2_epsilon / gauss.rdp2_epsilon),
        mse_change_vs_gaussian: Num((r.mse - gauss.mse) / gauss.mse),
        max_fil: Num(r.max_fil),
        median_fil: Num(r.median_fil),
        biasedness: Num(r.biasedness),
    }
}

/// Smallest ε ratio of `kind` at `mu` among cells whose |MSE change| is
/// within `mse_tolerance`, or 1 (the Gaussian itself) if none qualifies.
pub fn best_ratio(rows: &[SweepRow], kind: MechanismKind, mu: f64, mse_tolerance: f64) -> f64 {
    rows.iter()
        .filter(|r| {
            r.mechanism == kind && r.mu.0 == mu && r.mse_change_vs_gaussian.0.abs() <= mse_tolerance
        })
        .map(|r| r.eps_ratio_vs_gaussian.0)
        .fold(1.0, f64::min)
}
