//! Command-line front end. Exit codes: 0 success, 1 oracle violation,
//! 2 usage or input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::accountant::{self, clip_linf, AccountingOptions, GradientBatch};
use crate::error::{Error, Result};
use crate::experiments::{self, MeanEstimationConfig, SweepConfig};
use crate::format::{parse_f64, sig17, Num};
use crate::mechanisms::{MechanismKind, MechanismSpec};
use crate::numerics::QuadratureConfig;
use crate::oracles::grid::{self, FilGrid, GridCheck, RdpGrid, Tolerance};
use crate::rdp::{self, RdpCurve, RdpPoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "bounded-dp",
    version,
    about = "Privacy accounting for bounded Gaussian mechanisms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-instance RDP and FIL over a grid of locations.
    Curves(CurvesArgs),
    /// Account one gradient release (optionally repeated) from a file.
    Account(AccountArgs),
    /// Private mean estimation trade-off sweep.
    MeanEst(MeanEstArgs),
    /// Convert an RDP curve to (epsilon, delta)-DP.
    Convert(ConvertArgs),
    /// Compare closed forms with numerical oracles over the reference grids.
    OracleCheck(OracleCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_kind(s: &str) -> std::result::Result<MechanismKind, String> {
    s.parse::<MechanismKind>().map_err(|e| e.to_string())
}

fn parse_real(s: &str) -> std::result::Result<f64, String> {
    parse_f64(s).ok_or_else(|| format!("'{s}' is not a number"))
}

#[derive(Debug, Args)]
struct CurvesArgs {
    /// Mechanisms to include (default: all).
    #[arg(long = "mechanism", value_parser = parse_kind, value_delimiter = ',')]
    mechanisms: Vec<MechanismKind>,
    /// Noise scales.
    #[arg(long = "sigma", value_parser = parse_real, value_delimiter = ',', default_value = "1")]
    sigmas: Vec<f64>,
    /// Support half-width of the bounded kinds.
    #[arg(long, value_parser = parse_real, default_value = "1")]
    half_width: f64,
    /// Shift size c.
    #[arg(long, value_parser = parse_real, default_value = "1")]
    sensitivity: f64,
    #[arg(long, value_parser = parse_real, default_value = "2")]
    alpha: f64,
    #[arg(long, value_parser = parse_real, default_value = "-3", allow_hyphen_values = true)]
    theta_min: f64,
    #[arg(long, value_parser = parse_real, default_value = "3", allow_hyphen_values = true)]
    theta_max: f64,
    #[arg(long, value_parser = parse_real, default_value = "0.1")]
    theta_step: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct AccountArgs {
    /// Gradient file: text header `d= n= C=` plus rows, or JSON.
    file: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    mechanism: MechanismKind,
    #[arg(long, value_parser = parse_real)]
    sigma: f64,
    /// Support half-width; required for bounded kinds.
    #[arg(long, value_parser = parse_real)]
    half_width: Option<f64>,
    #[arg(long, value_parser = parse_real, value_delimiter = ',')]
    alpha_grid: Option<Vec<f64>>,
    /// Order at which per-coordinate epsilon is reported.
    #[arg(long, value_parser = parse_real, default_value = "2")]
    designated_alpha: f64,
    /// Clip gradients to the file's bound instead of rejecting them.
    #[arg(long)]
    auto_clip: bool,
    /// Shift magnitudes scanned for the rectified kind.
    #[arg(long, default_value_t = 1)]
    rectified_scan: usize,
    /// Compose this many identical steps.
    #[arg(long, default_value_t = 1)]
    steps: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct MeanEstArgs {
    #[arg(long, default_value_t = 900)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    d: usize,
    #[arg(long = "mu", value_parser = parse_real, value_delimiter = ',', allow_hyphen_values = true,
          default_value = "0,0.1,0.2,0.3,0.4,0.5")]
    mus: Vec<f64>,
    #[arg(long = "sigma", value_parser = parse_real, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.4,0.8")]
    sigmas: Vec<f64>,
    #[arg(long = "half-width", value_parser = parse_real, value_delimiter = ',', default_value = "0.25,0.5,1,2")]
    half_widths: Vec<f64>,
    /// Bounded kinds to compare with the Gaussian baseline.
    #[arg(long = "mechanism", value_parser = parse_kind, value_delimiter = ',', default_value = "rectified,truncated")]
    mechanisms: Vec<MechanismKind>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    /// Report JSON from `account`, or CSV rows `alpha,epsilon`.
    file: PathBuf,
    #[arg(long, value_parser = parse_real)]
    delta: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct OracleCheckArgs {
    /// Relative tolerance; the absolute floor scales with it.
    #[arg(long, value_parser = parse_real)]
    tolerance: Option<f64>,
    /// Restrict the RDP grid to one order.
    #[arg(long, value_parser = parse_real)]
    alpha: Option<f64>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Curves(a) => curves(a, out),
        Command::Account(a) => account(a, out),
        Command::MeanEst(a) => mean_est(a, out),
        Command::Convert(a) => convert(a, out),
        Command::OracleCheck(a) => oracle_check(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn emit(text: &str, target: &OutputArgs, out: &mut dyn Write) -> Result<i32> {
    match &target.output {
        Some(path) => std::fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(EXIT_OK)
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn curves(a: CurvesArgs, out: &mut dyn Write) -> Result<i32> {
    if a.theta_step.is_nan() || a.theta_step <= 0.0 || a.theta_max < a.theta_min {
        return Err(Error::Parameter(
            "need theta-step > 0 and theta-max >= theta-min".into(),
        ));
    }
    let kinds = if a.mechanisms.is_empty() {
        MechanismKind::ALL.to_vec()
    } else {
        a.mechanisms
    };
    let mut specs = Vec::new();
    for &sigma in &a.sigmas {
        for &kind in &kinds {
            specs.push(MechanismSpec::symmetric(kind, sigma, a.half_width)?);
        }
    }
    let thetas = grid::inclusive_range(a.theta_min, a.theta_max, a.theta_step);
    let rows = experiments::privacy_curve(&specs, &thetas, a.sensitivity, a.alpha)?;
    let text = match a.format {
        Format::Json => json(&rows),
        Format::Csv => csv(experiments::CURVE_CSV_HEADER, rows.iter().map(|r| r.csv())),
    };
    emit(&text, &a.out, out)
}

fn csv(header: &str, lines: impl Iterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    s
}

fn account(a: AccountArgs, out: &mut dyn Write) -> Result<i32> {
    let file = accountant::read_gradient_file(&a.file)?;
    let spec = if a.mechanism.is_bounded() {
        let hw = a.half_width.ok_or_else(|| {
            Error::Parameter(format!(
                "--half-width is required for the {} mechanism",
                a.mechanism
            ))
        })?;
        MechanismSpec::boxed(a.mechanism, a.sigma, hw)?
    } else {
        MechanismSpec::boxed(a.mechanism, a.sigma, 1.0)?
    };
    let batch = if a.auto_clip {
        clip_linf(&file.gradients, file.clip_bound)?
    } else {
        GradientBatch::new(file.gradients, file.clip_bound)?
    };
    if a.steps == 0 {
        return Err(Error::Parameter("--steps must be >= 1".into()));
    }
    let opts = AccountingOptions {
        alpha_grid: a
            .alpha_grid
            .unwrap_or_else(|| rdp::DEFAULT_ALPHA_GRID.to_vec()),
        designated_alpha: a.designated_alpha,
        rectified_scan: a.rectified_scan.max(1),
    };
    let step = accountant::account_step_with(&batch, &spec, &opts)?;
    let report = accountant::run_composition(&vec![step; a.steps])?;
    let text = match a.format {
        Format::Json => report.to_json(),
        Format::Csv => curve_csv(&report.rdp_curve),
    };
    emit(&text, &a.out, out)
}

fn curve_csv(curve: &RdpCurve) -> String {
    csv(
        "alpha,epsilon",
        curve
            .points()
            .iter()
            .map(|p| format!("{},{}", sig17(p.alpha), sig17(p.epsilon))),
    )
}

fn mean_est(a: MeanEstArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = SweepConfig {
        base: MeanEstimationConfig {
            n: a.n,
            d: a.d,
            trials: a.trials,
            seed: a.seed,
            ..Default::default()
        },
        kinds: a.mechanisms,
        sigmas: a.sigmas,
        half_widths: a.half_widths,
        mus: a.mus,
    };
    let rows = experiments::sweep(&cfg)?;
    let text = match a.format {
        Format::Json => json(&rows),
        Format::Csv => csv(experiments::SWEEP_CSV_HEADER, rows.iter().map(|r| r.csv())),
    };
    emit(&text, &a.out, out)
}

/// Reads an RDP curve from report JSON or `alpha,epsilon` CSV.
pub fn read_curve(path: &Path) -> Result<RdpCurve> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        return Ok(accountant::AccountingReport::from_json(&text)?.rdp_curve);
    }
    let mut points = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (idx == 0 && line.starts_with("alpha")) {
            continue;
        }
        let bad = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let (a, e) = line
            .split_once(',')
            .ok_or_else(|| bad(format!("expected 'alpha,epsilon', found '{line}'")))?;
        let alpha = parse_f64(a).ok_or_else(|| bad(format!("bad alpha '{a}'")))?;
        let epsilon = parse_f64(e).ok_or_else(|| bad(format!("bad epsilon '{e}'")))?;
        points.push(RdpPoint { alpha, epsilon });
    }
    RdpCurve::new(points)
}

#[derive(Serialize)]
struct ConvertJson {
    delta: Num,
    epsilon: Num,
    best_alpha: Num,
}

fn convert(a: ConvertArgs, out: &mut dyn Write) -> Result<i32> {
    let curve = read_curve(&a.file)?;
    let dp = rdp::rdp_to_dp(&curve, a.delta)?;
    let text = match a.format {
        Format::Json => json(&ConvertJson {
            delta: Num(a.delta),
            epsilon: Num(dp.epsilon),
            best_alpha: Num(dp.best_alpha),
        }),
        Format::Csv => format!(
            "delta,epsilon,best_alpha\n{},{},{}\n",
            sig17(a.delta),
            sig17(dp.epsilon),
            sig17(dp.best_alpha)
        ),
    };
    emit(&text, &a.out, out)
}

fn oracle_check(a: OracleCheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (rdp_tol, fil_tol) = match a.tolerance {
        Some(t) if t >= 0.0 => (
            Tolerance {
                abs: t * 1e-2,
                rel: t,
            },
            Tolerance { abs: 0.0, rel: t },
        ),
        Some(t) => return Err(Error::Parameter(format!("tolerance must be >= 0, got {t}"))),
        None => (Tolerance::RDP, Tolerance::FIL),
    };
    let mut rdp_grid = RdpGrid::default();
    if let Some(alpha) = a.alpha {
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(Error::Parameter(format!(
                "--alpha must be finite and > 1, got {alpha}"
            )));
        }
        rdp_grid.alphas = vec![alpha];
    }
    let cfg = QuadratureConfig::default();
    let fil_grid = FilGrid::default();
    let checks: Vec<GridCheck> = vec![
        grid::check_rdp(MechanismKind::Rectified, &rdp_grid, rdp_tol, &cfg)?,
        grid::check_rdp(MechanismKind::Truncated, &rdp_grid, rdp_tol, &cfg)?,
        grid::check_fil(MechanismKind::Rectified, &fil_grid, fil_tol, &cfg)?,
        grid::check_fil(MechanismKind::Truncated, &fil_grid, fil_tol, &cfg)?,
        grid::check_fil(MechanismKind::Sign, &fil_grid, fil_tol, &cfg)?,
    ];
    let mut failed = false;
    for c in &checks {
        writeln!(
            out,
            "{} {}",
            if c.passed() { "PASS" } else { "FAIL" },
            c.summary()
        )?;
    }
    for c in &checks {
        for v in c.violations() {
            failed = true;
            writeln!(
                out,
                "violation {}: {} closed={} oracle={} |dev|={:.3e} allowed={:.3e}",
                c.formula,
                v.params,
                sig17(v.closed_form),
                sig17(v.oracle),
                v.deviation(),
                v.allowed
            )?;
        }
    }
    if failed {
        writeln!(err, "oracle check failed")?;
        Ok(EXIT_VIOLATION)
    } else {
        Ok(EXIT_OK)
    }
}
