//! Accounts a few noisy gradient-sum releases: clip, account each step,
//! compose, and print the report.

use bounded_dp::accountant::{account_step, clip_linf, run_composition};
use bounded_dp::mechanisms::{stream_rng, MechanismKind, MechanismSpec};
use bounded_dp::rdp::{rdp_to_dp, DEFAULT_ALPHA_GRID};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> bounded_dp::Result<()> {
    let (n, d, clip) = (32, 4, 0.5);
    let spec = MechanismSpec::boxed(MechanismKind::Truncated, 4.0, 2.0)?;
    let mut rng = stream_rng(1, 0);
    let mut steps = Vec::new();
    for _ in 0..10 {
        let raw = DMatrix::from_fn(n, d, |_, j| {
            0.05 * j as f64 + 0.4 * rng.sample::<f64, _>(StandardNormal)
        });
        let batch = clip_linf(&raw, clip)?;
        steps.push(account_step(&batch, &spec, &DEFAULT_ALPHA_GRID)?);
    }
    let total = run_composition(&steps)?;
    let dp = rdp_to_dp(&total.rdp_curve, 1e-5)?;
    println!("{}", total.to_json());
    println!(
        "(epsilon, 1e-5)-DP after {} steps: epsilon = {:.4} at alpha = {}",
        total.step_count, dp.epsilon, dp.best_alpha
    );
    Ok(())
}
