//! Composes per-step RDP curves and converts the total to (epsilon, delta)-DP.

use bounded_dp::mechanisms::{MechanismKind, MechanismSpec};
use bounded_dp::rdp::{self, RdpCurve, Sensitivity, DEFAULT_ALPHA_GRID};

fn main() -> bounded_dp::Result<()> {
    let sens = Sensitivity::new(1.0)?;
    let delta = 1e-5;
    for kind in MechanismKind::ALL {
        let spec = MechanismSpec::symmetric(kind, 2.0, 1.0)?;
        // One release at location 0.5, repeated for 100 steps.
        let step = RdpCurve::from_fn(&DEFAULT_ALPHA_GRID, |alpha| {
            rdp::per_instance_rdp_scalar(&spec, alpha, 0.5, sens)
        })?;
        let total = rdp::compose_rdp(&vec![step; 100])?;
        let dp = rdp::rdp_to_dp(&total, delta)?;
        println!(
            "{kind:>9}: epsilon = {:.4} at alpha = {} (delta = {delta})",
            dp.epsilon, dp.best_alpha
        );
    }
    Ok(())
}
