//! Per-instance privacy curves: FIL and order-2 RDP of every mechanism over a
//! range of locations, support [-1, 1], shift 1.

use bounded_dp::experiments::{privacy_curve, CURVE_CSV_HEADER};
use bounded_dp::mechanisms::{MechanismKind, MechanismSpec};
use bounded_dp::oracles::grid::inclusive_range;

fn main() -> bounded_dp::Result<()> {
    let specs = MechanismKind::ALL
        .iter()
        .map(|&k| MechanismSpec::symmetric(k, 1.0, 1.0))
        .collect::<bounded_dp::Result<Vec<_>>>()?;
    let rows = privacy_curve(&specs, &inclusive_range(-3.0, 3.0, 0.5), 1.0, 2.0)?;
    println!("{CURVE_CSV_HEADER}");
    for r in &rows {
        println!("{}", r.csv());
    }
    Ok(())
}
