//! Private mean estimation: Gaussian against rectified and truncated releases
//! on a small grid. Pass `full` for the default n = 900, d = 100 sweep.

use bounded_dp::experiments::{sweep, MeanEstimationConfig, SweepConfig, SWEEP_CSV_HEADER};

fn main() -> bounded_dp::Result<()> {
    let full = std::env::args().any(|a| a == "full");
    let cfg = if full {
        SweepConfig::default()
    } else {
        SweepConfig {
            base: MeanEstimationConfig {
                n: 200,
                d: 20,
                trials: 2,
                ..Default::default()
            },
            sigmas: vec![0.1, 0.4],
            half_widths: vec![0.5, 1.0],
            mus: vec![0.0, 0.5],
            ..Default::default()
        }
    };
    println!("{SWEEP_CSV_HEADER}");
    for row in sweep(&cfg)? {
        println!("{}", row.csv());
    }
    Ok(())
}
