//! Draws from each mechanism and compares empirical summaries with their
//! closed forms.

use bounded_dp::experiments::output_mean;
use bounded_dp::mechanisms::{sign_pmf, stream_rng, MechanismKind, MechanismSpec};
use bounded_dp::numerics::normal;

fn main() -> bounded_dp::Result<()> {
    let (theta, sigma, a, draws) = (0.4, 1.0, 1.0, 200_000);
    for (stream, kind) in MechanismKind::ALL.into_iter().enumerate() {
        let spec = MechanismSpec::symmetric(kind, sigma, a)?;
        let mut rng = stream_rng(7, stream as u64);
        let xs = (0..draws)
            .map(|_| spec.sample(theta, &mut rng))
            .collect::<bounded_dp::Result<Vec<f64>>>()?;
        let mean = xs.iter().sum::<f64>() / draws as f64;
        println!(
            "{kind:>9}: empirical mean {mean:+.4}, exact {:+.4}",
            output_mean(&spec, theta)?
        );
        match kind {
            MechanismKind::Rectified => {
                let upper = xs.iter().filter(|&&x| x == a).count() as f64 / draws as f64;
                println!(
                    "           upper atom {upper:.4}, exact {:.4}",
                    normal::cdf((theta - a) / sigma)
                );
            }
            MechanismKind::Sign => {
                let plus = xs.iter().filter(|&&x| x > 0.0).count() as f64 / draws as f64;
                println!(
                    "           P(+1) {plus:.4}, exact {:.4}",
                    sign_pmf(theta, sigma)?.1
                );
            }
            _ => {}
        }
    }
    Ok(())
}
