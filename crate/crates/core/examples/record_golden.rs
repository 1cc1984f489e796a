//! Computes reference values with the numerical oracles and writes the golden
//! table used by the regression tests. Quadrature values for a few cells are
//! cross-checked by Monte-Carlo before writing.
//!
//! Usage: `record_golden [PATH]` (default: the crate's tests/fixtures/golden.tsv).

use std::path::PathBuf;

use bounded_dp::mechanisms::{MechanismKind, MechanismSpec, SupportInterval};
use bounded_dp::numerics::QuadratureConfig;
use bounded_dp::oracles::{
    monte_carlo_renyi, oracle_fisher, oracle_quantized_fisher, oracle_renyi, oracle_renyi_multidim,
    write_golden_table, GoldenEntry, OracleResult,
};

fn entry(name: &str, params: String, r: OracleResult) -> GoldenEntry {
    GoldenEntry {
        name: name.into(),
        params,
        value: r.value,
        error_bound: r.error_bound,
        method: r.method,
    }
}

fn main() -> bounded_dp::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden.tsv")
        });
    let cfg = QuadratureConfig::default();
    let mut entries = Vec::new();

    for kind in [
        MechanismKind::Rectified,
        MechanismKind::Truncated,
        MechanismKind::Sign,
    ] {
        for &(alpha, theta, c, sigma, a) in &[
            (2.0, 0.0, 1.0, 1.0, 1.0),
            (2.0, 2.0, 1.0, 1.0, 1.0),
            (1.5, -0.75, 0.5, 0.5, 1.0),
            (8.0, 1.25, 0.1, 2.0, 0.5),
            (32.0, -3.0, 1.0, 0.5, 2.0),
            (64.0, 3.0, 1.0, 0.5, 0.5),
        ] {
            let spec = MechanismSpec::symmetric(kind, sigma, a)?;
            let r = oracle_renyi(&spec, theta, theta + c, alpha, &cfg)?;
            entries.push(entry(
                &format!("renyi_{kind}"),
                format!("alpha={alpha},theta={theta},c={c},sigma={sigma},a={a}"),
                r,
            ));
        }
        for &(theta, sigma, a) in &[
            (0.0, 1.0, 1.0),
            (0.5, 0.5, 1.0),
            (2.0, 1.0, 1.0),
            (3.5, 0.5, 2.0),
            (-4.0, 0.5, 0.5),
        ] {
            let spec = MechanismSpec::symmetric(kind, sigma, a)?;
            let r = oracle_fisher(&spec, theta, &cfg)?;
            entries.push(entry(
                &format!("eta2_{kind}"),
                format!("theta={theta},sigma={sigma},a={a}"),
                r,
            ));
        }
    }

    for &(theta, sigma, k) in &[(0.0, 1.0, 4usize), (0.5, 0.5, 16), (2.0, 1.0, 256)] {
        let r = oracle_quantized_fisher(theta, sigma, SupportInterval::symmetric(1.0)?, k)?;
        entries.push(entry(
            "eta2_quantized",
            format!("theta={theta},sigma={sigma},a=1,k={k}"),
            r,
        ));
    }

    for (kind, theta, theta_prime) in [
        (MechanismKind::Rectified, vec![0.2, -0.7], vec![1.0, 0.1]),
        (
            MechanismKind::Truncated,
            vec![0.5, 1.5, -1.0],
            vec![-0.2, 1.1, -0.4],
        ),
    ] {
        let spec = MechanismSpec::boxed(kind, 1.0, 1.0)?;
        let r = oracle_renyi_multidim(&spec, &theta, &theta_prime, 2.0, &cfg)?;
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        entries.push(entry(
            &format!("renyi_box_{kind}"),
            format!(
                "alpha=2,theta={},theta_prime={},sigma=1,a=1",
                join(&theta),
                join(&theta_prime)
            ),
            r,
        ));
    }

    for (kind, seed) in [
        (MechanismKind::Rectified, 11),
        (MechanismKind::Truncated, 12),
    ] {
        let spec = MechanismSpec::symmetric(kind, 1.0, 1.0)?;
        let quad = oracle_renyi(&spec, 0.0, 1.0, 2.0, &cfg)?;
        let mc = monte_carlo_renyi(&spec, 0.0, 1.0, 2.0, 2_000_000, seed)?;
        let z = (mc.value - quad.value).abs() / mc.error_bound;
        eprintln!(
            "{kind}: quadrature {:.10}, Monte-Carlo {:.10} +- {:.1e} ({z:.2} SE)",
            quad.value, mc.value, mc.error_bound
        );
        if z > 4.0 {
            return Err(bounded_dp::Error::Consistency(format!(
                "{kind}: Monte-Carlo disagrees by {z:.1} SE"
            )));
        }
        entries.push(entry(
            &format!("renyi_{kind}"),
            "alpha=2,theta=0,c=1,sigma=1,a=1".into(),
            mc,
        ));
    }

    let file = std::fs::File::create(&path)?;
    write_golden_table(std::io::BufWriter::new(file), &entries)?;
    eprintln!("wrote {} entries to {}", entries.len(), path.display());
    Ok(())
}
