//! Fisher information loss: per-mechanism η, the quantized limit, and a
//! closed-form FIM checked against the finite-difference oracle.

use bounded_dp::fil::{assemble_fim, eta_for, eta_quantized, eta_rectified};
use bounded_dp::mechanisms::{MechanismKind, MechanismSpec, SupportInterval};
use bounded_dp::numerics::QuadratureConfig;
use bounded_dp::oracles::oracle_fim_finite_difference;
use nalgebra::DMatrix;

fn main() -> bounded_dp::Result<()> {
    for kind in MechanismKind::ALL {
        let spec = MechanismSpec::symmetric(kind, 1.0, 1.0)?;
        let etas: Vec<String> = [0.0, 1.0, 2.0]
            .iter()
            .map(|&t| eta_for(&spec, t).map(|e| format!("{e:.4}")))
            .collect::<bounded_dp::Result<_>>()?;
        println!("{kind:>9}: eta at theta = 0, 1, 2 -> {}", etas.join(", "));
    }

    let support = SupportInterval::symmetric(1.0)?;
    let limit = eta_rectified(0.5, 1.0, support)?;
    for bits in [2, 4, 8, 16] {
        let q = eta_quantized(0.5, 1.0, support, 1 << bits)?;
        println!("{bits:>2}-bit quantizer: eta {q:.6} (rectified {limit:.6})");
    }

    // Two examples with two features each, released as the column sums.
    let spec = MechanismSpec::boxed(MechanismKind::Rectified, 1.0, 1.0)?;
    let data = DMatrix::from_row_slice(2, 2, &[0.3, -0.2, 0.1, 0.4]);
    let sums = |x: &DMatrix<f64>| x.row_sum().iter().copied().collect::<Vec<f64>>();
    let theta = sums(&data);
    let etas = theta
        .iter()
        .map(|&t| eta_for(&spec, t))
        .collect::<bounded_dp::Result<Vec<f64>>>()?;
    // d(sum_j)/d(x_ij) in row-major order of the flattened dataset.
    let jacobian = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
    let closed = assemble_fim(&etas, &jacobian)?;
    let oracle = oracle_fim_finite_difference(&spec, sums, &data, &QuadratureConfig::default())?;
    println!("closed-form FIM:\n{}", closed.matrix());
    println!(
        "finite-difference FIM (error bound {:.1e}):\n{}",
        oracle.error_bound, oracle.matrix
    );
    println!("FIL = {:.6}", closed.fil());
    Ok(())
}
