//! Recover a function and its gradient from noisy samples with an extended
//! Barron penalty, then compare against the exact derivatives.

use repu_tik::datagen::{make_noisy_dataset, make_target, NoiseKind, TargetSpec};
use repu_tik::network::MultiIndex;
use repu_tik::penalty::PenaltyKind;
use repu_tik::quadrature::{sobolev_error, QuadratureRule};
use repu_tik::solver::{differentiate, fit, LambdaRule, OptimizerConfig, TikhonovConfig};
use repu_tik::field::SmoothField;

fn main() -> repu_tik::error::Result<()> {
    let spec = TargetSpec::ReferenceNetwork { k: 2, d: 2, neurons: 4 };
    let target = make_target(&spec, 7)?;
    let train = QuadratureRule::lattice(1024, 2, 1, 0)?;
    let data = make_noisy_dataset(&target, &train, 0.01, NoiseKind::L2CalibratedField, 3)?;

    let config = TikhonovConfig {
        k: 2,
        penalty: PenaltyKind::ExtendedBarron,
        n: 64,
        lambda_rule: LambdaRule::BarronRule,
        norm_hint: target.known_norm_bounds.map(|b| b.barron_upper),
        barron_constant: 1.0,
        delta: None,
        epsilon_target: 0.0,
        optimizer: OptimizerConfig {
            max_iters: 600,
            restarts: 2,
            ..Default::default()
        },
    };
    let report = fit(&data, &config)?;
    println!(
        "lambda {:.3e}  objective {:.3e}  fidelity {:.3e}  penalty {:.3}",
        report.lambda, report.objective, report.fidelity, report.penalty
    );

    let eval = QuadratureRule::tensor_gauss_legendre(24, 2)?;
    for m in 0..=2 {
        println!("H^{m} error {:.4e}", sobolev_error(&report.network, &target, m, &eval)?);
    }

    let points = vec![vec![0.25, 0.25], vec![0.5, 0.75], vec![0.9, 0.1]];
    let alphas = vec![MultiIndex::unit(2, 0), MultiIndex::unit(2, 1)];
    let grads = differentiate(&report.network, &points, &alphas)?;
    for (x, g) in points.iter().zip(&grads) {
        let exact: Vec<f64> = alphas.iter().map(|a| target.derivative(a, x)).collect();
        println!("x = {x:?}  fitted grad {g:.4?}  exact {exact:.4?}");
    }
    Ok(())
}
