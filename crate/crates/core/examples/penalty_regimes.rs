//! Fit one dataset under the three penalty regimes and compare what each
//! one trades off.

use repu_tik::datagen::{make_noisy_dataset, make_target, NoiseKind, TargetSpec};
use repu_tik::penalty::{check_constraints, PenaltyKind};
use repu_tik::quadrature::{sobolev_error, QuadratureRule};
use repu_tik::solver::{fit, LambdaRule, OptimizerConfig, TikhonovConfig};

fn main() -> repu_tik::error::Result<()> {
    let target = make_target(&TargetSpec::ReferenceNetwork { k: 2, d: 2, neurons: 5 }, 1)?;
    let bounds = target.known_norm_bounds.expect("network targets carry norm bounds");
    let train = QuadratureRule::lattice(1024, 2, 1, 17)?;
    let data = make_noisy_dataset(&target, &train, 0.01, NoiseKind::L2CalibratedField, 3)?;
    let eval = QuadratureRule::tensor_gauss_legendre(24, 2)?;

    for (kind, rule) in [
        (PenaltyKind::ExtendedBarron, LambdaRule::BarronRule),
        (PenaltyKind::Variation, LambdaRule::VariationRule),
        (PenaltyKind::RadonBV, LambdaRule::RadonBvRule),
    ] {
        let config = TikhonovConfig {
            k: 2,
            penalty: kind,
            n: 32,
            lambda_rule: rule,
            norm_hint: Some(bounds.for_penalty(kind)),
            barron_constant: 1.0,
            delta: None,
            epsilon_target: 1e-4,
            optimizer: OptimizerConfig {
                max_iters: 500,
                restarts: 2,
                reference_factor: 4,
                ..Default::default()
            },
        };
        let r = fit(&data, &config)?;
        println!(
            "{kind:>15}: lambda {:.3e}  penalty {:.3}  L2 err {:.3e}  H1 err {:.3e}  feasible {}  eps {:.1e}",
            r.lambda,
            r.penalty,
            sobolev_error(&r.network, &target, 0, &eval)?,
            sobolev_error(&r.network, &target, 1, &eval)?,
            check_constraints(&r.network, kind).is_ok(),
            r.epsilon_achieved,
        );
    }
    Ok(())
}
