//! A small noise-level sweep for the extended Barron scheme, with slope fits
//! and bound ratios per Sobolev order.

use repu_tik::analysis::{rate_sweep, SweepAxis, SweepSpec};
use repu_tik::datagen::{NoiseKind, TargetSpec};
use repu_tik::penalty::PenaltyKind;
use repu_tik::quadrature::RuleKind;
use repu_tik::solver::{LambdaRule, OptimizerConfig, TikhonovConfig};

fn main() -> repu_tik::error::Result<()> {
    let spec = SweepSpec {
        axis: SweepAxis::Delta,
        grid: vec![1e-3, 1e-2, 1e-1],
        target: TargetSpec::ReferenceNetwork { k: 2, d: 2, neurons: 5 },
        target_seed: 1,
        tikhonov: TikhonovConfig {
            k: 2,
            penalty: PenaltyKind::ExtendedBarron,
            n: 32,
            lambda_rule: LambdaRule::BarronRule,
            norm_hint: None,
            barron_constant: 1.0,
            delta: None,
            epsilon_target: 0.0,
            optimizer: OptimizerConfig {
                max_iters: 500,
                restarts: 2,
                ..Default::default()
            },
        },
        delta: 0.0,
        training_rule: RuleKind::Lattice { n: 1024, shifts: 1, seed: 17 },
        eval_rule: None,
        noise: NoiseKind::L2CalibratedField,
        noise_seed: 3,
        m_max: None,
    };
    let report = rate_sweep(&spec)?;
    for p in &report.points {
        match &p.fit {
            Some(f) => {
                let errs: Vec<String> = f.errors.iter().map(|e| format!("{:.3e}", e.value)).collect();
                println!("delta {:.0e}: lambda {:.3e}, errors {errs:?}", p.delta, f.lambda);
            }
            None => println!("delta {:.0e}: failed ({})", p.delta, p.failure.as_deref().unwrap_or("?")),
        }
    }
    for (m, s) in report.slopes.iter().enumerate() {
        if let Some(s) = s {
            println!("m = {m}: slope {:.3} (theory {:.3})", s.slope, report.exponents[m]);
        }
    }
    Ok(())
}
