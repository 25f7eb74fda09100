//! Embedding, norm-relation and interpolation checks over random networks.

use repu_tik::analysis::{check_embedding, interpolation_check, norm_relation_check, random_feasible_net};
use repu_tik::penalty::PenaltyKind;
use repu_tik::quadrature::QuadratureRule;
use repu_tik::rng::SeedStream;

fn main() -> repu_tik::error::Result<()> {
    let mut rng = SeedStream::new(9).rng("corpus");
    let rule = QuadratureRule::tensor_gauss_legendre(24, 2)?;

    for kind in [PenaltyKind::ExtendedBarron, PenaltyKind::Variation] {
        let mut tightest = 0.0f64;
        let mut failures = 0;
        for _ in 0..50 {
            let net = random_feasible_net(kind, 2, 2, 5, &mut rng)?;
            for m in 0..=2 {
                let c = check_embedding(&net, m, &rule)?;
                tightest = tightest.max(c.sobolev_norm / c.bound.max(f64::MIN_POSITIVE));
                failures += usize::from(!c.passed);
            }
        }
        println!("{kind}: {failures} embedding failures, largest norm/bound {tightest:.3}");
    }

    for d in [2, 4, 8] {
        let nets = (0..200)
            .map(|_| random_feasible_net(PenaltyKind::Variation, d, 2, 4, &mut rng))
            .collect::<Result<Vec<_>, _>>()?;
        let r = norm_relation_check(&nets, 2, d)?;
        println!("d = {d}: max Barron/variation ratio {:.3} (bound {:.1})", r.max_ratio, r.bound);
    }

    let nets = (0..100)
        .map(|_| random_feasible_net(PenaltyKind::ExtendedBarron, 2, 2, 4, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    for m in 0..=2 {
        let r = interpolation_check(&nets, m, 2, &rule)?;
        println!("interpolation m = {m}: K_fit {:.4}  median {:.4}", r.k_fit, r.median);
    }
    Ok(())
}
