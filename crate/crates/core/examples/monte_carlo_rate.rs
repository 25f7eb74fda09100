//! Sample n-neuron networks from a ten-atom measure and watch the L2 error
//! decay like n^{-1/2}, below the theoretical ceiling.

use repu_tik::analysis::{mc_construction, random_atoms, McMode};
use repu_tik::quadrature::QuadratureRule;

fn main() -> repu_tik::error::Result<()> {
    let atoms = random_atoms(10, 2, 42);
    let rule = QuadratureRule::tensor_gauss_legendre(24, 2)?;
    let ns: Vec<usize> = (4..=10).map(|e| 1 << e).collect();
    for mode in [McMode::Variation, McMode::Barron] {
        let r = mc_construction(&atoms, mode, 2, &ns, 200, &rule, 1)?;
        println!("{mode:?} mode");
        for p in &r.points {
            println!(
                "  n = {:>5}  E|f-f_n|^2 = {:.3e} +- {:.1e}  exact {:.3e}  ceiling {:.3e}",
                p.n, p.mean_sq_error, p.std_error, p.expected_sq_error, p.ceiling
            );
        }
        if let Some(s) = r.slope {
            println!("  slope of rms error vs n: {:.3}", s.slope);
        }
    }
    Ok(())
}
