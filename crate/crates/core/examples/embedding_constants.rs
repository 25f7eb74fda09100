//! Embedding constants for both penalty classes and the M(d) lower-bound
//! probe, as a table.

use repu_tik::analysis::{barron_embedding_constant, md_lower_bound_probe, variation_embedding_constant};
use repu_tik::quadrature::QuadratureRule;

fn main() -> repu_tik::error::Result<()> {
    let k = 2;
    println!("{:>4} {:>3} {:>12} {:>12}", "d", "m", "C(d,m,k)", "c~(d,m,k)");
    for d in [1, 2, 4, 8, 16] {
        for m in 0..=k {
            println!(
                "{d:>4} {m:>3} {:>12.4} {:>12.4}",
                barron_embedding_constant(d, m, k)?,
                variation_embedding_constant(d, m, k)?
            );
        }
    }

    // p = (x1 - 1/2)^k depends on x1 only, so a 1-D rule is exact.
    let rule = QuadratureRule::tensor_gauss_legendre(k as usize + 1, 1)?;
    println!("\n{:>4} {:>12} {:>14}", "d", "probe", "probe * d^k/2");
    for d in [2, 4, 8, 16, 30] {
        let p = md_lower_bound_probe(d, k, &rule)?;
        println!("{d:>4} {:>12.5} {:>14.5}", p.value, p.value * (d as f64).powf(k as f64 / 2.0));
    }
    Ok(())
}
