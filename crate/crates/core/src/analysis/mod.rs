//! Numerical checks of the approximation and regularization theory:
//! embedding constants, Monte Carlo rates, interpolation probes and
//! regularization rate sweeps.

mod constants;
mod embedding;
mod interpolation;
mod mc;
mod norms;
mod rates;

use serde::{Deserialize, Serialize};

pub use constants::{barron_embedding_constant, barron_term, variation_embedding_constant, variation_term};
pub use embedding::{
    check_embedding, dictionary_norm_check, md_lower_bound_probe, random_feasible_net, DictionaryNormRecord,
    EmbeddingCheck, MdProbe,
};
pub use interpolation::{interpolation_check, InterpolationRecord};
pub use mc::{mc_construction, random_atoms, Atom, McMode, McPoint, McReport};
pub use norms::{norm_relation_check, NormRelationRecord};
pub use rates::{rate_sweep, PointFit, RatePoint, RateReport, SweepAxis, SweepSpec};

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Fits `ln y = intercept + slope ln x`. `None` with fewer than two points
/// or when any coordinate is not strictly positive.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Option<SlopeFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some(SlopeFit {
        slope,
        intercept: my - slope * mx,
        points: lx.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglog_recovers_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        let f = fit_loglog(&xs, &ys).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit_loglog(&xs, &[1.0, 0.0, 1.0, 1.0]).is_none());
        assert!(fit_loglog(&[1.0], &[1.0]).is_none());
    }
}
