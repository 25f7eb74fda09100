//! Penalty-level comparison of the extended Barron and variation norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{RepuNetwork, Scaling};
use crate::penalty::{check_constraints, penalty_value, PenaltyKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRelationRecord {
    pub k: u32,
    pub d: usize,
    /// `2^k d^{k/2}`.
    pub bound: f64,
    /// Barron penalty of the mean-field form over `sum |a_i|`; `None` for
    /// networks with zero variation penalty.
    pub ratios: Vec<Option<f64>>,
    pub max_ratio: f64,
    pub violations: usize,
}

/// For each variation-feasible network, compares the extended Barron
/// penalty of the same function in mean-field form with `sum |a_i|`.
pub fn norm_relation_check(nets: &[RepuNetwork], k: u32, d: usize) -> Result<NormRelationRecord> {
    let bound = 2f64.powi(k as i32) * (d as f64).powf(k as f64 / 2.0);
    let mut ratios = Vec::with_capacity(nets.len());
    let mut violations = 0;
    for net in nets {
        if net.k() != k || net.d() != d {
            return Err(Error::Domain(format!(
                "network has (k, d) = ({}, {}), expected ({k}, {d})",
                net.k(),
                net.d()
            )));
        }
        check_constraints(net, PenaltyKind::Variation)?;
        let variation = penalty_value(net, PenaltyKind::Variation)?;
        if variation == 0.0 {
            ratios.push(None);
            continue;
        }
        let barron = penalty_value(&net.to_scaling(Scaling::MeanField), PenaltyKind::ExtendedBarron)?;
        let ratio = barron / variation;
        if ratio > bound * (1.0 + 1e-12) {
            violations += 1;
        }
        ratios.push(Some(ratio));
    }
    Ok(NormRelationRecord {
        k,
        d,
        bound,
        max_ratio: ratios.iter().flatten().copied().fold(0.0, f64::max),
        ratios,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::random_feasible_net;
    use crate::network::Neuron;
    use crate::rng::SeedStream;

    fn single(d: usize, k: u32, w: Vec<f64>, b: f64) -> RepuNetwork {
        RepuNetwork::new(k, d, Scaling::Sum)
            .unwrap()
            .with_neurons(vec![Neuron::new(0.7, w, b)])
            .unwrap()
    }

    #[test]
    fn coordinate_neuron_has_unit_ratio() {
        for k in 1..5 {
            let r = norm_relation_check(&[single(3, k, vec![1.0, 0.0, 0.0], 0.0)], k, 3).unwrap();
            assert!((r.ratios[0].unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_neuron_ratio_is_its_scale() {
        let s = 0.5f64.sqrt();
        let r = norm_relation_check(&[single(2, 2, vec![s, -s], -1.2)], 2, 2).unwrap();
        let expect = (2.0 * s + 1.2f64).powi(2);
        assert!((r.ratios[0].unwrap() - expect).abs() < 1e-12);
        assert!(r.max_ratio <= r.bound);
    }

    #[test]
    fn random_feasible_nets_never_violate() {
        let mut rng = SeedStream::new(3).rng("norms");
        for d in [2, 4, 8] {
            let nets: Vec<_> = (0..100)
                .map(|_| random_feasible_net(PenaltyKind::Variation, d, 2, 5, &mut rng).unwrap())
                .collect();
            assert_eq!(norm_relation_check(&nets, 2, d).unwrap().violations, 0);
        }
    }
}
