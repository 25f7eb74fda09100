//! Sobolev embedding checks for penalized networks and the `M(d)` probe.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::constants::{barron_embedding_constant, variation_embedding_constant};
use crate::datagen::random_dictionary_neuron;
use crate::error::{Error, Result};
use crate::field::{ScalarField, SmoothField};
use crate::network::{falling_factorial, MultiIndex, Neuron, RepuNetwork, Scaling};
use crate::penalty::{check_constraints, penalty_value, PenaltyKind};
use crate::quadrature::{l2_norm, sobolev_norm_estimate, QuadratureRule};
use crate::rng::StreamRng;

/// Outcome of one embedding inequality `|net|_{H^m} <= constant * penalty`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCheck {
    pub kind: PenaltyKind,
    pub m: u32,
    pub sobolev_norm: f64,
    pub std_error: f64,
    pub constant: f64,
    pub penalty: f64,
    pub bound: f64,
    /// `bound - sobolev_norm`; negative on failure.
    pub margin: f64,
    pub passed: bool,
}

/// A random network in the parameter class of `kind`.
///
/// Extended Barron networks get Gaussian parameters; the constrained kinds
/// get dictionary neurons with `a` uniform in `[-1, 1]`, and Radon-BV adds a
/// Gaussian polynomial tail.
pub fn random_feasible_net(kind: PenaltyKind, d: usize, k: u32, width: usize, rng: &mut StreamRng) -> Result<RepuNetwork> {
    let neurons: Vec<Neuron> = (0..width)
        .map(|_| match kind {
            PenaltyKind::ExtendedBarron => {
                let a: f64 = StandardNormal.sample(rng);
                let w = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                Neuron::new(a, w, StandardNormal.sample(rng))
            }
            _ => {
                let a = rng.random_range(-1.0..=1.0);
                random_dictionary_neuron(d, a, rng)
            }
        })
        .collect();
    let net = RepuNetwork::new(k, d, kind.scaling())?.with_neurons(neurons)?;
    if kind != PenaltyKind::RadonBV {
        return Ok(net);
    }
    let mut net = net.with_zero_tail()?;
    for term in net.poly_tail_mut().expect("tail was just added") {
        term.coef = StandardNormal.sample(rng);
    }
    Ok(net)
}

/// Checks `|net|_{H^m} <= C * penalty` with the Barron constant for
/// mean-field networks and the variation constant for sum-scaled ones.
///
/// The outer bias counts as a constant neuron `a0 * sigma_k(0 * x + 1)` in the
/// Barron case; the variation case requires `a0 = 0`. Passes when the
/// Sobolev norm is within `1e-6` relative plus one quadrature standard error
/// of the bound.
pub fn check_embedding(net: &RepuNetwork, m: u32, rule: &QuadratureRule) -> Result<EmbeddingCheck> {
    let (d, k) = (net.d(), net.k());
    if net.poly_tail().is_some() {
        return Err(Error::Domain("embedding check does not cover polynomial tails".into()));
    }
    let (kind, constant, penalty) = match net.scaling() {
        Scaling::MeanField => {
            let kind = PenaltyKind::ExtendedBarron;
            let p = penalty_value(net, kind)? + net.a0().abs();
            (kind, barron_embedding_constant(d, m, k)?, p)
        }
        Scaling::Sum => {
            let kind = PenaltyKind::Variation;
            check_constraints(net, kind)?;
            if net.a0() != 0.0 {
                return Err(Error::Domain("variation embedding check requires a0 = 0".into()));
            }
            (kind, variation_embedding_constant(d, m, k)?, penalty_value(net, kind)?)
        }
    };
    let sob = sobolev_norm_estimate(net, m, rule)?;
    let bound = constant * penalty;
    Ok(EmbeddingCheck {
        kind,
        m,
        sobolev_norm: sob.value,
        std_error: sob.std_error,
        constant,
        penalty,
        bound,
        margin: bound - sob.value,
        passed: sob.value <= bound * (1.0 + 1e-6) + sob.std_error,
    })
}

/// `max |sigma_k(w.x + b)|_{L2}` over random dictionary elements against the
/// uniform bound `2^k d^{k/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryNormRecord {
    pub d: usize,
    pub k: u32,
    pub count: usize,
    pub max_norm: f64,
    pub bound: f64,
    pub violations: usize,
}

pub fn dictionary_norm_check(k: u32, count: usize, rule: &QuadratureRule, rng: &mut StreamRng) -> Result<DictionaryNormRecord> {
    let d = rule.dim();
    let bound = 2f64.powi(k as i32) * (d as f64).powf(k as f64 / 2.0);
    let mut max_norm = 0.0f64;
    let mut violations = 0;
    for _ in 0..count {
        let g = RepuNetwork::new(k, d, Scaling::Sum)?.with_neurons(vec![random_dictionary_neuron(d, 1.0, rng)])?;
        let norm = l2_norm(&g, rule)?;
        max_norm = max_norm.max(norm);
        if norm > bound {
            violations += 1;
        }
    }
    Ok(DictionaryNormRecord {
        d,
        k,
        count,
        max_norm,
        bound,
        violations,
    })
}

/// `p(x) = (x_1 - 1/2)^k` in `dim` variables.
struct ShiftedPower {
    dim: usize,
    k: u32,
}

impl ScalarField for ShiftedPower {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (x[0] - 0.5).powi(self.k as i32)
    }
}

impl SmoothField for ShiftedPower {
    fn max_order(&self) -> Option<u32> {
        None
    }

    fn derivative(&self, alpha: &MultiIndex, x: &[f64]) -> f64 {
        let s = alpha.orders()[0];
        if s > self.k || alpha.orders()[1..].iter().any(|&o| o > 0) {
            return 0.0;
        }
        falling_factorial(self.k, s) * (x[0] - 0.5).powi((self.k - s) as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdProbe {
    pub d: usize,
    pub k: u32,
    /// `|p|_{H^k} / (c~(d,k,k) |p|_{L2})`.
    pub value: f64,
    pub hk_norm: f64,
    pub constant: f64,
    pub l2_analytic: f64,
    pub l2_quadrature: f64,
}

/// Lower bound on `M(d)` from the polynomial `(x_1 - 1/2)^k`.
///
/// `p` depends on `x_1` only and has no mixed derivatives, so `rule` may be
/// one-dimensional; a `d`-dimensional rule gives the same value.
pub fn md_lower_bound_probe(d: usize, k: u32, rule: &QuadratureRule) -> Result<MdProbe> {
    if d < 2 {
        return Err(Error::Domain(format!("M(d) probe needs d >= 2, got {d}")));
    }
    if rule.dim() != 1 && rule.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rule.dim(),
        });
    }
    let p = ShiftedPower { dim: rule.dim(), k };
    let hk_norm = sobolev_norm_estimate(&p, k, rule)?.value;
    let l2_quadrature = l2_norm(&p, rule)?;
    let l2_analytic = (0.5f64.powi(2 * k as i32) / f64::from(2 * k + 1)).sqrt();
    let constant = variation_embedding_constant(d, k, k)?;
    Ok(MdProbe {
        d,
        k,
        value: hk_norm / (constant * l2_quadrature),
        hk_norm,
        constant,
        l2_analytic,
        l2_quadrature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    fn gl(q: usize, d: usize) -> QuadratureRule {
        QuadratureRule::tensor_gauss_legendre(q, d).unwrap()
    }

    #[test]
    fn zero_network_passes_with_zero_margin() {
        let net = RepuNetwork::new(2, 2, Scaling::MeanField).unwrap();
        let c = check_embedding(&net, 1, &gl(8, 2)).unwrap();
        assert_eq!(c.sobolev_norm, 0.0);
        assert_eq!(c.bound, 0.0);
        assert!(c.passed);
    }

    #[test]
    fn random_nets_satisfy_embeddings() {
        let mut rng = SeedStream::new(5).rng("corpus");
        let rule = gl(16, 2);
        for kind in [PenaltyKind::ExtendedBarron, PenaltyKind::Variation] {
            for _ in 0..20 {
                let net = random_feasible_net(kind, 2, 2, 4, &mut rng).unwrap();
                for m in 0..=2 {
                    let c = check_embedding(&net, m, &rule).unwrap();
                    assert!(c.passed, "{c:?}");
                    assert_eq!(c.kind, kind);
                }
            }
        }
    }

    #[test]
    fn barron_bias_counts_as_constant_neuron() {
        let net = RepuNetwork::new(2, 2, Scaling::MeanField).unwrap().with_a0(2.0);
        let c = check_embedding(&net, 2, &gl(4, 2)).unwrap();
        assert!((c.sobolev_norm - 2.0).abs() < 1e-12);
        assert_eq!(c.penalty, 2.0);
        assert!(c.passed);
    }

    #[test]
    fn infeasible_or_unsupported_nets_are_rejected() {
        let off_sphere = RepuNetwork::new(2, 2, Scaling::Sum)
            .unwrap()
            .with_neurons(vec![Neuron::new(1.0, vec![2.0, 0.0], 0.0)])
            .unwrap();
        assert!(matches!(check_embedding(&off_sphere, 0, &gl(4, 2)), Err(Error::Constraint(_))));
        let tail = RepuNetwork::new(2, 2, Scaling::Sum).unwrap().with_zero_tail().unwrap();
        assert!(matches!(check_embedding(&tail, 0, &gl(4, 2)), Err(Error::Domain(_))));
    }

    #[test]
    fn dictionary_elements_obey_uniform_bound() {
        let mut rng = SeedStream::new(1).rng("dict");
        let r = dictionary_norm_check(2, 100, &gl(12, 2), &mut rng).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.bound, 8.0);
        assert!(r.max_norm > 0.0);
    }

    #[test]
    fn probe_norms_match_closed_forms() {
        let one = md_lower_bound_probe(5, 2, &gl(8, 1)).unwrap();
        assert!((one.l2_analytic - 1.0 / 80f64.sqrt()).abs() < 1e-15);
        assert!((one.l2_quadrature - one.l2_analytic).abs() < 1e-10);
        // |p|_{H^2}^2 = 1/80 + 4 * (1/4) / 3 + 4.
        let hk = (1.0 / 80.0 + 1.0 / 3.0 + 4.0f64).sqrt();
        assert!((one.hk_norm - hk).abs() < 1e-12);
        let full = md_lower_bound_probe(3, 2, &gl(6, 3)).unwrap();
        let line = md_lower_bound_probe(3, 2, &gl(6, 1)).unwrap();
        assert!((full.value - line.value).abs() < 1e-12);
        assert!(matches!(md_lower_bound_probe(1, 2, &gl(6, 1)), Err(Error::Domain(_))));
    }
}
