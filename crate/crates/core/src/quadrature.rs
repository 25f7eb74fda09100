//! Integration on the unit cube `(0,1)^d`: tensor Gauss-Legendre rules and
//! randomly shifted rank-1 lattice rules, plus the L2 and Sobolev norms built
//! on them.
//!
//! All reductions use pairwise summation over a fixed node order, so results
//! do not depend on how evaluation is scheduled across threads.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, SmoothField};
use crate::io::pairwise_sum;
use crate::network::MultiIndex;
use crate::rng::SeedStream;

/// Upper bound on the number of tensor-product nodes.
pub const TENSOR_NODE_BUDGET: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleKind {
    TensorGaussLegendre {
        q: usize,
    },
    Lattice {
        n: usize,
        #[serde(default = "default_shifts")]
        shifts: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_shifts() -> usize {
    1
}

impl RuleKind {
    /// Evaluation-rule default for dimension `d`: 24 Gauss points per axis up
    /// to `d = 3`, 12 at `d = 4`, and 8 shifts of a 2^14-point lattice beyond.
    pub fn default_for_dim(d: usize, seed: u64) -> RuleKind {
        match d {
            0..=3 => RuleKind::TensorGaussLegendre { q: 24 },
            4 => RuleKind::TensorGaussLegendre { q: 12 },
            _ => RuleKind::Lattice {
                n: 1 << 14,
                shifts: 8,
                seed,
            },
        }
    }
}

/// An integral estimate with a standard error from independent shifts (zero
/// when the rule has a single node group).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    kind: RuleKind,
    d: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    groups: usize,
    shifts: Vec<Vec<f64>>,
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, ascending.
pub fn gauss_legendre_01(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    for i in 0..q.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=q {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let (pq, pq1) = if q == 1 { (x, 1.0) } else { (p1, p0) };
            dp = qf * (x * pq - pq1) / (x * x - 1.0);
            let dx = pq / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root on [-1, 1].
        nodes[q - 1 - i] = 0.5 * (1.0 + x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[q - 1 - i] = 0.5 * w;
        weights[i] = 0.5 * w;
    }
    (nodes, weights)
}

fn generating_vector_cache() -> &'static Mutex<HashMap<usize, Vec<usize>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Vec<usize>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Component-by-component generating vector for an `n`-point rank-1 lattice
/// (`n` a power of two), minimizing the shift-averaged worst-case error in
/// the weighted Korobov space of smoothness 2 with weights `1/j^2`.
pub fn lattice_generating_vector(n: usize, d: usize) -> Result<Vec<usize>> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Size(format!("lattice size {n} is not a power of two")));
    }
    let mut cache = generating_vector_cache().lock().expect("generating vector cache poisoned");
    let z = cache.entry(n).or_insert_with(|| vec![1]);
    if z.len() >= d {
        return Ok(z[..d].to_vec());
    }
    let nf = n as f64;
    let omega: Vec<f64> = (0..n)
        .map(|t| {
            let x = t as f64 / nf;
            2.0 * PI * PI * (x * x - x + 1.0 / 6.0)
        })
        .collect();
    let mut prod: Vec<f64> = vec![1.0; n];
    for (j, &zj) in z.iter().enumerate() {
        let gamma = 1.0 / ((j + 1) as f64).powi(2);
        for (kk, p) in prod.iter_mut().enumerate() {
            *p *= 1.0 + gamma * omega[(kk * zj) % n];
        }
    }
    while z.len() < d {
        let s = z.len();
        let gamma = 1.0 / ((s + 1) as f64).powi(2);
        let candidates: Vec<usize> = (1..n.max(2)).step_by(2).collect();
        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|&c| {
                let mut acc = 0.0;
                let mut idx = 0usize;
                for p in &prod {
                    acc += p * (1.0 + gamma * omega[idx]);
                    idx += c;
                    if idx >= n {
                        idx -= n;
                    }
                }
                acc
            })
            .collect();
        let (best, _) = candidates
            .iter()
            .zip(&scores)
            .fold((1usize, f64::INFINITY), |(bz, bs), (&c, &sc)| if sc < bs { (c, sc) } else { (bz, bs) });
        for (kk, p) in prod.iter_mut().enumerate() {
            *p *= 1.0 + gamma * omega[(kk * best) % n];
        }
        z.push(best);
    }
    Ok(z[..d].to_vec())
}

impl QuadratureRule {
    pub fn build(kind: &RuleKind, d: usize) -> Result<Self> {
        match *kind {
            RuleKind::TensorGaussLegendre { q } => Self::tensor_gauss_legendre(q, d),
            RuleKind::Lattice { n, shifts, seed } => Self::lattice(n, d, shifts, seed),
        }
    }

    pub fn tensor_gauss_legendre(q: usize, d: usize) -> Result<Self> {
        if q == 0 || d == 0 {
            return Err(Error::Size(format!("tensor rule needs q >= 1 and d >= 1 (q = {q}, d = {d})")));
        }
        let total = (q as f64).powi(d as i32);
        if total > TENSOR_NODE_BUDGET as f64 {
            return Err(Error::Size(format!(
                "tensor rule with q = {q} in d = {d} needs {total:.3e} nodes (budget {TENSOR_NODE_BUDGET})"
            )));
        }
        let total = total as usize;
        let (x1, w1) = gauss_legendre_01(q);
        let mut nodes = Vec::with_capacity(total * d);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let mut w = 1.0;
            for &i in &idx {
                nodes.push(x1[i]);
                w *= w1[i];
            }
            weights.push(w);
            for pos in (0..d).rev() {
                idx[pos] += 1;
                if idx[pos] < q {
                    break;
                }
                idx[pos] = 0;
            }
        }
        Ok(Self {
            kind: RuleKind::TensorGaussLegendre { q },
            d,
            nodes,
            weights,
            groups: 1,
            shifts: Vec::new(),
        })
    }

    /// `shifts` independent random shifts of an `n`-point lattice, with the
    /// shift vectors drawn from the "shift" stream of `seed`.
    pub fn lattice(n: usize, d: usize, shifts: usize, seed: u64) -> Result<Self> {
        if d == 0 || shifts == 0 {
            return Err(Error::Size("lattice rule needs d >= 1 and at least one shift".into()));
        }
        let z = lattice_generating_vector(n, d)?;
        let mut rng = SeedStream::new(seed).rng("shift");
        let nf = n as f64;
        let total = n * shifts;
        let mut nodes = Vec::with_capacity(total * d);
        let mut shift_vectors = Vec::with_capacity(shifts);
        for _ in 0..shifts {
            let delta: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            for kk in 0..n {
                for (zj, dj) in z.iter().zip(&delta) {
                    let mut x = ((kk * zj) % n) as f64 / nf + dj;
                    if x >= 1.0 {
                        x -= 1.0;
                    }
                    if x <= 0.0 || x >= 1.0 {
                        x = f64::EPSILON;
                    }
                    nodes.push(x);
                }
            }
            shift_vectors.push(delta);
        }
        Ok(Self {
            kind: RuleKind::Lattice { n, shifts, seed },
            d,
            nodes,
            weights: vec![1.0 / total as f64; total],
            groups: shifts,
            shifts: shift_vectors,
        })
    }

    pub fn kind(&self) -> &RuleKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.d..(i + 1) * self.d]
    }

    /// Row-major `len() x dim()` node coordinates.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn shift_vectors(&self) -> &[Vec<f64>] {
        &self.shifts
    }

    /// `f` evaluated at every node, in node order.
    pub fn evaluate<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.nodes.par_chunks(self.d).map(&f).collect()
    }

    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.integrate_estimate(f).value
    }

    /// Integral plus a standard error across node groups (independent
    /// lattice shifts).
    pub fn integrate_estimate<F>(&self, f: F) -> Estimate
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let weighted: Vec<f64> = self
            .evaluate(f)
            .into_iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .collect();
        let value = pairwise_sum(&weighted);
        if self.groups < 2 {
            return Estimate { value, std_error: 0.0 };
        }
        let g = self.groups as f64;
        let per_group: Vec<f64> = weighted
            .chunks(self.len() / self.groups)
            .map(|c| pairwise_sum(c) * g)
            .collect();
        let var = per_group.iter().map(|v| (v - value).powi(2)).sum::<f64>() / (g * (g - 1.0));
        Estimate {
            value,
            std_error: var.sqrt(),
        }
    }
}

fn sqrt_estimate(sq: Estimate) -> Estimate {
    let value = sq.value.max(0.0).sqrt();
    let std_error = if value > 0.0 { sq.std_error / (2.0 * value) } else { sq.std_error.sqrt() };
    Estimate { value, std_error }
}

fn check_dim(rule: &QuadratureRule, d: usize) -> Result<()> {
    if rule.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: rule.dim(),
            found: d,
        });
    }
    Ok(())
}

fn check_order(f: &dyn SmoothField, m: u32) -> Result<()> {
    if let Some(max) = f.max_order() {
        if m > max {
            return Err(Error::UnsupportedOrder {
                order: m as usize,
                max: max as usize,
            });
        }
    }
    Ok(())
}

/// `|f - g|_{L2(Omega)}`.
pub fn l2_distance(f: &dyn ScalarField, g: &dyn ScalarField, rule: &QuadratureRule) -> Result<f64> {
    Ok(l2_distance_estimate(f, g, rule)?.value)
}

pub fn l2_distance_estimate(f: &dyn ScalarField, g: &dyn ScalarField, rule: &QuadratureRule) -> Result<Estimate> {
    check_dim(rule, f.dim())?;
    check_dim(rule, g.dim())?;
    Ok(sqrt_estimate(rule.integrate_estimate(|x| (f.value(x) - g.value(x)).powi(2))))
}

pub fn l2_norm(f: &dyn ScalarField, rule: &QuadratureRule) -> Result<f64> {
    check_dim(rule, f.dim())?;
    Ok(rule.integrate(|x| f.value(x).powi(2)).max(0.0).sqrt())
}

/// `|f|_{H^m} = sqrt(sum_{|alpha| <= m} |d^alpha f|^2_{L2})`.
pub fn sobolev_norm(f: &dyn SmoothField, m: u32, rule: &QuadratureRule) -> Result<f64> {
    Ok(sobolev_norm_estimate(f, m, rule)?.value)
}

pub fn sobolev_norm_estimate(f: &dyn SmoothField, m: u32, rule: &QuadratureRule) -> Result<Estimate> {
    check_dim(rule, f.dim())?;
    check_order(f, m)?;
    let alphas = MultiIndex::all_up_to(f.dim(), m);
    Ok(sqrt_estimate(rule.integrate_estimate(|x| {
        alphas.iter().map(|a| f.derivative(a, x).powi(2)).sum()
    })))
}

/// Squared `L2` norms of `d^alpha f` for every `|alpha| <= m`, in
/// [`MultiIndex::all_up_to`] order.
pub fn derivative_norms_sq(f: &dyn SmoothField, m: u32, rule: &QuadratureRule) -> Result<Vec<(MultiIndex, f64)>> {
    check_dim(rule, f.dim())?;
    check_order(f, m)?;
    Ok(MultiIndex::all_up_to(f.dim(), m)
        .into_iter()
        .map(|a| {
            let v = rule.integrate(|x| f.derivative(&a, x).powi(2));
            (a, v)
        })
        .collect())
}

/// `|f - g|_{H^m}`.
pub fn sobolev_distance(f: &dyn SmoothField, g: &dyn SmoothField, m: u32, rule: &QuadratureRule) -> Result<Estimate> {
    check_dim(rule, f.dim())?;
    check_dim(rule, g.dim())?;
    check_order(f, m)?;
    check_order(g, m)?;
    let alphas = MultiIndex::all_up_to(f.dim(), m);
    Ok(sqrt_estimate(rule.integrate_estimate(|x| {
        alphas
            .iter()
            .map(|a| (f.derivative(a, x) - g.derivative(a, x)).powi(2))
            .sum()
    })))
}

/// Sobolev error of a fitted network against a target with exact
/// derivatives.
pub fn sobolev_error(
    net: &crate::network::RepuNetwork,
    target: &dyn SmoothField,
    m: u32,
    rule: &QuadratureRule,
) -> Result<f64> {
    Ok(sobolev_distance(net, target, m, rule)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Constant, FnField};
    use crate::network::{PolyTerm, RepuNetwork, Scaling};

    fn poly(d: usize, k: u32, terms: &[(f64, Vec<u32>)]) -> RepuNetwork {
        RepuNetwork::new(k, d, Scaling::Sum)
            .unwrap()
            .with_poly_tail(
                terms
                    .iter()
                    .map(|(c, a)| PolyTerm { coef: *c, alpha: MultiIndex::new(a.clone()) })
                    .collect(),
            )
            .unwrap()
    }

    #[test]
    fn gauss_legendre_is_exact_to_degree_2q_minus_1() {
        for q in 1..=30 {
            let (x, w) = gauss_legendre_01(q);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14, "q = {q}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            assert!(x.iter().all(|&v| v > 0.0 && v < 1.0));
            for p in 0..(2 * q) as i32 {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
                let exact = 1.0 / (p as f64 + 1.0);
                assert!((approx - exact).abs() < 1e-13, "q = {q}, p = {p}");
            }
        }
    }

    #[test]
    fn tensor_rule_shape() {
        let r = QuadratureRule::tensor_gauss_legendre(3, 2).unwrap();
        assert_eq!(r.len(), 9);
        assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_rule_budget() {
        assert!(matches!(QuadratureRule::tensor_gauss_legendre(24, 6), Err(Error::Size(_))));
    }

    #[test]
    fn tensor_rule_integrals() {
        let r = QuadratureRule::tensor_gauss_legendre(2, 2).unwrap();
        assert!((r.integrate(|x| x[0] * x[1]) - 0.25).abs() < 1e-15);
        let r = QuadratureRule::tensor_gauss_legendre(3, 2).unwrap();
        assert!((r.integrate(|x| (x[0] * x[1]).powi(2)) - 1.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn l2_examples() {
        let r = QuadratureRule::tensor_gauss_legendre(4, 2).unwrap();
        let f = FnField::new(2, |x: &[f64]| x[0].sin());
        assert_eq!(l2_distance(&f, &f, &r).unwrap(), 0.0);
        let one = Constant { d: 2, value: 1.0 };
        let zero = Constant { d: 2, value: 0.0 };
        assert!((l2_distance(&one, &zero, &r).unwrap() - 1.0).abs() < 1e-15);

        let r = QuadratureRule::tensor_gauss_legendre(5, 1).unwrap();
        let x1 = FnField::new(1, |x: &[f64]| x[0]);
        let zero = Constant { d: 1, value: 0.0 };
        assert!((l2_distance(&x1, &zero, &r).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sobolev_examples() {
        let r = QuadratureRule::tensor_gauss_legendre(6, 2).unwrap();
        let c = Constant { d: 2, value: -2.5 };
        for m in 0..4 {
            assert!((sobolev_norm(&c, m, &r).unwrap() - 2.5).abs() < 1e-14);
        }
        let x1 = poly(2, 1, &[(1.0, vec![1, 0])]);
        let expect = (1.0f64 / 3.0 + 1.0).sqrt();
        assert!((sobolev_norm(&x1, 1, &r).unwrap() - expect).abs() < 1e-12);

        let p = poly(2, 2, &[(1.0, vec![2, 0]), (-1.0, vec![1, 0]), (0.25, vec![0, 0])]);
        assert!((sobolev_norm(&p, 0, &r).unwrap() - 1.0 / 80f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sobolev_order_checked() {
        let r = QuadratureRule::tensor_gauss_legendre(3, 2).unwrap();
        let net = poly(2, 1, &[(1.0, vec![1, 0])]);
        assert!(matches!(sobolev_norm(&net, 2, &r), Err(Error::UnsupportedOrder { .. })));
        let r3 = QuadratureRule::tensor_gauss_legendre(3, 3).unwrap();
        assert!(matches!(sobolev_norm(&net, 1, &r3), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sobolev_error_reduces_to_tail_norm() {
        let r = QuadratureRule::tensor_gauss_legendre(8, 2).unwrap();
        let target = RepuNetwork::new(2, 2, Scaling::Sum)
            .unwrap()
            .with_neurons(vec![crate::network::Neuron::new(0.7, vec![0.6, 0.8], -0.3)])
            .unwrap();
        assert!(sobolev_error(&target, &target, 2, &r).unwrap() < 1e-12);
        let shifted = target
            .clone()
            .with_poly_tail(vec![
                PolyTerm { coef: 1.0, alpha: MultiIndex::new(vec![2, 0]) },
                PolyTerm { coef: -1.0, alpha: MultiIndex::new(vec![1, 0]) },
                PolyTerm { coef: 0.25, alpha: MultiIndex::new(vec![0, 0]) },
            ])
            .unwrap();
        let e0 = sobolev_error(&shifted, &target, 0, &r).unwrap();
        assert!((e0 - 1.0 / 80f64.sqrt()).abs() < 1e-12);
        let l2 = l2_distance(&shifted, &target, &r).unwrap();
        assert!((e0 - l2).abs() < 1e-15);
    }

    #[test]
    fn lattice_rule_basics() {
        let r = QuadratureRule::lattice(1024, 3, 4, 7).unwrap();
        assert_eq!(r.len(), 4096);
        assert_eq!(r.groups(), 4);
        assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(r.nodes().iter().all(|&x| x > 0.0 && x < 1.0));
        let est = r.integrate_estimate(|x| x[0] * x[1] * x[2]);
        assert!((est.value - 0.125).abs() < 1e-3);
        assert!(est.std_error > 0.0);
        let again = QuadratureRule::lattice(1024, 3, 4, 7).unwrap();
        assert_eq!(again.nodes(), r.nodes());
        assert!(matches!(QuadratureRule::lattice(1000, 2, 1, 0), Err(Error::Size(_))));
    }

    #[test]
    fn lattice_vector_is_odd_and_cached() {
        let z = lattice_generating_vector(256, 5).unwrap();
        assert_eq!(z[0], 1);
        assert!(z.iter().all(|v| v % 2 == 1 && *v < 256));
        assert_eq!(lattice_generating_vector(256, 3).unwrap(), z[..3].to_vec());
    }
}
