//! Synthetic targets with exact derivative oracles, and noisy samples of
//! them at quadrature nodes with a calibrated `L2` noise level.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, SmoothField};
use crate::io::{self, exact_vec, Exact};
use crate::network::{MultiIndex, Neuron, PolyTerm, RepuNetwork, Scaling};
use crate::penalty::{penalty_value, PenaltyKind};
use crate::quadrature::QuadratureRule;
use crate::rng::{SeedStream, StreamRng};

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Width and order of the random network used as a smooth noise field.
const NOISE_FIELD_WIDTH: usize = 8;
const NOISE_FIELD_ORDER: u32 = 3;

/// A point uniform on the unit sphere of `R^d`.
pub fn random_unit_vector(d: usize, rng: &mut StreamRng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// A neuron on the dictionary: unit `w`, bias uniform in `[-sqrt d, sqrt d]`.
pub fn random_dictionary_neuron(d: usize, a: f64, rng: &mut StreamRng) -> Neuron {
    let w = random_unit_vector(d, rng);
    let r = (d as f64).sqrt();
    let b = rng.random_range(-r..=r);
    Neuron::new(a, w, b)
}

/// A univariate factor of a [`TargetSpec::Product1d`] target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Factor1d {
    /// `sin(omega x + phase)`
    Sin { omega: f64, phase: f64 },
    /// `exp(rate x)`
    Exp { rate: f64 },
}

impl Factor1d {
    fn derivative(&self, order: u32, x: f64) -> f64 {
        match *self {
            Factor1d::Sin { omega, phase } => {
                omega.powi(order as i32) * (omega * x + phase + order as f64 * std::f64::consts::FRAC_PI_2).sin()
            }
            Factor1d::Exp { rate } => rate.powi(order as i32) * (rate * x).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// `neurons` dictionary neurons with `a_i` uniform in `[-1, 1]`.
    ReferenceNetwork { k: u32, d: usize, neurons: usize },
    Polynomial { k: u32, d: usize, terms: Vec<PolyTerm> },
    /// `prod_j factor_j(x_j)`, one factor per coordinate.
    Product1d { k: u32, factors: Vec<Factor1d> },
    /// `sigma_k(x_1)`: one neuron with `w = e_1`, `b = 0`, `a = 1`, whose
    /// penalty values do not depend on `d`.
    CoordinateNeuron { k: u32, d: usize },
}

/// Upper bounds on the target's norms, from its explicit representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub barron_upper: f64,
    pub variation_upper: f64,
    pub rbv_upper: f64,
}

impl NormBounds {
    pub fn for_penalty(&self, kind: PenaltyKind) -> f64 {
        match kind {
            PenaltyKind::ExtendedBarron => self.barron_upper,
            PenaltyKind::Variation => self.variation_upper,
            PenaltyKind::RadonBV => self.rbv_upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetKind {
    ReferenceNetwork(RepuNetwork),
    Polynomial(Vec<PolyTerm>),
    Product1d(Vec<Factor1d>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetFunction {
    pub kind: TargetKind,
    pub k: u32,
    pub d: usize,
    pub known_norm_bounds: Option<NormBounds>,
}

impl TargetSpec {
    pub fn k(&self) -> u32 {
        match *self {
            TargetSpec::ReferenceNetwork { k, .. }
            | TargetSpec::Polynomial { k, .. }
            | TargetSpec::Product1d { k, .. }
            | TargetSpec::CoordinateNeuron { k, .. } => k,
        }
    }

    pub fn d(&self) -> usize {
        match self {
            TargetSpec::ReferenceNetwork { d, .. }
            | TargetSpec::Polynomial { d, .. }
            | TargetSpec::CoordinateNeuron { d, .. } => *d,
            TargetSpec::Product1d { factors, .. } => factors.len(),
        }
    }
}

/// Norm bounds of a Sum-scaled dictionary network.
pub fn network_norm_bounds(net: &RepuNetwork) -> Result<NormBounds> {
    let sum = net.to_scaling(Scaling::Sum);
    let l1: f64 = sum.neurons().iter().map(|n| n.a.abs()).sum();
    let mean_field = strip_tail(&sum.to_scaling(Scaling::MeanField));
    Ok(NormBounds {
        barron_upper: penalty_value(&mean_field, PenaltyKind::ExtendedBarron)?,
        variation_upper: l1,
        rbv_upper: l1,
    })
}

fn strip_tail(net: &RepuNetwork) -> RepuNetwork {
    RepuNetwork::new(net.k(), net.d(), net.scaling())
        .and_then(|n| n.with_neurons(net.neurons().to_vec()))
        .expect("same shape as an existing network")
        .with_a0(net.a0())
}

pub fn make_target(spec: &TargetSpec, seed: u64) -> Result<TargetFunction> {
    let (k, d) = (spec.k(), spec.d());
    if k == 0 {
        return Err(Error::config("target.k", "must be at least 1"));
    }
    if d == 0 {
        return Err(Error::config("target.d", "must be at least 1"));
    }
    match spec {
        TargetSpec::ReferenceNetwork { neurons, .. } => {
            if *neurons == 0 {
                return Err(Error::config("target.neurons", "must be at least 1"));
            }
            let mut rng = SeedStream::new(seed).rng("target");
            let list: Vec<Neuron> = (0..*neurons)
                .map(|_| {
                    let a = rng.random_range(-1.0..=1.0);
                    random_dictionary_neuron(d, a, &mut rng)
                })
                .collect();
            let net = RepuNetwork::new(k, d, Scaling::Sum)?.with_neurons(list)?;
            let bounds = network_norm_bounds(&net)?;
            Ok(TargetFunction {
                kind: TargetKind::ReferenceNetwork(net),
                k,
                d,
                known_norm_bounds: Some(bounds),
            })
        }
        TargetSpec::CoordinateNeuron { .. } => {
            let mut w = vec![0.0; d];
            w[0] = 1.0;
            let net = RepuNetwork::new(k, d, Scaling::Sum)?.with_neurons(vec![Neuron::new(1.0, w, 0.0)])?;
            let bounds = network_norm_bounds(&net)?;
            Ok(TargetFunction {
                kind: TargetKind::ReferenceNetwork(net),
                k,
                d,
                known_norm_bounds: Some(bounds),
            })
        }
        TargetSpec::Polynomial { terms, .. } => {
            for (i, t) in terms.iter().enumerate() {
                if t.alpha.dim() != d {
                    return Err(Error::config(format!("target.terms[{i}].alpha"), format!("expected {d} entries")));
                }
            }
            Ok(TargetFunction {
                kind: TargetKind::Polynomial(terms.clone()),
                k,
                d,
                known_norm_bounds: None,
            })
        }
        TargetSpec::Product1d { factors, .. } => Ok(TargetFunction {
            kind: TargetKind::Product1d(factors.clone()),
            k,
            d,
            known_norm_bounds: None,
        }),
    }
}

impl ScalarField for TargetFunction {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            TargetKind::ReferenceNetwork(net) => net.eval_unchecked(x),
            TargetKind::Polynomial(terms) => terms.iter().map(|t| t.coef * t.alpha.monomial(x)).sum(),
            TargetKind::Product1d(factors) => factors.iter().zip(x).map(|(f, &xi)| f.derivative(0, xi)).product(),
        }
    }
}

impl SmoothField for TargetFunction {
    fn max_order(&self) -> Option<u32> {
        match &self.kind {
            TargetKind::ReferenceNetwork(net) => Some(net.k()),
            _ => None,
        }
    }

    fn derivative(&self, alpha: &MultiIndex, x: &[f64]) -> f64 {
        match &self.kind {
            TargetKind::ReferenceNetwork(net) => net.derivative_unchecked(alpha, x),
            TargetKind::Polynomial(terms) => terms.iter().map(|t| t.coef * t.alpha.monomial_derivative(alpha, x)).sum(),
            TargetKind::Product1d(factors) => factors
                .iter()
                .zip(x)
                .zip(alpha.orders())
                .map(|((f, &xi), &o)| f.derivative(o, xi))
                .product(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    GaussianIid,
    #[default]
    L2CalibratedField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyDataset {
    d: usize,
    points: Vec<f64>,
    pub values: Vec<f64>,
    weights: Vec<f64>,
    pub delta_nominal: f64,
    pub delta_realized: f64,
    pub noise_seed: u64,
}

/// The random smooth field used by [`NoiseKind::L2CalibratedField`].
pub fn noise_field(d: usize, seed: u64) -> RepuNetwork {
    let mut rng = SeedStream::new(seed).rng("noise");
    let neurons = (0..NOISE_FIELD_WIDTH)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            random_dictionary_neuron(d, a, &mut rng)
        })
        .collect();
    RepuNetwork::new(NOISE_FIELD_ORDER, d, Scaling::Sum)
        .and_then(|n| n.with_neurons(neurons))
        .expect("noise field shape is valid")
}

pub fn make_noisy_dataset(
    target: &dyn ScalarField,
    rule: &QuadratureRule,
    delta: f64,
    noise: NoiseKind,
    seed: u64,
) -> Result<NoisyDataset> {
    if rule.is_empty() {
        return Err(Error::Size("quadrature rule has no nodes".into()));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::config("delta", format!("must be finite and non-negative, got {delta}")));
    }
    if target.dim() != rule.dim() {
        return Err(Error::DimensionMismatch {
            expected: rule.dim(),
            found: target.dim(),
        });
    }
    let exact = rule.evaluate(|x| target.value(x));
    let weights = rule.weights().to_vec();
    let mut values = exact.clone();
    if delta > 0.0 {
        let raw: Vec<f64> = match noise {
            NoiseKind::GaussianIid => {
                let mut rng = SeedStream::new(seed).rng("noise");
                (0..rule.len()).map(|_| StandardNormal.sample(&mut rng)).collect()
            }
            NoiseKind::L2CalibratedField => {
                let g = noise_field(rule.dim(), seed);
                rule.evaluate(|x| g.eval_unchecked(x))
            }
        };
        let norm = weighted_rms(&raw, &weights);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Domain("noise sample has zero discrete norm".into()));
        }
        let c = delta / norm;
        for (v, e) in values.iter_mut().zip(&raw) {
            *v += c * e;
        }
    }
    let diff: Vec<f64> = values.iter().zip(&exact).map(|(v, e)| v - e).collect();
    Ok(NoisyDataset {
        d: rule.dim(),
        points: rule.nodes().to_vec(),
        values,
        weights,
        delta_nominal: delta,
        delta_realized: weighted_rms(&diff, rule.weights()),
        noise_seed: seed,
    })
}

fn weighted_rms(values: &[f64], weights: &[f64]) -> f64 {
    let terms: Vec<f64> = values.iter().zip(weights).map(|(v, w)| w * v * v).collect();
    io::pairwise_sum(&terms).sqrt()
}

#[derive(Serialize)]
struct DatasetOut {
    format_version: u32,
    d: usize,
    points: Vec<Vec<Exact>>,
    values: Vec<Exact>,
    weights: Vec<Exact>,
    delta_nominal: Exact,
    delta_realized: Exact,
    seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetIn {
    format_version: u32,
    d: usize,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    weights: Vec<f64>,
    delta_nominal: f64,
    delta_realized: f64,
    seed: u64,
}

impl NoisyDataset {
    /// Builds a dataset from explicit arrays (`points` row-major).
    pub fn new(d: usize, points: Vec<f64>, values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let ds = Self {
            d,
            points,
            values,
            weights,
            delta_nominal: 0.0,
            delta_realized: 0.0,
            noise_seed: 0,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |path: &str, message: String| Error::Invalid {
            path: path.into(),
            message,
        };
        if self.d == 0 {
            return Err(invalid("d", "must be at least 1".into()));
        }
        let n = self.values.len();
        if n == 0 {
            return Err(Error::Size("dataset has no samples".into()));
        }
        if self.points.len() != n * self.d {
            return Err(invalid("points", format!("expected {n} points of dimension {}", self.d)));
        }
        if self.weights.len() != n {
            return Err(invalid("weights", format!("expected {n} weights, found {}", self.weights.len())));
        }
        if let Some(i) = self.weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(invalid(&format!("weights[{i}]"), "must be positive".into()));
        }
        let total = io::pairwise_sum(&self.weights);
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("weights", format!("sum to {total}, expected 1")));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(&format!("values[{i}]"), "must be finite".into()));
        }
        if let Some(i) = self.points.iter().position(|v| !v.is_finite()) {
            return Err(invalid(&format!("points[{}]", i / self.d), "must be finite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    /// Row-major sample points.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Discrete `L2` distance between the data and `f` under the training
    /// weights.
    pub fn misfit(&self, f: &dyn ScalarField) -> f64 {
        let r: Vec<f64> = (0..self.len()).map(|i| f.value(self.point(i)) - self.values[i]).collect();
        weighted_rms(&r, &self.weights)
    }

    pub fn to_json(&self) -> Result<String> {
        io::to_json_pretty(&DatasetOut {
            format_version: DATASET_FORMAT_VERSION,
            d: self.d,
            points: self.points.chunks(self.d).map(exact_vec).collect(),
            values: exact_vec(&self.values),
            weights: exact_vec(&self.weights),
            delta_nominal: Exact(self.delta_nominal),
            delta_realized: Exact(self.delta_realized),
            seed: self.noise_seed,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: DatasetIn = serde_json::from_str(text).map_err(io::parse_error)?;
        if raw.format_version != DATASET_FORMAT_VERSION {
            return Err(Error::Invalid {
                path: "format_version".into(),
                message: format!("unsupported version {} (expected {DATASET_FORMAT_VERSION})", raw.format_version),
            });
        }
        if let Some(i) = raw.points.iter().position(|p| p.len() != raw.d) {
            return Err(Error::Invalid {
                path: format!("points[{i}]"),
                message: format!("expected {} coordinates", raw.d),
            });
        }
        let ds = Self {
            d: raw.d,
            points: raw.points.concat(),
            values: raw.values,
            weights: raw.weights,
            delta_nominal: raw.delta_nominal,
            delta_realized: raw.delta_realized,
            noise_seed: raw.seed,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&io::read_to_string(path)?)
    }

    /// CSV with header `x1,...,xd,value`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (1..=self.d).map(|j| format!("x{j}")).collect();
        header.push("value".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.point(i).iter().map(|x| format!("{x:.16e}")).collect();
            row.push(format!("{:.16e}", self.values[i]));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Domain(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_spec() -> TargetSpec {
        TargetSpec::ReferenceNetwork { k: 2, d: 2, neurons: 5 }
    }

    #[test]
    fn reference_targets_are_deterministic_and_feasible() {
        let a = make_target(&reference_spec(), 7).unwrap();
        let b = make_target(&reference_spec(), 7).unwrap();
        assert_eq!(a, b);
        let c = make_target(&reference_spec(), 8).unwrap();
        assert_ne!(a, c);
        let TargetKind::ReferenceNetwork(net) = &a.kind else { panic!() };
        let l1: f64 = net.neurons().iter().map(|n| n.a.abs()).sum();
        let bounds = a.known_norm_bounds.unwrap();
        assert_eq!(bounds.variation_upper, l1);
        assert_eq!(bounds.rbv_upper, l1);
        let barron: f64 = net
            .neurons()
            .iter()
            .map(|n| n.a.abs() * (n.w_norm_l1() + n.b.abs()).powi(2))
            .sum();
        assert!((bounds.barron_upper - barron).abs() < 1e-12 * barron);
        for n in net.neurons() {
            assert!((n.w_norm_l2() - 1.0).abs() < 1e-12);
            assert!(n.b.abs() <= 2f64.sqrt());
            assert!(n.a.abs() <= 1.0);
        }
    }

    #[test]
    fn polynomial_target_derivative() {
        let spec = TargetSpec::Polynomial {
            k: 2,
            d: 2,
            terms: vec![
                PolyTerm { coef: 1.0, alpha: MultiIndex::new(vec![2, 0]) },
                PolyTerm { coef: -1.0, alpha: MultiIndex::new(vec![1, 0]) },
                PolyTerm { coef: 0.25, alpha: MultiIndex::new(vec![0, 0]) },
            ],
        };
        let t = make_target(&spec, 0).unwrap();
        let v = t.derivative(&MultiIndex::new(vec![1, 0]), &[0.75, 0.3]);
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coordinate_neuron_bounds_are_dimension_free() {
        for d in [1, 2, 5, 9] {
            let t = make_target(&TargetSpec::CoordinateNeuron { k: 2, d }, 0).unwrap();
            let b = t.known_norm_bounds.unwrap();
            assert_eq!((b.barron_upper, b.variation_upper, b.rbv_upper), (1.0, 1.0, 1.0));
            let mut x = vec![0.3; d];
            x[0] = 0.6;
            assert!((t.value(&x) - 0.36).abs() < 1e-15);
        }
    }

    fn fd_check(t: &TargetFunction, max_order: u32, seed: u64) {
        let h = 1e-5;
        let mut rng = SeedStream::new(seed).rng("fd");
        for _ in 0..100 {
            let x: Vec<f64> = (0..t.d).map(|_| rng.random_range(0.05..0.95)).collect();
            for alpha in MultiIndex::all_up_to(t.d, max_order) {
                if alpha.is_zero() {
                    continue;
                }
                let j = alpha.orders().iter().position(|&o| o > 0).unwrap();
                let mut lower = alpha.orders().to_vec();
                lower[j] -= 1;
                let lower = MultiIndex::new(lower);
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[j] += h;
                xm[j] -= h;
                let fd = (t.derivative(&lower, &xp) - t.derivative(&lower, &xm)) / (2.0 * h);
                let exact = t.derivative(&alpha, &x);
                assert!(
                    (fd - exact).abs() <= 1e-5 * exact.abs().max(1.0),
                    "alpha {alpha}: fd {fd} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn derivative_oracles_match_finite_differences() {
        let net = make_target(&TargetSpec::ReferenceNetwork { k: 3, d: 2, neurons: 6 }, 3).unwrap();
        fd_check(&net, 2, 1);
        let prod = make_target(
            &TargetSpec::Product1d {
                k: 3,
                factors: vec![Factor1d::Sin { omega: 2.0, phase: 0.3 }, Factor1d::Exp { rate: -0.7 }],
            },
            0,
        )
        .unwrap();
        fd_check(&prod, 3, 2);
        let poly = make_target(
            &TargetSpec::Polynomial {
                k: 3,
                d: 3,
                terms: vec![
                    PolyTerm { coef: 1.5, alpha: MultiIndex::new(vec![1, 2, 0]) },
                    PolyTerm { coef: -0.5, alpha: MultiIndex::new(vec![0, 0, 3]) },
                ],
            },
            0,
        )
        .unwrap();
        fd_check(&poly, 3, 3);
    }

    #[test]
    fn noise_is_calibrated_exactly() {
        let target = make_target(&reference_spec(), 1).unwrap();
        let rule = QuadratureRule::lattice(1024, 2, 1, 5).unwrap();
        for kind in [NoiseKind::GaussianIid, NoiseKind::L2CalibratedField] {
            let clean = make_noisy_dataset(&target, &rule, 0.0, kind, 3).unwrap();
            let exact = rule.evaluate(|x| target.value(x));
            assert_eq!(clean.values(), &exact[..]);
            let ds = make_noisy_dataset(&target, &rule, 0.01, kind, 3).unwrap();
            let diff: Vec<f64> = ds.values().iter().zip(&exact).map(|(a, b)| a - b).collect();
            let rms = weighted_rms(&diff, rule.weights());
            assert!((rms - 0.01).abs() < 1e-9 * 0.01, "{kind:?}: {rms}");
            assert!((ds.delta_realized - 0.01).abs() < 1e-9 * 0.01);
            assert_eq!(ds, make_noisy_dataset(&target, &rule, 0.01, kind, 3).unwrap());
        }
    }

    #[test]
    fn empty_and_negative_inputs_are_rejected() {
        let target = make_target(&reference_spec(), 1).unwrap();
        let rule = QuadratureRule::tensor_gauss_legendre(3, 2).unwrap();
        assert!(matches!(
            make_noisy_dataset(&target, &rule, -1.0, NoiseKind::GaussianIid, 0),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            make_target(&TargetSpec::ReferenceNetwork { k: 2, d: 2, neurons: 0 }, 0),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn dataset_json_round_trip_and_csv() {
        let target = make_target(&reference_spec(), 1).unwrap();
        let rule = QuadratureRule::lattice(64, 2, 1, 5).unwrap();
        let ds = make_noisy_dataset(&target, &rule, 0.05, NoiseKind::GaussianIid, 9).unwrap();
        let back = NoisyDataset::from_json(&ds.to_json().unwrap()).unwrap();
        assert_eq!(back, ds);
        let csv = ds.to_csv().unwrap();
        assert!(csv.starts_with("x1,x2,value\n"));
        assert_eq!(csv.lines().count(), 65);
    }

    #[test]
    fn dataset_validation() {
        assert!(NoisyDataset::new(1, vec![0.5], vec![1.0], vec![0.5]).is_err());
        assert!(NoisyDataset::new(2, vec![0.5], vec![1.0], vec![1.0]).is_err());
        assert!(NoisyDataset::new(1, vec![0.5], vec![1.0], vec![1.0]).is_ok());
    }
}
