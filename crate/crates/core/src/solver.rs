//! Minimization of the Tikhonov functional
//! `J(g) = |g - f_delta|^2 + lambda * P(g)^2` over shallow RePU networks.
//!
//! The fidelity term is the weighted sum over the dataset's quadrature
//! nodes. Training is full batch: every iteration evaluates the exact
//! (sub)gradient, takes a step, and for the constrained regimes projects each
//! neuron back onto the dictionary. Several restarts run independently and
//! the best one is returned.

use std::time::Instant;

use log::{debug, info, warn};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::datagen::{random_unit_vector, NoisyDataset};
use crate::error::{Error, Result};
use crate::model_io;
use crate::network::{MultiIndex, Neuron, RepuNetwork};
use crate::penalty::{check_constraints, penalty_value, PenaltyKind};
use crate::rng::{SeedStream, StreamRng};

/// How often (in iterations) the best-so-far trace is sampled and the early
/// stopping test runs.
pub const CHECK_INTERVAL: usize = 100;

/// Restarts whose objectives differ by less than this are tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    Explicit(f64),
    BarronRule,
    VariationRule,
    RadonBvRule,
    GridSearch(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Adam for the extended Barron and Radon-BV kinds, projected
    /// subgradient descent for the variation kind.
    #[default]
    Auto,
    Adam,
    Subgradient,
}

impl Method {
    /// The concrete method `Auto` stands for under `kind`.
    pub fn resolve(self, kind: PenaltyKind) -> Method {
        match (self, kind) {
            (Method::Auto, PenaltyKind::Variation) => Method::Subgradient,
            (Method::Auto, _) => Method::Adam,
            (m, _) => m,
        }
    }

    /// Default base step size of a concrete method.
    pub fn default_step_size(self) -> f64 {
        match self {
            Method::Subgradient => 2e-3,
            _ => 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    #[default]
    Cosine,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: Method,
    /// Base step size; defaults depend on the resolved method.
    pub step_size: Option<f64>,
    pub schedule: Schedule,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Stop a restart when the best objective improved by less than
    /// `tolerance * |best|` over the last check interval; 0 disables.
    pub tolerance: f64,
    /// Length of the Radon-BV reference run, in multiples of `max_iters`.
    pub reference_factor: usize,
    /// Radius of the initial inner weights in the Barron regime.
    pub init_radius: f64,
    /// Solve for the unpenalized linear parameters (polynomial tail, or
    /// `a0` without one) by least squares at every iteration.
    pub solve_linear: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            step_size: None,
            schedule: Schedule::Cosine,
            max_iters: 2000,
            restarts: 4,
            seed: 0,
            tolerance: 0.0,
            reference_factor: 10,
            init_radius: 1.0,
            solve_linear: true,
        }
    }
}

fn default_barron_constant() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TikhonovConfig {
    pub k: u32,
    pub penalty: PenaltyKind,
    /// Neuron budget.
    pub n: usize,
    pub lambda_rule: LambdaRule,
    #[serde(default)]
    pub norm_hint: Option<f64>,
    /// `C(k)` in the Barron rule.
    #[serde(default = "default_barron_constant")]
    pub barron_constant: f64,
    /// Noise level for the lambda rules; taken from the dataset when absent.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub epsilon_target: f64,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

/// Inputs of the closed-form lambda rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaInputs {
    pub delta: f64,
    pub n: usize,
    pub norm_hint: Option<f64>,
    pub k: u32,
    pub d: usize,
    pub barron_constant: f64,
    pub epsilon: f64,
}

fn positive_hint(hint: Option<f64>) -> Result<f64> {
    match hint {
        Some(h) if h > 0.0 && h.is_finite() => Ok(h),
        Some(h) => Err(Error::config("norm_hint", format!("must be positive, got {h}"))),
        None => Err(Error::config("norm_hint", "required by this lambda rule")),
    }
}

/// The regularization parameter prescribed by `rule`. Grid search has no
/// closed form and is rejected here.
pub fn select_lambda(rule: &LambdaRule, p: &LambdaInputs) -> Result<f64> {
    let root_n = (p.n as f64).sqrt();
    let sqrt_lambda = match rule {
        LambdaRule::Explicit(v) => return Ok(*v),
        LambdaRule::GridSearch(_) => {
            return Err(Error::config("lambda_rule", "grid search selects lambda by fitting"))
        }
        LambdaRule::BarronRule => p.delta / positive_hint(p.norm_hint)? + p.barron_constant / root_n,
        LambdaRule::VariationRule => {
            let c = 2f64.powi(p.k as i32) * (p.d as f64).powf(p.k as f64 / 2.0);
            p.delta / positive_hint(p.norm_hint)? + c / root_n
        }
        LambdaRule::RadonBvRule => (p.delta + p.epsilon.sqrt()) / positive_hint(p.norm_hint)?,
    };
    Ok(sqrt_lambda * sqrt_lambda)
}

impl TikhonovConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(crate::io::parse_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k", "must be at least 1"));
        }
        if self.n == 0 {
            return Err(Error::config("n", "must be at least 1"));
        }
        let required = match self.lambda_rule {
            LambdaRule::BarronRule => Some(PenaltyKind::ExtendedBarron),
            LambdaRule::VariationRule => Some(PenaltyKind::Variation),
            LambdaRule::RadonBvRule => Some(PenaltyKind::RadonBV),
            _ => None,
        };
        if let Some(kind) = required {
            if kind != self.penalty {
                return Err(Error::config(
                    "lambda_rule",
                    format!("rule requires penalty {kind}, config has {}", self.penalty),
                ));
            }
            positive_hint(self.norm_hint)?;
        }
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        match &self.lambda_rule {
            LambdaRule::Explicit(v) if !nonneg(*v) => {
                return Err(Error::config("lambda_rule.explicit", format!("must be non-negative, got {v}")))
            }
            LambdaRule::GridSearch(g) if g.is_empty() || !g.iter().all(|v| nonneg(*v)) => {
                return Err(Error::config("lambda_rule.grid_search", "needs a non-empty list of non-negative values"))
            }
            _ => {}
        }
        if !(self.barron_constant > 0.0 && self.barron_constant.is_finite()) {
            return Err(Error::config("barron_constant", "must be positive"));
        }
        if let Some(d) = self.delta {
            if !nonneg(d) {
                return Err(Error::config("delta", "must be non-negative"));
            }
        }
        if !nonneg(self.epsilon_target) {
            return Err(Error::config("epsilon_target", "must be non-negative"));
        }
        let o = &self.optimizer;
        if o.step_size.is_some_and(|h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::config("optimizer.step_size", "must be positive"));
        }
        if o.max_iters == 0 {
            return Err(Error::config("optimizer.max_iters", "must be at least 1"));
        }
        if o.restarts == 0 {
            return Err(Error::config("optimizer.restarts", "must be at least 1"));
        }
        if !nonneg(o.tolerance) {
            return Err(Error::config("optimizer.tolerance", "must be non-negative"));
        }
        if o.reference_factor == 0 {
            return Err(Error::config("optimizer.reference_factor", "must be at least 1"));
        }
        if !(o.init_radius > 0.0 && o.init_radius.is_finite()) {
            return Err(Error::config("optimizer.init_radius", "must be positive"));
        }
        Ok(())
    }

    pub fn lambda_inputs(&self, d: usize) -> LambdaInputs {
        LambdaInputs {
            delta: self.delta.unwrap_or(0.0),
            n: self.n,
            norm_hint: self.norm_hint,
            k: self.k,
            d,
            barron_constant: self.barron_constant,
            epsilon: self.epsilon_target,
        }
    }

    /// Fills `delta` from the dataset when the config leaves it open.
    pub fn resolved(&self, data: &NoisyDataset) -> TikhonovConfig {
        let mut cfg = self.clone();
        if cfg.delta.is_none() {
            cfg.delta = Some(data.delta_nominal);
        }
        let o = &mut cfg.optimizer;
        o.method = o.method.resolve(cfg.penalty);
        o.step_size.get_or_insert(o.method.default_step_size());
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartSummary {
    pub index: usize,
    pub best_objective: f64,
    pub iterations: usize,
    pub reinitialized: usize,
    /// Best objective so far, sampled every [`CHECK_INTERVAL`] iterations.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub lambda: f64,
    pub objective: f64,
    pub fidelity: f64,
    pub penalty: f64,
}

fn serialize_model<S: Serializer>(net: &RepuNetwork, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::Error as _;
    let text = model_io::to_json(net).map_err(S::Error::custom)?;
    let raw = serde_json::value::RawValue::from_string(text.trim_end().to_string()).map_err(S::Error::custom)?;
    raw.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    #[serde(serialize_with = "serialize_model")]
    pub network: RepuNetwork,
    pub objective: f64,
    /// `|g - f_delta|` under the training weights (not squared).
    pub fidelity: f64,
    pub penalty: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub restart: usize,
    pub epsilon_achieved: f64,
    pub reference_objective: Option<f64>,
    pub restarts: Vec<RestartSummary>,
    pub grid: Vec<GridPoint>,
    pub wall_time_s: f64,
}

/// Objective value split into its two terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParts {
    pub fidelity_sq: f64,
    pub penalty: f64,
    pub objective: f64,
}

fn check_data(net: &RepuNetwork, data: &NoisyDataset) -> Result<()> {
    if net.d() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: net.d(),
        });
    }
    Ok(())
}

/// `sum_i w_i (g(x_i) - y_i)^2 + lambda * P(g)^2`.
pub fn objective(net: &RepuNetwork, data: &NoisyDataset, kind: PenaltyKind, lambda: f64) -> Result<f64> {
    Ok(objective_parts(net, data, kind, lambda)?.objective)
}

pub fn objective_parts(net: &RepuNetwork, data: &NoisyDataset, kind: PenaltyKind, lambda: f64) -> Result<ObjectiveParts> {
    check_data(net, data)?;
    let penalty = penalty_value(net, kind)?;
    let misfit = data.misfit(net);
    let fidelity_sq = misfit * misfit;
    Ok(ObjectiveParts {
        fidelity_sq,
        penalty,
        objective: fidelity_sq + lambda * penalty * penalty,
    })
}

/// Gradient of the objective in the [`RepuNetwork::params`] layout, using
/// `sign(0) = 0` for the nonsmooth penalty terms.
pub fn objective_gradient(net: &RepuNetwork, data: &NoisyDataset, kind: PenaltyKind, lambda: f64) -> Result<Vec<f64>> {
    check_data(net, data)?;
    check_constraints(net, kind)?;
    let problem = Problem::new(net, data, kind, lambda);
    let mut params = net.params();
    let mut grad = vec![0.0; params.len()];
    problem.evaluate(&mut params, Some(&mut grad), &mut Scratch::new(data.len()));
    Ok(grad)
}

/// `d^alpha net` at every point, one row per point and one column per alpha.
pub fn differentiate(net: &RepuNetwork, points: &[Vec<f64>], alphas: &[MultiIndex]) -> Result<Vec<Vec<f64>>> {
    for a in alphas {
        if a.order() > net.k() {
            return Err(Error::UnsupportedOrder {
                order: a.order() as usize,
                max: net.k() as usize,
            });
        }
    }
    points
        .iter()
        .map(|x| alphas.iter().map(|a| net.eval_derivative(a, x)).collect())
        .collect()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Column-major view of the training data plus everything needed to
/// evaluate the objective on a flat parameter vector.
struct Problem<'a> {
    k: u32,
    d: usize,
    width: usize,
    scale: f64,
    cols: Vec<Vec<f64>>,
    monomials: Vec<Vec<f64>>,
    y: &'a [f64],
    weights: &'a [f64],
    kind: PenaltyKind,
    lambda: f64,
    linear: Option<LinearBlock>,
}

/// The unpenalized linear parameters (the tail if present, otherwise `a0`)
/// and the pseudo-inverse of their weighted Gram matrix.
struct LinearBlock {
    indices: Vec<usize>,
    gram_pinv: DMatrix<f64>,
}

struct Scratch {
    pred: Vec<f64>,
    rho: Vec<f64>,
    z: Vec<f64>,
}

impl Scratch {
    fn new(len: usize) -> Self {
        Self {
            pred: vec![0.0; len],
            rho: vec![0.0; len],
            z: vec![0.0; len],
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Eval {
    objective: f64,
}

impl<'a> Problem<'a> {
    fn new(net: &RepuNetwork, data: &'a NoisyDataset, kind: PenaltyKind, lambda: f64) -> Self {
        let d = data.dim();
        let cols = (0..d).map(|l| (0..data.len()).map(|i| data.point(i)[l]).collect()).collect();
        let monomials = net
            .poly_tail()
            .unwrap_or(&[])
            .iter()
            .map(|t| (0..data.len()).map(|i| t.alpha.monomial(data.point(i))).collect())
            .collect();
        Self {
            k: net.k(),
            d,
            width: net.width(),
            scale: net.neuron_scale(),
            cols,
            monomials,
            y: data.values(),
            weights: data.weights(),
            kind,
            lambda,
            linear: None,
        }
    }

    fn basis(&self, index: usize, i: usize) -> f64 {
        if index == 0 {
            1.0
        } else {
            self.monomials[index - 1][i]
        }
    }

    /// Re-solve the unpenalized linear block exactly at every evaluation.
    fn with_linear_solve(mut self) -> Self {
        let indices: Vec<usize> = if self.monomials.is_empty() {
            vec![0]
        } else {
            (1..=self.monomials.len()).collect()
        };
        let t = indices.len();
        let gram = DMatrix::from_fn(t, t, |r, c| {
            (0..self.y.len())
                .map(|i| self.weights[i] * self.basis(indices[r], i) * self.basis(indices[c], i))
                .sum()
        });
        let gram_pinv = gram.pseudo_inverse(1e-12).expect("non-negative tolerance");
        self.linear = Some(LinearBlock { indices, gram_pinv });
        self
    }

    fn offset(&self) -> usize {
        1 + self.monomials.len()
    }

    fn stride(&self) -> usize {
        self.d + 2
    }

    fn preactivations(&self, w: &[f64], b: f64, z: &mut [f64]) {
        z.fill(b);
        for (wl, col) in w.iter().zip(&self.cols) {
            for (zi, xi) in z.iter_mut().zip(col) {
                *zi += wl * xi;
            }
        }
    }

    fn penalty(&self, p: &[f64]) -> f64 {
        let (off, stride, d) = (self.offset(), self.stride(), self.d);
        let mut total = 0.0;
        for j in 0..self.width {
            let base = off + j * stride;
            let a = p[base].abs();
            total += match self.kind {
                PenaltyKind::ExtendedBarron => {
                    let r: f64 = p[base + 1..base + 1 + d].iter().map(|w| w.abs()).sum::<f64>() + p[base + 1 + d].abs();
                    a * r.powi(self.k as i32)
                }
                PenaltyKind::Variation | PenaltyKind::RadonBV => a,
            };
        }
        match self.kind {
            PenaltyKind::ExtendedBarron if self.width > 0 => total / self.width as f64,
            _ => total,
        }
    }

    fn add_penalty_gradient(&self, p: &[f64], factor: f64, g: &mut [f64]) {
        let (off, stride, d, k) = (self.offset(), self.stride(), self.d, self.k);
        for j in 0..self.width {
            let base = off + j * stride;
            let a = p[base];
            match self.kind {
                PenaltyKind::ExtendedBarron => {
                    let c = factor / self.width as f64;
                    let r: f64 = p[base + 1..base + 1 + d].iter().map(|w| w.abs()).sum::<f64>() + p[base + 1 + d].abs();
                    g[base] += c * sign(a) * r.powi(k as i32);
                    let inner = c * a.abs() * k as f64 * r.powi(k as i32 - 1);
                    for q in base + 1..base + 2 + d {
                        g[q] += inner * sign(p[q]);
                    }
                }
                PenaltyKind::Variation | PenaltyKind::RadonBV => g[base] += factor * sign(a),
            }
        }
    }

    /// Objective at `p`; writes the full gradient into `grad` when given.
    ///
    /// With a linear block configured, its parameters in `p` are first
    /// replaced by the weighted least-squares fit to the neuron residual.
    fn evaluate(&self, p: &mut [f64], grad: Option<&mut [f64]>, sc: &mut Scratch) -> Eval {
        let (off, stride, d, k) = (self.offset(), self.stride(), self.d, self.k);
        let ki = k as i32;
        sc.pred.fill(0.0);
        for j in 0..self.width {
            let base = off + j * stride;
            let sa = self.scale * p[base];
            if sa == 0.0 {
                continue;
            }
            self.preactivations(&p[base + 1..base + 1 + d], p[base + 1 + d], &mut sc.z);
            match k {
                1 => forward_kernel::<1>(sa, &sc.z, &mut sc.pred),
                2 => forward_kernel::<2>(sa, &sc.z, &mut sc.pred),
                3 => forward_kernel::<3>(sa, &sc.z, &mut sc.pred),
                4 => forward_kernel::<4>(sa, &sc.z, &mut sc.pred),
                _ => {
                    for (pi, &z) in sc.pred.iter_mut().zip(&sc.z) {
                        *pi += sa * pow_k(z.max(0.0), ki);
                    }
                }
            }
        }
        if let Some(lin) = &self.linear {
            let fixed_a0 = if lin.indices.contains(&0) { 0.0 } else { p[0] };
            let rhs = DVector::from_iterator(
                lin.indices.len(),
                lin.indices.iter().map(|&idx| {
                    (0..self.y.len())
                        .map(|i| self.weights[i] * self.basis(idx, i) * (self.y[i] - sc.pred[i] - fixed_a0))
                        .sum::<f64>()
                }),
            );
            let c = &lin.gram_pinv * rhs;
            for (&idx, v) in lin.indices.iter().zip(c.iter()) {
                p[idx] = *v;
            }
        }
        let a0 = p[0];
        for v in sc.pred.iter_mut() {
            *v += a0;
        }
        for (t, col) in self.monomials.iter().enumerate() {
            let c = p[1 + t];
            for (pi, m) in sc.pred.iter_mut().zip(col) {
                *pi += c * m;
            }
        }
        let mut fid = 0.0;
        for i in 0..sc.pred.len() {
            let r = sc.pred[i] - self.y[i];
            fid += self.weights[i] * r * r;
            sc.rho[i] = 2.0 * self.weights[i] * r;
        }
        let pen = self.penalty(p);
        let objective = fid + self.lambda * pen * pen;
        let Some(g) = grad else {
            return Eval { objective };
        };
        g.fill(0.0);
        g[0] = sc.rho.iter().sum();
        for (t, col) in self.monomials.iter().enumerate() {
            g[1 + t] = dot(&sc.rho, col);
        }
        let kf = k as f64;
        for j in 0..self.width {
            let base = off + j * stride;
            let a = p[base];
            self.preactivations(&p[base + 1..base + 1 + d], p[base + 1 + d], &mut sc.z);
            // sc.z becomes rho_i * sigma_{k-1}(z_i)
            let (ga, gb) = match k {
                1 => backward_kernel::<1>(&mut sc.z, &sc.rho),
                2 => backward_kernel::<2>(&mut sc.z, &sc.rho),
                3 => backward_kernel::<3>(&mut sc.z, &sc.rho),
                4 => backward_kernel::<4>(&mut sc.z, &sc.rho),
                _ => backward_generic(ki, &mut sc.z, &sc.rho),
            };
            let c = self.scale * a * kf;
            g[base] = self.scale * ga;
            for (l, col) in self.cols.iter().enumerate() {
                let gw = dot(&sc.z, col);
                g[base + 1 + l] = c * gw;
            }
            g[base + 1 + d] = c * gb;
        }
        if self.lambda != 0.0 && pen != 0.0 {
            self.add_penalty_gradient(p, 2.0 * self.lambda * pen, g);
        }
        Eval { objective }
    }
}

const LANES: usize = 4;

/// Dot product with a fixed four-lane reduction order.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; LANES];
    let (ca, cb) = (a.chunks_exact(LANES), b.chunks_exact(LANES));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

fn forward_kernel<const K: i32>(sa: f64, z: &[f64], pred: &mut [f64]) {
    for (pi, &z) in pred.iter_mut().zip(z) {
        *pi += sa * pow_k(z.max(0.0), K);
    }
}

#[inline(always)]
fn activation_pair<const K: i32>(z: f64) -> (f64, f64) {
    let r = z.max(0.0);
    let q = if K == 1 {
        if z >= 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        pow_k(r, K - 1)
    };
    (q * r, q)
}

/// Returns `(sum rho sigma_k(z), sum rho sigma_{k-1}(z))` and overwrites `z`
/// with `rho sigma_{k-1}(z)`.
fn backward_kernel<const K: i32>(z: &mut [f64], rho: &[f64]) -> (f64, f64) {
    let mut acc_a = [0.0; LANES];
    let mut acc_b = [0.0; LANES];
    let mut zc = z.chunks_exact_mut(LANES);
    let mut rc = rho.chunks_exact(LANES);
    for (zs, rs) in (&mut zc).zip(&mut rc) {
        for l in 0..LANES {
            let (s_k, s_km1) = activation_pair::<K>(zs[l]);
            acc_a[l] += rs[l] * s_k;
            let t = rs[l] * s_km1;
            acc_b[l] += t;
            zs[l] = t;
        }
    }
    let (mut ga, mut gb) = (0.0, 0.0);
    for (zv, &r) in zc.into_remainder().iter_mut().zip(rc.remainder()) {
        let (s_k, s_km1) = activation_pair::<K>(*zv);
        ga += r * s_k;
        *zv = r * s_km1;
        gb += *zv;
    }
    (acc_a.iter().sum::<f64>() + ga, acc_b.iter().sum::<f64>() + gb)
}

fn backward_generic(k: i32, z: &mut [f64], rho: &[f64]) -> (f64, f64) {
    let (mut ga, mut gb) = (0.0, 0.0);
    for (zv, &r) in z.iter_mut().zip(rho) {
        let p = zv.max(0.0);
        let q = pow_k(p, k - 1);
        ga += r * q * p;
        *zv = r * q;
        gb += *zv;
    }
    (ga, gb)
}

#[inline(always)]
fn pow_k(r: f64, k: i32) -> f64 {
    match k {
        0 => 1.0,
        1 => r,
        2 => r * r,
        3 => r * r * r,
        _ => r.powi(k),
    }
}

fn random_neuron(cfg: &TikhonovConfig, d: usize, rng: &mut StreamRng) -> Neuron {
    let mut w = random_unit_vector(d, rng);
    if cfg.penalty == PenaltyKind::ExtendedBarron {
        for v in &mut w {
            *v *= cfg.optimizer.init_radius;
        }
    }
    let r = (d as f64).sqrt();
    let b = rng.random_range(-r..=r);
    let sd = match cfg.penalty.scaling() {
        crate::network::Scaling::MeanField => 1.0,
        crate::network::Scaling::Sum => 1.0 / (cfg.n as f64).sqrt(),
    };
    let a = Normal::new(0.0, sd).expect("positive standard deviation").sample(rng);
    Neuron::new(a, w, b)
}

/// Weighted least-squares fit of the polynomial tail to the data.
fn fit_tail(net: &mut RepuNetwork, data: &NoisyDataset) {
    let Some(tail) = net.poly_tail_mut() else { return };
    let (rows, cols) = (data.len(), tail.len());
    let a = DMatrix::from_fn(rows, cols, |i, t| data.weights()[i].sqrt() * tail[t].alpha.monomial(data.point(i)));
    let b = DVector::from_fn(rows, |i, _| data.weights()[i].sqrt() * data.values()[i]);
    if let Ok(c) = a.svd(true, true).solve(&b, 1e-12) {
        for (term, v) in tail.iter_mut().zip(c.iter()) {
            term.coef = *v;
        }
    }
}

fn initial_network(cfg: &TikhonovConfig, data: &NoisyDataset, rng: &mut StreamRng) -> Result<RepuNetwork> {
    let d = data.dim();
    let neurons = (0..cfg.n).map(|_| random_neuron(cfg, d, rng)).collect();
    let mut net = RepuNetwork::new(cfg.k, d, cfg.penalty.scaling())?.with_neurons(neurons)?;
    if cfg.penalty == PenaltyKind::RadonBV {
        net = net.with_zero_tail()?;
        fit_tail(&mut net, data);
    } else {
        let mean: f64 = data.values().iter().zip(data.weights()).map(|(v, w)| v * w).sum();
        net.set_a0(mean);
    }
    Ok(net)
}

struct RunOutcome {
    params: Vec<f64>,
    objective: f64,
    summary: RestartSummary,
}

fn step_size(o: &OptimizerConfig, t: usize, total: usize) -> f64 {
    let h = o.step_size.unwrap_or(o.method.default_step_size());
    match o.schedule {
        Schedule::Constant => h,
        Schedule::Cosine => 0.5 * h * (1.0 + (std::f64::consts::PI * t as f64 / total as f64).cos()),
    }
}

fn run_single(
    problem: &Problem,
    cfg: &TikhonovConfig,
    init: &RepuNetwork,
    iters: usize,
    index: usize,
    rng: &mut StreamRng,
) -> Result<RunOutcome> {
    let o = &cfg.optimizer;
    let mut p = init.params();
    let np = p.len();
    let freeze_a0 = cfg.penalty == PenaltyKind::RadonBV;
    let (off, stride, d) = (problem.offset(), problem.stride(), problem.d);
    let mut g = vec![0.0; np];
    let mut m = vec![0.0; np];
    let mut v = vec![0.0; np];
    let (beta1, beta2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut scratch = Scratch::new(problem.y.len());
    let mut best = f64::INFINITY;
    let mut best_p = p.clone();
    let mut trace = Vec::new();
    let mut checkpoint = f64::INFINITY;
    let mut reinitialized = 0;
    let mut steps = 0;
    for t in 0..=iters {
        let last = t == iters;
        let e = problem.evaluate(&mut p, if last { None } else { Some(&mut g) }, &mut scratch);
        if !e.objective.is_finite() {
            return Err(Error::Divergence {
                iteration: t,
                restart: index,
            });
        }
        if e.objective < best {
            best = e.objective;
            best_p.copy_from_slice(&p);
        }
        if t % CHECK_INTERVAL == 0 || last {
            trace.push(best);
            if o.tolerance > 0.0 && t > 0 && checkpoint - best <= o.tolerance * best.abs() {
                debug!("restart {index}: stalled at iteration {t}");
                break;
            }
            checkpoint = best;
        }
        if last {
            break;
        }
        if freeze_a0 {
            g[0] = 0.0;
        }
        let lr = step_size(o, t, iters);
        match o.method.resolve(cfg.penalty) {
            Method::Adam => {
                let bc1 = 1.0 - beta1.powi(t as i32 + 1);
                let bc2 = 1.0 - beta2.powi(t as i32 + 1);
                for q in 0..np {
                    m[q] = beta1 * m[q] + (1.0 - beta1) * g[q];
                    v[q] = beta2 * v[q] + (1.0 - beta2) * g[q] * g[q];
                    p[q] -= lr * (m[q] / bc1) / ((v[q] / bc2).sqrt() + eps);
                }
            }
            Method::Subgradient | Method::Auto => {
                for q in 0..np {
                    p[q] -= lr * g[q];
                }
            }
        }
        steps = t + 1;
        if cfg.penalty.constrained() {
            let (c1, c2) = PenaltyKind::bias_bounds(d);
            for j in 0..problem.width {
                let base = off + j * stride;
                let norm = p[base + 1..base + 1 + d].iter().map(|w| w * w).sum::<f64>().sqrt();
                if norm == 0.0 || !norm.is_finite() {
                    warn!("restart {index}: neuron {j} degenerated at iteration {t}, reinitializing");
                    reinitialized += 1;
                    let fresh = random_neuron(cfg, d, rng);
                    p[base] = 0.0;
                    p[base + 1..base + 1 + d].copy_from_slice(&fresh.w);
                    p[base + 1 + d] = fresh.b;
                    continue;
                }
                if (norm - 1.0).abs() > 4.0 * f64::EPSILON {
                    p[base] *= norm.powi(cfg.k as i32);
                    for w in &mut p[base + 1..base + 1 + d] {
                        *w /= norm;
                    }
                    p[base + 1 + d] /= norm;
                }
                p[base + 1 + d] = p[base + 1 + d].clamp(c1, c2);
            }
        }
    }
    info!("restart {index}: best objective {best:.6e} after {steps} iterations");
    Ok(RunOutcome {
        params: best_p,
        objective: best,
        summary: RestartSummary {
            index,
            best_objective: best,
            iterations: steps,
            reinitialized,
            trace,
        },
    })
}

fn fit_fixed_lambda(data: &NoisyDataset, cfg: &TikhonovConfig, lambda: f64) -> Result<FitReport> {
    let start = Instant::now();
    let o = &cfg.optimizer;
    let seeds = SeedStream::new(o.seed);
    let template = RepuNetwork::new(cfg.k, data.dim(), cfg.penalty.scaling())?;
    let template = if cfg.penalty == PenaltyKind::RadonBV { template.with_zero_tail()? } else { template };
    let template = template.with_neurons(vec![Neuron::new(0.0, vec![1.0; data.dim()], 0.0); cfg.n])?;
    let problem = Problem::new(&template, data, cfg.penalty, lambda);
    let problem = if o.solve_linear { problem.with_linear_solve() } else { problem };

    let run = |index: usize, stream: &str, iters: usize| -> Result<RunOutcome> {
        let mut rng = seeds.rng_indexed(stream, index as u64);
        let init = initial_network(cfg, data, &mut rng)?;
        run_single(&problem, cfg, &init, iters, index, &mut rng)
    };
    let outcomes: Vec<Result<RunOutcome>> = (0..o.restarts)
        .into_par_iter()
        .map(|i| run(i, "init", o.max_iters))
        .collect();
    let outcomes: Vec<RunOutcome> = outcomes.into_iter().collect::<Result<_>>()?;
    let mut chosen = 0;
    for (i, r) in outcomes.iter().enumerate() {
        if r.objective < outcomes[chosen].objective - TIE_TOLERANCE {
            chosen = i;
        }
    }
    let reference_objective = if cfg.penalty == PenaltyKind::RadonBV {
        let r = run(0, "reference", o.max_iters * o.reference_factor)?;
        Some(r.objective)
    } else {
        None
    };
    let mut net = template.clone();
    net.set_params(&outcomes[chosen].params)?;
    let parts = objective_parts(&net, data, cfg.penalty, lambda)?;
    let best_known = reference_objective.map_or(parts.objective, |r| r.min(parts.objective));
    Ok(FitReport {
        network: net,
        objective: parts.objective,
        fidelity: parts.fidelity_sq.sqrt(),
        penalty: parts.penalty,
        lambda,
        iterations: outcomes[chosen].summary.iterations,
        restart: chosen,
        epsilon_achieved: (parts.objective - best_known).max(0.0),
        reference_objective,
        restarts: outcomes.into_iter().map(|r| r.summary).collect(),
        grid: Vec::new(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Trains a network on `data` under `config`.
///
/// Grid search fits every listed lambda and keeps the largest one whose
/// fidelity is at most `2 delta`, falling back to the smallest lambda.
pub fn fit(data: &NoisyDataset, config: &TikhonovConfig) -> Result<FitReport> {
    config.validate()?;
    let cfg = config.resolved(data);
    let delta = cfg.delta.unwrap_or(0.0);
    match &cfg.lambda_rule {
        LambdaRule::GridSearch(values) => {
            let start = Instant::now();
            let mut grid: Vec<f64> = values.clone();
            grid.sort_by(f64::total_cmp);
            let reports: Vec<FitReport> = grid.iter().map(|&l| fit_fixed_lambda(data, &cfg, l)).collect::<Result<_>>()?;
            let points: Vec<GridPoint> = reports
                .iter()
                .map(|r| GridPoint {
                    lambda: r.lambda,
                    objective: r.objective,
                    fidelity: r.fidelity,
                    penalty: r.penalty,
                })
                .collect();
            let pick = reports.iter().rposition(|r| r.fidelity <= 2.0 * delta).unwrap_or(0);
            let mut report = reports.into_iter().nth(pick).expect("grid is non-empty");
            report.grid = points;
            report.wall_time_s = start.elapsed().as_secs_f64();
            Ok(report)
        }
        rule => {
            let lambda = select_lambda(rule, &cfg.lambda_inputs(data.dim()))?;
            fit_fixed_lambda(data, &cfg, lambda)
        }
    }
}
