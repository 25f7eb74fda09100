//! Shallow RePU networks: representation, exact evaluation and analytic
//! partial derivatives.
//!
//! A network of width `n` evaluates
//!
//! ```text
//!   f(x) = s * sum_i a_i * sigma_k(w_i . x + b_i) + a0 + P(x)
//! ```
//!
//! where `s = 1/n` for [`Scaling::MeanField`] and `s = 1` for
//! [`Scaling::Sum`], and `P` is an optional polynomial tail of total degree
//! at most `k` in the monomial basis.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, SmoothField};

/// `sigma_k(z) = max(0, z)^k`, with `sigma_0` the right-continuous Heaviside
/// step (`sigma_0(0) = 1`).
#[inline]
pub fn sigma(z: f64, k: u32) -> f64 {
    if z < 0.0 {
        return 0.0;
    }
    match k {
        0 => 1.0,
        1 => z,
        2 => z * z,
        3 => z * z * z,
        4 => {
            let z2 = z * z;
            z2 * z2
        }
        _ => z.powi(k as i32),
    }
}

/// `k! / (k - j)!`, the falling factorial. Zero when `j > k`.
pub fn falling_factorial(k: u32, j: u32) -> f64 {
    if j > k {
        return 0.0;
    }
    ((k - j + 1)..=k).fold(1.0, |acc, v| acc * f64::from(v))
}

/// Derivative orders `alpha = (alpha_1, ..., alpha_d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(orders: Vec<u32>) -> Self {
        MultiIndex(orders)
    }

    pub fn zeros(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    /// The unit index `e_j` in dimension `d`.
    pub fn unit(d: usize, j: usize) -> Self {
        let mut v = vec![0; d];
        v[j] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn orders(&self) -> &[u32] {
        &self.0
    }

    /// `|alpha| = sum_i alpha_i`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// `w^alpha = prod_i w_i^{alpha_i}`.
    pub fn pow(&self, w: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(w)
            .filter(|(&a, _)| a > 0)
            .map(|(&a, &wi)| wi.powi(a as i32))
            .product()
    }

    /// All multi-indices in dimension `d` with `|alpha| <= max_order`,
    /// ordered by total order and then lexicographically (descending in the
    /// first coordinate).
    pub fn all_up_to(d: usize, max_order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for s in 0..=max_order {
            out.extend(Self::all_of_order(d, s));
        }
        out
    }

    /// All multi-indices in dimension `d` with `|alpha| == order`.
    pub fn all_of_order(d: usize, order: u32) -> Vec<MultiIndex> {
        fn rec(d: usize, pos: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if pos + 1 == d {
                cur.push(remaining);
                out.push(MultiIndex(cur.clone()));
                cur.pop();
                return;
            }
            for a in (0..=remaining).rev() {
                cur.push(a);
                rec(d, pos + 1, remaining - a, cur, out);
                cur.pop();
            }
        }
        if d == 0 {
            return if order == 0 { vec![MultiIndex(vec![])] } else { vec![] };
        }
        let mut out = Vec::new();
        rec(d, 0, order, &mut Vec::with_capacity(d), &mut out);
        out
    }

    /// Value of `d^alpha x^self` at `x`.
    pub fn monomial_derivative(&self, alpha: &MultiIndex, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for ((&beta, &a), &xi) in self.0.iter().zip(&alpha.0).zip(x) {
            if a > beta {
                return 0.0;
            }
            v *= falling_factorial(beta, a) * xi.powi((beta - a) as i32);
        }
        v
    }

    /// Value of the monomial `x^self`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.pow(x)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl std::str::FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let orders = s
            .split(',')
            .map(|p| {
                p.trim().parse::<u32>().map_err(|_| {
                    Error::config("alpha", format!("`{s}` is not a comma-separated list of non-negative integers"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MultiIndex(orders))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// `(1/n) sum_i a_i sigma_k(...)`
    MeanField,
    /// `sum_i a_i sigma_k(...)`
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub a: f64,
    pub w: Vec<f64>,
    pub b: f64,
}

impl Neuron {
    pub fn new(a: f64, w: Vec<f64>, b: f64) -> Self {
        Self { a, w, b }
    }

    #[inline]
    pub fn preactivation(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b
    }

    pub fn w_norm_l1(&self) -> f64 {
        self.w.iter().map(|w| w.abs()).sum()
    }

    pub fn w_norm_l2(&self) -> f64 {
        self.w.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub coef: f64,
    pub alpha: MultiIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepuNetwork {
    k: u32,
    d: usize,
    scaling: Scaling,
    neurons: Vec<Neuron>,
    poly_tail: Option<Vec<PolyTerm>>,
    a0: f64,
}

impl RepuNetwork {
    /// An empty network: evaluates to `a0 = 0` everywhere.
    pub fn new(k: u32, d: usize, scaling: Scaling) -> Result<Self> {
        if k < 1 {
            return Err(Error::Domain(format!("RePU power must be at least 1, got {k}")));
        }
        if d < 1 {
            return Err(Error::Domain("input dimension must be at least 1".into()));
        }
        Ok(Self {
            k,
            d,
            scaling,
            neurons: Vec::new(),
            poly_tail: None,
            a0: 0.0,
        })
    }

    pub fn with_neurons(mut self, neurons: Vec<Neuron>) -> Result<Self> {
        for (i, n) in neurons.iter().enumerate() {
            self.check_neuron(i, n)?;
        }
        self.neurons = neurons;
        Ok(self)
    }

    pub fn with_a0(mut self, a0: f64) -> Self {
        self.a0 = a0;
        self
    }

    pub fn with_poly_tail(mut self, tail: Vec<PolyTerm>) -> Result<Self> {
        for (i, t) in tail.iter().enumerate() {
            self.check_term(i, t)?;
        }
        self.poly_tail = Some(tail);
        Ok(self)
    }

    /// Attach the full monomial basis of total degree `<= k` with zero
    /// coefficients; `binom(k + d, d)` terms.
    pub fn with_zero_tail(self) -> Result<Self> {
        let terms = MultiIndex::all_up_to(self.d, self.k)
            .into_iter()
            .map(|alpha| PolyTerm { coef: 0.0, alpha })
            .collect();
        self.with_poly_tail(terms)
    }

    pub fn push_neuron(&mut self, neuron: Neuron) -> Result<()> {
        self.check_neuron(self.neurons.len(), &neuron)?;
        self.neurons.push(neuron);
        Ok(())
    }

    fn check_neuron(&self, index: usize, n: &Neuron) -> Result<()> {
        if n.w.len() != self.d {
            return Err(Error::Invalid {
                path: format!("neurons[{index}].w"),
                message: format!("expected {} weights, found {}", self.d, n.w.len()),
            });
        }
        Ok(())
    }

    fn check_term(&self, index: usize, t: &PolyTerm) -> Result<()> {
        if t.alpha.dim() != self.d {
            return Err(Error::Invalid {
                path: format!("poly_tail[{index}].alpha"),
                message: format!("expected {} exponents, found {}", self.d, t.alpha.dim()),
            });
        }
        if t.alpha.order() > self.k {
            return Err(Error::Invalid {
                path: format!("poly_tail[{index}].alpha"),
                message: format!("total degree {} exceeds k = {}", t.alpha.order(), self.k),
            });
        }
        Ok(())
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }

    pub fn width(&self) -> usize {
        self.neurons.len()
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn neurons_mut(&mut self) -> &mut [Neuron] {
        &mut self.neurons
    }

    pub fn poly_tail(&self) -> Option<&[PolyTerm]> {
        self.poly_tail.as_deref()
    }

    pub fn poly_tail_mut(&mut self) -> Option<&mut Vec<PolyTerm>> {
        self.poly_tail.as_mut()
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn set_a0(&mut self, a0: f64) {
        self.a0 = a0;
    }

    /// The factor `s` multiplying the neuron sum.
    pub fn neuron_scale(&self) -> f64 {
        match self.scaling {
            Scaling::Sum => 1.0,
            Scaling::MeanField if self.neurons.is_empty() => 0.0,
            Scaling::MeanField => 1.0 / self.neurons.len() as f64,
        }
    }

    /// The same function expressed in the other scaling: `a_i` is multiplied
    /// by `n` going Sum -> MeanField and divided by `n` going back.
    pub fn to_scaling(&self, scaling: Scaling) -> RepuNetwork {
        let mut out = self.clone();
        if scaling == self.scaling || self.neurons.is_empty() {
            out.scaling = scaling;
            return out;
        }
        let n = self.neurons.len() as f64;
        let factor = match scaling {
            Scaling::MeanField => n,
            Scaling::Sum => 1.0 / n,
        };
        for neuron in &mut out.neurons {
            neuron.a *= factor;
        }
        out.scaling = scaling;
        out
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let s = self.neuron_scale();
        let body: f64 = self
            .neurons
            .iter()
            .map(|n| n.a * sigma(n.preactivation(x), self.k))
            .sum();
        let tail: f64 = self
            .poly_tail
            .iter()
            .flatten()
            .map(|t| t.coef * t.alpha.monomial(x))
            .sum();
        s * body + self.a0 + tail
    }

    /// `d^alpha f(x)` in closed form: each neuron contributes
    /// `a * k!/(k-|alpha|)! * w^alpha * sigma_{k-|alpha|}(w.x + b)`.
    pub fn eval_derivative(&self, alpha: &MultiIndex, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        if alpha.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: alpha.dim(),
            });
        }
        let order = alpha.order();
        if order > self.k {
            return Err(Error::UnsupportedOrder {
                order: order as usize,
                max: self.k as usize,
            });
        }
        Ok(self.derivative_unchecked(alpha, x))
    }

    pub(crate) fn derivative_unchecked(&self, alpha: &MultiIndex, x: &[f64]) -> f64 {
        let order = alpha.order();
        if order == 0 {
            return self.eval_unchecked(x);
        }
        let s = self.neuron_scale();
        let lower = self.k - order;
        let factor = falling_factorial(self.k, order);
        let body: f64 = self
            .neurons
            .iter()
            .map(|n| n.a * alpha.pow(&n.w) * sigma(n.preactivation(x), lower))
            .sum();
        let tail: f64 = self
            .poly_tail
            .iter()
            .flatten()
            .map(|t| t.coef * t.alpha.monomial_derivative(alpha, x))
            .sum();
        s * factor * body + tail
    }

    /// Gradient of `eval(x)` with respect to every parameter.
    pub fn param_gradient(&self, x: &[f64]) -> Result<ParamGradient> {
        self.check_point(x)?;
        let s = self.neuron_scale();
        let kf = f64::from(self.k);
        let neurons = self
            .neurons
            .iter()
            .map(|n| {
                let z = n.preactivation(x);
                let act = sigma(z, self.k);
                let slope = s * n.a * kf * sigma(z, self.k - 1);
                Neuron {
                    a: s * act,
                    w: x.iter().map(|xj| slope * xj).collect(),
                    b: slope,
                }
            })
            .collect();
        let tail = self
            .poly_tail
            .iter()
            .flatten()
            .map(|t| t.alpha.monomial(x))
            .collect();
        Ok(ParamGradient {
            a0: 1.0,
            tail,
            neurons,
        })
    }

    /// Number of scalar parameters in the flat layout
    /// `[a0, tail coefs..., (a, w_1..w_d, b) per neuron]`.
    pub fn param_count(&self) -> usize {
        1 + self.poly_tail.as_ref().map_or(0, |t| t.len()) + self.neurons.len() * (self.d + 2)
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        out.push(self.a0);
        out.extend(self.poly_tail.iter().flatten().map(|t| t.coef));
        for n in &self.neurons {
            out.push(n.a);
            out.extend_from_slice(&n.w);
            out.push(n.b);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                found: params.len(),
            });
        }
        let mut it = params.iter().copied();
        self.a0 = it.next().unwrap_or(0.0);
        for t in self.poly_tail.iter_mut().flatten() {
            t.coef = it.next().unwrap_or(0.0);
        }
        for n in &mut self.neurons {
            n.a = it.next().unwrap_or(0.0);
            for w in &mut n.w {
                *w = it.next().unwrap_or(0.0);
            }
            n.b = it.next().unwrap_or(0.0);
        }
        Ok(())
    }
}

impl ScalarField for RepuNetwork {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval_unchecked(x)
    }
}

impl SmoothField for RepuNetwork {
    fn max_order(&self) -> Option<u32> {
        Some(self.k)
    }

    fn derivative(&self, alpha: &MultiIndex, x: &[f64]) -> f64 {
        self.derivative_unchecked(alpha, x)
    }
}

/// Parameter-shaped record used for gradients and subgradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient {
    pub a0: f64,
    pub tail: Vec<f64>,
    pub neurons: Vec<Neuron>,
}

impl ParamGradient {
    pub fn zeros_like(net: &RepuNetwork) -> Self {
        Self {
            a0: 0.0,
            tail: vec![0.0; net.poly_tail().map_or(0, |t| t.len())],
            neurons: net
                .neurons()
                .iter()
                .map(|n| Neuron::new(0.0, vec![0.0; n.w.len()], 0.0))
                .collect(),
        }
    }

    /// Flatten in the same order as [`RepuNetwork::params`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = vec![self.a0];
        out.extend_from_slice(&self.tail);
        for n in &self.neurons {
            out.push(n.a);
            out.extend_from_slice(&n.w);
            out.push(n.b);
        }
        out
    }
}
