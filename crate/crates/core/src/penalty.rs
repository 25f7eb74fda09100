//! The three penalty functionals on finite networks, their subgradients and
//! the parameter constraints each regime imposes.
//!
//! | kind              | scaling    | constraint                          | value                                   |
//! |-------------------|------------|-------------------------------------|-----------------------------------------|
//! | `ExtendedBarron`  | MeanField  | none                                | `(1/n) sum |a_i| (|w_i|_1 + |b_i|)^k`  |
//! | `Variation`       | Sum        | `|w_i|_2 = 1`, `b_i in [-sqrt d, sqrt d]` | `sum |a_i|`                       |
//! | `RadonBV`         | Sum + tail | `|w_i|_2 = 1`                       | `sum |a_i|` (tail is in the null space) |
//!
//! The Radon-BV value is an upper bound on the seminorm: two neurons on
//! antipodal dictionary points may cancel in the exact total variation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Neuron, ParamGradient, RepuNetwork, Scaling};

/// `|w|_2` must be within this distance of 1 to count as feasible.
pub const SPHERE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    ExtendedBarron,
    Variation,
    #[serde(rename = "radon_bv")]
    RadonBV,
}

impl PenaltyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PenaltyKind::ExtendedBarron => "extended_barron",
            PenaltyKind::Variation => "variation",
            PenaltyKind::RadonBV => "radon_bv",
        }
    }

    pub fn scaling(&self) -> Scaling {
        match self {
            PenaltyKind::ExtendedBarron => Scaling::MeanField,
            PenaltyKind::Variation | PenaltyKind::RadonBV => Scaling::Sum,
        }
    }

    pub fn constrained(&self) -> bool {
        !matches!(self, PenaltyKind::ExtendedBarron)
    }

    /// Dictionary bias bounds `[c1, c2] = [-sqrt d, sqrt d]`.
    pub fn bias_bounds(d: usize) -> (f64, f64) {
        let r = (d as f64).sqrt();
        (-r, r)
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "extended_barron" => Ok(PenaltyKind::ExtendedBarron),
            "variation" => Ok(PenaltyKind::Variation),
            "radon_bv" => Ok(PenaltyKind::RadonBV),
            other => Err(Error::config(
                "penalty",
                format!("unknown penalty `{other}` (expected extended_barron, variation or radon_bv)"),
            )),
        }
    }
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Verifies that `net` lies in the parameter class of `kind`.
pub fn check_constraints(net: &RepuNetwork, kind: PenaltyKind) -> Result<()> {
    if net.scaling() != kind.scaling() {
        return Err(Error::Constraint(format!(
            "{kind} penalty requires {:?} scaling, network uses {:?}",
            kind.scaling(),
            net.scaling()
        )));
    }
    if kind == PenaltyKind::RadonBV && net.poly_tail().is_none() {
        return Err(Error::Constraint("radon_bv penalty requires a polynomial tail".into()));
    }
    if !kind.constrained() {
        return Ok(());
    }
    let (c1, c2) = PenaltyKind::bias_bounds(net.d());
    for (i, n) in net.neurons().iter().enumerate() {
        let norm = n.w_norm_l2();
        if (norm - 1.0).abs() > SPHERE_TOLERANCE {
            return Err(Error::Constraint(format!("neuron {i}: |w|_2 = {norm} is not 1")));
        }
        if kind == PenaltyKind::Variation && (n.b < c1 - SPHERE_TOLERANCE || n.b > c2 + SPHERE_TOLERANCE) {
            return Err(Error::Constraint(format!("neuron {i}: b = {} outside [{c1}, {c2}]", n.b)));
        }
    }
    Ok(())
}

/// Unsquared penalty value; the Tikhonov functional squares it.
pub fn penalty_value(net: &RepuNetwork, kind: PenaltyKind) -> Result<f64> {
    check_constraints(net, kind)?;
    Ok(penalty_value_unchecked(net, kind))
}

pub(crate) fn penalty_value_unchecked(net: &RepuNetwork, kind: PenaltyKind) -> f64 {
    match kind {
        PenaltyKind::ExtendedBarron => {
            if net.width() == 0 {
                return 0.0;
            }
            let k = net.k() as i32;
            let total = sorted_sum(
                net.neurons()
                    .iter()
                    .map(|n| n.a.abs() * (n.w_norm_l1() + n.b.abs()).powi(k))
                    .collect(),
            );
            total / net.width() as f64
        }
        PenaltyKind::Variation | PenaltyKind::RadonBV => sorted_sum(net.neurons().iter().map(|n| n.a.abs()).collect()),
    }
}

/// Sum in ascending order, so the result does not depend on neuron order.
fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// A subgradient of [`penalty_value`], using `sign(0) = 0` throughout.
pub fn penalty_subgradient(net: &RepuNetwork, kind: PenaltyKind) -> Result<ParamGradient> {
    check_constraints(net, kind)?;
    let mut g = ParamGradient::zeros_like(net);
    match kind {
        PenaltyKind::ExtendedBarron => {
            if net.width() == 0 {
                return Ok(g);
            }
            let inv_n = 1.0 / net.width() as f64;
            let k = net.k() as i32;
            let kf = f64::from(net.k());
            for (gn, n) in g.neurons.iter_mut().zip(net.neurons()) {
                let r = n.w_norm_l1() + n.b.abs();
                gn.a = sign(n.a) * r.powi(k) * inv_n;
                let outer = n.a.abs() * kf * r.powi(k - 1) * inv_n;
                for (gw, w) in gn.w.iter_mut().zip(&n.w) {
                    *gw = outer * sign(*w);
                }
                gn.b = outer * sign(n.b);
            }
        }
        PenaltyKind::Variation | PenaltyKind::RadonBV => {
            for (gn, n) in g.neurons.iter_mut().zip(net.neurons()) {
                gn.a = sign(n.a);
            }
        }
    }
    Ok(g)
}

/// Rescales one neuron onto the unit sphere without changing its output,
/// then clamps the bias to `[-sqrt d, sqrt d]`. Returns false, leaving the
/// neuron untouched, when `w` is zero or not finite.
pub fn project_neuron(neuron: &mut Neuron, k: u32) -> bool {
    let norm = neuron.w_norm_l2();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    if (norm - 1.0).abs() > 4.0 * f64::EPSILON {
        // sigma_k(w.x + b) = |w|^k sigma_k((w/|w|).x + b/|w|)
        neuron.a *= norm.powi(k as i32);
        for w in &mut neuron.w {
            *w /= norm;
        }
        neuron.b /= norm;
    }
    let (c1, c2) = PenaltyKind::bias_bounds(neuron.w.len());
    neuron.b = neuron.b.clamp(c1, c2);
    true
}

/// Projects every neuron onto the dictionary of the constrained regimes.
pub fn project_constraints(net: &RepuNetwork, kind: PenaltyKind) -> Result<RepuNetwork> {
    if !kind.constrained() {
        return Err(Error::Domain(format!("{kind} has no parameter constraints to project onto")));
    }
    let mut out = net.clone();
    let k = out.k();
    for (i, n) in out.neurons_mut().iter_mut().enumerate() {
        if !project_neuron(n, k) {
            return Err(Error::DegenerateNeuron { index: i });
        }
    }
    Ok(out)
}
