//! Monte Carlo construction of `n`-neuron approximants from a finite
//! representing measure, and the resulting `n^{-1/2}` rate.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_loglog, SlopeFit};
use crate::datagen::random_dictionary_neuron;
use crate::error::{Error, Result};
use crate::io::pairwise_sum;
use crate::network::{sigma, Neuron};
use crate::penalty::{PenaltyKind, SPHERE_TOLERANCE};
use crate::quadrature::QuadratureRule;
use crate::rng::SeedStream;

/// One point mass of a discrete measure over neurons: probability `weight`
/// on `neuron`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub neuron: Neuron,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McMode {
    /// `f = sum_j p_j a_j sigma_k(w_j.x + b_j)`; draw atoms from `p` and
    /// average `a sigma_k(...)`.
    Barron,
    /// `f = sum_j c_j g_j` with `c_j = p_j a_j` on dictionary elements; draw
    /// from `|c| / |mu|` and average `|mu| sign(c) g`.
    Variation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McPoint {
    pub n: usize,
    /// Mean of `|f - f_n|^2_{L2}` over trials.
    pub mean_sq_error: f64,
    /// Standard error of that mean.
    pub std_error: f64,
    pub rms_error: f64,
    /// Exact `E|f - f_n|^2` of the sampling scheme.
    pub expected_sq_error: f64,
    /// Theoretical ceiling on `E|f - f_n|^2`.
    pub ceiling: f64,
    pub within_ceiling: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub mode: McMode,
    pub d: usize,
    pub k: u32,
    pub trials: usize,
    /// `|mu|` in variation mode, `E_p[a^2 (|w|_1 + |b|)^{2k}]` in Barron mode.
    pub mass: f64,
    pub points: Vec<McPoint>,
    /// Slope of `ln rms_error` against `ln n`; `None` if any error is zero.
    pub slope: Option<SlopeFit>,
    pub all_within_ceiling: bool,
}

/// `count` dictionary atoms with random probabilities and `a` uniform in
/// `[-1, 1]`.
pub fn random_atoms(count: usize, d: usize, seed: u64) -> Vec<Atom> {
    let mut rng = SeedStream::new(seed).rng("atoms");
    let mut atoms: Vec<Atom> = (0..count)
        .map(|_| {
            let weight = rng.random_range(0.05..1.0);
            let a = rng.random_range(-1.0..=1.0);
            Atom {
                weight,
                neuron: random_dictionary_neuron(d, a, &mut rng),
            }
        })
        .collect();
    let total: f64 = atoms.iter().map(|a| a.weight).sum();
    for a in &mut atoms {
        a.weight /= total;
    }
    atoms
}

fn validate(atoms: &[Atom], mode: McMode, d: usize) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::config("atoms", "at least one atom required"));
    }
    let mut total = 0.0;
    for (i, a) in atoms.iter().enumerate() {
        if !(a.weight >= 0.0 && a.weight.is_finite()) {
            return Err(Error::config("atoms", format!("atom {i}: weight {} is not a probability", a.weight)));
        }
        if a.neuron.w.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: a.neuron.w.len(),
            });
        }
        if mode == McMode::Variation {
            let (lo, hi) = PenaltyKind::bias_bounds(d);
            let norm = a.neuron.w_norm_l2();
            if (norm - 1.0).abs() > SPHERE_TOLERANCE || a.neuron.b < lo || a.neuron.b > hi {
                return Err(Error::Constraint(format!("atom {i} is not a dictionary element")));
            }
        }
        total += a.weight;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::config("atoms", format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Estimates `E|f - f_n|^2_{L2}` for each `n` in `ns` over `trials`
/// independent samplings, with draws from the "mc" stream of `seed`.
pub fn mc_construction(
    atoms: &[Atom],
    mode: McMode,
    k: u32,
    ns: &[usize],
    trials: usize,
    rule: &QuadratureRule,
    seed: u64,
) -> Result<McReport> {
    let d = rule.dim();
    validate(atoms, mode, d)?;
    if trials < 2 {
        return Err(Error::config("trials", "at least 2 trials required"));
    }
    if ns.contains(&0) {
        return Err(Error::config("ns", "sample sizes must be positive"));
    }
    // Sampling probabilities and the sampled function values h_j at the nodes.
    let (probs, scale): (Vec<f64>, Vec<f64>) = match mode {
        McMode::Barron => atoms.iter().map(|a| (a.weight, a.neuron.a)).unzip(),
        McMode::Variation => {
            let mass: f64 = atoms.iter().map(|a| (a.weight * a.neuron.a).abs()).sum();
            atoms
                .iter()
                .map(|a| {
                    let c = a.weight * a.neuron.a;
                    if mass == 0.0 {
                        (a.weight, 0.0)
                    } else {
                        (c.abs() / mass, mass * c.signum())
                    }
                })
                .unzip()
        }
    };
    let h: Vec<Vec<f64>> = atoms
        .iter()
        .zip(&scale)
        .map(|(a, s)| rule.evaluate(|x| s * sigma(a.neuron.preactivation(x), k)))
        .collect();
    let target: Vec<f64> = (0..rule.len()).map(|i| probs.iter().zip(&h).map(|(p, hj)| p * hj[i]).sum()).collect();
    let norm_sq = |v: &[f64]| pairwise_sum(&v.iter().zip(rule.weights()).map(|(x, w)| w * x * x).collect::<Vec<_>>());
    let second_moment: f64 = probs.iter().zip(&h).map(|(p, hj)| p * norm_sq(hj)).sum();
    let variance = (second_moment - norm_sq(&target)).max(0.0);

    let kf = k as i32;
    let mass = match mode {
        McMode::Barron => atoms
            .iter()
            .map(|a| a.weight * a.neuron.a.powi(2) * (a.neuron.w_norm_l1() + a.neuron.b.abs()).powi(2 * kf))
            .sum(),
        McMode::Variation => atoms.iter().map(|a| (a.weight * a.neuron.a).abs()).sum::<f64>(),
    };
    let numerator = match mode {
        McMode::Barron => mass,
        McMode::Variation => mass * mass * 4f64.powi(kf) * (d as f64).powi(kf),
    };

    let sampler = WeightedIndex::new(&probs).map_err(|e| Error::config("atoms", e.to_string()))?;
    let streams = SeedStream::new(seed);
    let mut points = Vec::with_capacity(ns.len());
    for (gi, &n) in ns.iter().enumerate() {
        let errors: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = streams.rng_indexed("mc", ((gi as u64) << 32) | t as u64);
                let mut counts = vec![0usize; atoms.len()];
                for _ in 0..n {
                    counts[sampler.sample(&mut rng)] += 1;
                }
                let diff: Vec<f64> = (0..rule.len())
                    .map(|i| {
                        let fn_i: f64 = counts.iter().zip(&h).map(|(&c, hj)| c as f64 * hj[i]).sum::<f64>() / n as f64;
                        target[i] - fn_i
                    })
                    .collect();
                norm_sq(&diff)
            })
            .collect();
        let tf = trials as f64;
        let mean = pairwise_sum(&errors) / tf;
        let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (tf - 1.0);
        let std_error = (var / tf).sqrt();
        let ceiling = numerator / n as f64;
        points.push(McPoint {
            n,
            mean_sq_error: mean,
            std_error,
            rms_error: mean.sqrt(),
            expected_sq_error: variance / n as f64,
            ceiling,
            within_ceiling: mean <= ceiling + 3.0 * std_error,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.rms_error).collect();
    Ok(McReport {
        mode,
        d,
        k,
        trials,
        mass,
        all_within_ceiling: points.iter().all(|p| p.within_ceiling),
        slope: fit_loglog(&xs, &ys),
        points,
    })
}
