//! Convergence-rate sweeps of the regularized fit over the noise level, the
//! neuron budget or the dimension.

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{fit_loglog, SlopeFit};
use crate::datagen::{make_noisy_dataset, make_target, NoiseKind, TargetSpec};
use crate::error::{Error, Result};
use crate::penalty::{check_constraints, PenaltyKind};
use crate::quadrature::{sobolev_distance, Estimate, QuadratureRule, RuleKind};
use crate::solver::{fit, TikhonovConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Delta,
    N,
    D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    /// Ignored on the `d` axis, which uses `CoordinateNeuron` targets.
    pub target: TargetSpec,
    #[serde(default)]
    pub target_seed: u64,
    /// Base solver configuration; `n` and `delta` are overridden per point
    /// and a missing `norm_hint` is filled from the target's norm bounds.
    pub tikhonov: TikhonovConfig,
    /// Noise level on the `n` and `d` axes.
    #[serde(default)]
    pub delta: f64,
    pub training_rule: RuleKind,
    /// Error-measurement rule; the dimension default when absent.
    #[serde(default)]
    pub eval_rule: Option<RuleKind>,
    #[serde(default)]
    pub noise: NoiseKind,
    #[serde(default)]
    pub noise_seed: u64,
    /// Highest Sobolev order measured; `min(k, 2)` when absent.
    #[serde(default)]
    pub m_max: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFit {
    pub lambda: f64,
    pub objective: f64,
    pub fidelity: f64,
    pub penalty: f64,
    pub epsilon_achieved: f64,
    pub reference_objective: Option<f64>,
    /// Whether the fitted network satisfies the penalty's constraints.
    pub feasible: bool,
    /// `|net - f|_{H^m}` for `m = 0..=m_max`.
    pub errors: Vec<Estimate>,
    /// `errors[m] / envelope^{(k-m)/k}`.
    pub bound_ratios: Vec<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub axis_value: f64,
    pub delta: f64,
    pub n: usize,
    pub d: usize,
    pub target_norm_bound: Option<f64>,
    /// `delta + n^{-1/2}`, or `delta + sqrt(epsilon)` for Radon-BV.
    pub envelope: f64,
    pub fit: Option<PointFit>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub penalty: PenaltyKind,
    pub k: u32,
    pub m_max: u32,
    /// Theoretical exponents `(k - m)/k`.
    pub exponents: Vec<f64>,
    /// Log-log slope of `errors[m]` against the axis value, over the
    /// successful points with positive axis value.
    pub slopes: Vec<Option<SlopeFit>>,
    pub points: Vec<RatePoint>,
}

impl RateReport {
    /// Errors of order `m` at the successful points, in grid order.
    pub fn errors(&self, m: u32) -> Vec<Estimate> {
        self.points
            .iter()
            .filter_map(|p| p.fit.as_ref().map(|f| f.errors[m as usize]))
            .collect()
    }

    /// Copy with every wall-time field zeroed.
    pub fn without_timing(&self) -> RateReport {
        let mut r = self.clone();
        for p in &mut r.points {
            if let Some(f) = &mut p.fit {
                f.wall_time_s = 0.0;
            }
        }
        r
    }
}

fn as_count(v: f64, key: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::config(key, format!("grid value {v} is not a positive integer")))
    }
}

/// Runs the sweep point by point. Setup errors abort the sweep; a fit that
/// fails is recorded on its point and the sweep continues.
pub fn rate_sweep(spec: &SweepSpec) -> Result<RateReport> {
    if spec.grid.is_empty() {
        return Err(Error::config("grid", "must not be empty"));
    }
    let base = &spec.tikhonov;
    let k = base.k;
    if spec.target.k() != k {
        return Err(Error::config("target.k", format!("must match tikhonov.k = {k}")));
    }
    let m_max = spec.m_max.unwrap_or(k.min(2));
    if m_max > k {
        return Err(Error::config("m_max", format!("must not exceed k = {k}")));
    }
    let mut points = Vec::with_capacity(spec.grid.len());
    for &v in &spec.grid {
        let (delta, n, target_spec) = match spec.axis {
            SweepAxis::Delta => {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::config("grid", format!("noise level {v} must be non-negative")));
                }
                (v, base.n, spec.target.clone())
            }
            SweepAxis::N => (spec.delta, as_count(v, "grid")?, spec.target.clone()),
            SweepAxis::D => (spec.delta, base.n, TargetSpec::CoordinateNeuron { k, d: as_count(v, "grid")? }),
        };
        let d = target_spec.d();
        let target = make_target(&target_spec, spec.target_seed)?;
        let train = QuadratureRule::build(&spec.training_rule, d)?;
        let eval_kind = spec.eval_rule.clone().unwrap_or_else(|| RuleKind::default_for_dim(d, spec.target_seed));
        let eval = QuadratureRule::build(&eval_kind, d)?;
        let data = make_noisy_dataset(&target, &train, delta, spec.noise, spec.noise_seed)?;
        let mut cfg = base.clone();
        cfg.n = n;
        cfg.delta = Some(delta);
        if cfg.norm_hint.is_none() {
            cfg.norm_hint = target.known_norm_bounds.map(|b| b.for_penalty(cfg.penalty));
        }
        cfg.validate()?;
        let envelope = match cfg.penalty {
            PenaltyKind::RadonBV => delta + cfg.epsilon_target.sqrt(),
            _ => delta + 1.0 / (n as f64).sqrt(),
        };
        let mut point = RatePoint {
            axis_value: v,
            delta,
            n,
            d,
            target_norm_bound: cfg.norm_hint,
            envelope,
            fit: None,
            failure: None,
        };
        match fit(&data, &cfg) {
            Ok(r) => {
                let errors = (0..=m_max)
                    .map(|m| sobolev_distance(&r.network, &target, m, &eval))
                    .collect::<Result<Vec<_>>>()?;
                let bound_ratios = errors
                    .iter()
                    .enumerate()
                    .map(|(m, e)| e.value / envelope.powf((k as f64 - m as f64) / k as f64))
                    .collect();
                info!("sweep point {v}: lambda {:.3e}, L2 error {:.4e}", r.lambda, errors[0].value);
                point.fit = Some(PointFit {
                    lambda: r.lambda,
                    objective: r.objective,
                    fidelity: r.fidelity,
                    penalty: r.penalty,
                    epsilon_achieved: r.epsilon_achieved,
                    reference_objective: r.reference_objective,
                    feasible: check_constraints(&r.network, cfg.penalty).is_ok(),
                    errors,
                    bound_ratios,
                    wall_time_s: r.wall_time_s,
                });
            }
            Err(e) => {
                warn!("sweep point {v} failed: {e}");
                point.failure = Some(e.to_string());
            }
        }
        points.push(point);
    }
    let slopes = (0..=m_max)
        .map(|m| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = points
                .iter()
                .filter(|p| p.axis_value > 0.0)
                .filter_map(|p| p.fit.as_ref().map(|f| (p.axis_value, f.errors[m as usize].value)))
                .unzip();
            fit_loglog(&xs, &ys)
        })
        .collect();
    Ok(RateReport {
        axis: spec.axis,
        grid: spec.grid.clone(),
        penalty: base.penalty,
        k,
        m_max,
        exponents: (0..=m_max).map(|m| (k - m) as f64 / k as f64).collect(),
        slopes,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{LambdaRule, OptimizerConfig};

    fn spec(axis: SweepAxis, grid: Vec<f64>) -> SweepSpec {
        SweepSpec {
            axis,
            grid,
            target: TargetSpec::ReferenceNetwork { k: 2, d: 2, neurons: 3 },
            target_seed: 1,
            tikhonov: TikhonovConfig {
                k: 2,
                penalty: PenaltyKind::ExtendedBarron,
                n: 8,
                lambda_rule: LambdaRule::BarronRule,
                norm_hint: None,
                barron_constant: 1.0,
                delta: None,
                epsilon_target: 0.0,
                optimizer: OptimizerConfig {
                    max_iters: 100,
                    restarts: 1,
                    ..Default::default()
                },
            },
            delta: 0.01,
            training_rule: RuleKind::Lattice { n: 256, shifts: 1, seed: 0 },
            eval_rule: Some(RuleKind::TensorGaussLegendre { q: 8 }),
            noise: NoiseKind::L2CalibratedField,
            noise_seed: 2,
            m_max: None,
        }
    }

    #[test]
    fn delta_sweep_reports_every_point() {
        let r = rate_sweep(&spec(SweepAxis::Delta, vec![0.01, 0.1])).unwrap();
        assert_eq!(r.points.len(), 2);
        assert_eq!(r.m_max, 2);
        assert_eq!(r.exponents, vec![1.0, 0.5, 0.0]);
        for p in &r.points {
            let f = p.fit.as_ref().unwrap();
            assert_eq!(f.errors.len(), 3);
            assert!(f.errors.iter().all(|e| e.value >= 0.0));
            assert!((p.envelope - (p.delta + 1.0 / 8f64.sqrt())).abs() < 1e-15);
            assert!(p.target_norm_bound.unwrap() > 0.0);
        }
        assert!(r.slopes.iter().all(|s| s.is_some()));
        let again = rate_sweep(&spec(SweepAxis::Delta, vec![0.01, 0.1])).unwrap();
        assert_eq!(again.without_timing(), r.without_timing());
    }

    #[test]
    fn n_and_d_axes_set_the_swept_quantity() {
        let r = rate_sweep(&spec(SweepAxis::N, vec![2.0, 4.0])).unwrap();
        assert_eq!(r.points.iter().map(|p| p.n).collect::<Vec<_>>(), vec![2, 4]);
        let mut s = spec(SweepAxis::D, vec![1.0, 3.0]);
        s.eval_rule = None;
        let r = rate_sweep(&s).unwrap();
        assert_eq!(r.points.iter().map(|p| p.d).collect::<Vec<_>>(), vec![1, 3]);
        assert!(r.points.iter().all(|p| p.target_norm_bound == Some(1.0)));
    }

    #[test]
    fn failing_fit_is_recorded_not_fatal() {
        let mut s = spec(SweepAxis::Delta, vec![0.01]);
        s.tikhonov.optimizer.method = crate::solver::Method::Subgradient;
        s.tikhonov.optimizer.step_size = Some(1e6);
        let r = rate_sweep(&s).unwrap();
        assert!(r.points[0].fit.is_none());
        assert!(r.points[0].failure.is_some());
        assert!(r.slopes[0].is_none());
    }

    #[test]
    fn bad_grid_values_are_config_errors() {
        assert!(matches!(rate_sweep(&spec(SweepAxis::N, vec![2.5])), Err(Error::Config { .. })));
        assert!(matches!(rate_sweep(&spec(SweepAxis::Delta, vec![])), Err(Error::Config { .. })));
    }
}
