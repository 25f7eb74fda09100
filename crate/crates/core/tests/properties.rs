//! Property tests for the invariants of the network, penalty, quadrature,
//! data generation, solver and analysis modules.

use proptest::prelude::*;
use rand::Rng;

use repu_tik::analysis::{barron_term, check_embedding, norm_relation_check, random_feasible_net, variation_term};
use repu_tik::datagen::{make_noisy_dataset, make_target, Factor1d, NoiseKind, TargetSpec};
use repu_tik::field::{ScalarField, SmoothField};
use repu_tik::network::{MultiIndex, Neuron, PolyTerm, RepuNetwork, Scaling};
use repu_tik::penalty::{penalty_subgradient, penalty_value, project_constraints, PenaltyKind};
use repu_tik::quadrature::{l2_distance, sobolev_norm, QuadratureRule};
use repu_tik::rng::SeedStream;
use repu_tik::solver::objective_parts;

/// Raw neuron parameters: `(a, w, b)` with `w` of length `d`.
type RawNeurons = Vec<(f64, Vec<f64>, f64)>;

fn raw_neurons(d: usize, max_width: usize) -> impl Strategy<Value = RawNeurons> {
    prop::collection::vec((-2.0..2.0f64, prop::collection::vec(-2.0..2.0f64, d), -2.0..2.0f64), 1..=max_width)
}

fn build(k: u32, d: usize, scaling: Scaling, raw: &[(f64, Vec<f64>, f64)]) -> RepuNetwork {
    let neurons = raw.iter().map(|(a, w, b)| Neuron::new(*a, w.clone(), *b)).collect();
    RepuNetwork::new(k, d, scaling).unwrap().with_neurons(neurons).unwrap()
}

/// `(k, d, neurons, point)`.
fn net_and_point(max_k: u32, max_d: usize) -> impl Strategy<Value = (u32, usize, RawNeurons, Vec<f64>)> {
    (1..=max_k, 1..=max_d).prop_flat_map(|(k, d)| {
        (Just(k), Just(d), raw_neurons(d, 6), prop::collection::vec(0.0..1.0f64, d))
    })
}

fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    (a - b).abs() <= rel * scale.max(a.abs()).max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Sum of the absolute neuron contributions of `d^alpha`, the natural
/// scale for rounding errors in the closed form.
fn derivative_scale(net: &RepuNetwork, alpha: &MultiIndex, x: &[f64]) -> f64 {
    let abs_net = RepuNetwork::new(net.k(), net.d(), net.scaling())
        .unwrap()
        .with_neurons(
            net.neurons()
                .iter()
                .map(|n| Neuron::new(n.a.abs(), n.w.iter().map(|w| w.abs()).collect(), n.b.abs() + 2.0))
                .collect(),
        )
        .unwrap();
    abs_net.eval_derivative(alpha, &vec![1.0; x.len()]).unwrap().abs() + 1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rescaling_a_neuron_leaves_every_derivative_unchanged(
        (k, d, raw, x) in net_and_point(4, 3),
        log_c in -3.0..3.0f64,
        pick in any::<prop::sample::Index>(),
    ) {
        let net = build(k, d, Scaling::Sum, &raw);
        let c = 10f64.powf(log_c);
        let mut scaled = net.clone();
        let n = &mut scaled.neurons_mut()[pick.index(raw.len())];
        n.a /= c.powi(k as i32);
        n.w.iter_mut().for_each(|w| *w *= c);
        n.b *= c;
        for alpha in MultiIndex::all_up_to(d, k) {
            let u = net.eval_derivative(&alpha, &x).unwrap();
            let v = scaled.eval_derivative(&alpha, &x).unwrap();
            let scale = derivative_scale(&net, &alpha, &x);
            prop_assert!(close(u, v, 1e-11, scale), "alpha {:?}: {u} vs {v}", alpha);
        }
    }

    #[test]
    fn first_derivatives_match_central_differences((k, d, raw, x) in net_and_point(4, 3)) {
        let net = build(k, d, Scaling::Sum, &raw);
        // Keep every kink at least 1e-3 away so the difference quotient is smooth.
        prop_assume!(net.neurons().iter().all(|n| n.preactivation(&x).abs() > 1e-3));
        let h = 1e-5;
        for j in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (net.value(&xp) - net.value(&xm)) / (2.0 * h);
            let exact = net.eval_derivative(&MultiIndex::unit(d, j), &x).unwrap();
            prop_assert!((fd - exact).abs() <= 1e-4 * exact.abs().max(1.0), "j {j}: {fd} vs {exact}");
        }
    }

    #[test]
    fn neuron_order_does_not_matter((k, d, raw, x) in net_and_point(3, 3)) {
        let net = build(k, d, Scaling::MeanField, &raw);
        let mut rev = raw.clone();
        rev.reverse();
        let other = build(k, d, Scaling::MeanField, &rev);
        for alpha in MultiIndex::all_up_to(d, k) {
            let u = net.eval_derivative(&alpha, &x).unwrap();
            let v = other.eval_derivative(&alpha, &x).unwrap();
            prop_assert!(close(u, v, 1e-12, derivative_scale(&net, &alpha, &x)));
        }
        prop_assert_eq!(
            penalty_value(&net, PenaltyKind::ExtendedBarron).unwrap(),
            penalty_value(&other, PenaltyKind::ExtendedBarron).unwrap()
        );
    }

    #[test]
    fn barron_penalty_is_rescaling_invariant(
        (k, d, raw, _x) in net_and_point(4, 3),
        log_cs in prop::collection::vec(-3.0..3.0f64, 6),
    ) {
        let net = build(k, d, Scaling::MeanField, &raw);
        let mut scaled = net.clone();
        for (n, lc) in scaled.neurons_mut().iter_mut().zip(log_cs.iter().cycle()) {
            let c = 10f64.powf(*lc);
            n.a /= c.powi(k as i32);
            n.w.iter_mut().for_each(|w| *w *= c);
            n.b *= c;
        }
        let p = penalty_value(&net, PenaltyKind::ExtendedBarron).unwrap();
        let q = penalty_value(&scaled, PenaltyKind::ExtendedBarron).unwrap();
        prop_assert!(close(p, q, 1e-12, 0.0), "{p} vs {q}");
    }

    #[test]
    fn polynomial_tail_is_invisible_to_the_radon_penalty(
        seed in any::<u64>(),
        coef in -3.0..3.0f64,
        orders in prop::collection::vec(0u32..=1, 2),
        x in prop::collection::vec(0.05..0.95f64, 2),
    ) {
        let mut rng = SeedStream::new(seed).rng("prop");
        let net = random_feasible_net(PenaltyKind::RadonBV, 2, 2, 4, &mut rng).unwrap();
        let mut tail = net.poly_tail().unwrap().to_vec();
        tail.push(PolyTerm { coef, alpha: MultiIndex::new(orders.clone()) });
        let mut other = net.clone();
        *other.poly_tail_mut().unwrap() = tail;
        prop_assert_eq!(
            penalty_value(&net, PenaltyKind::RadonBV).unwrap(),
            penalty_value(&other, PenaltyKind::RadonBV).unwrap()
        );
        let monomial = MultiIndex::new(orders).monomial(&x);
        let diff = other.eval(&x).unwrap() - net.eval(&x).unwrap();
        prop_assert!((diff - coef * monomial).abs() <= 1e-12 * (1.0 + net.eval(&x).unwrap().abs()));
    }

    #[test]
    fn projection_is_idempotent_and_keeps_the_function(
        d in 1usize..=3,
        seed in any::<u64>(),
        x in prop::collection::vec(0.0..1.0f64, 3),
    ) {
        let mut rng = SeedStream::new(seed).rng("prop");
        let k = rng.random_range(1..=3u32);
        let root_d = (d as f64).sqrt();
        let neurons: Vec<Neuron> = (0..4)
            .map(|_| {
                let w: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
                let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                // Bias inside the feasible range after normalization.
                let b = rng.random_range(-0.99..0.99) * root_d * norm;
                Neuron::new(rng.random_range(-1.0..1.0), w, b)
            })
            .collect();
        prop_assume!(neurons.iter().all(|n| n.w_norm_l2() > 1e-3));
        let net = RepuNetwork::new(k, d, Scaling::Sum).unwrap().with_neurons(neurons).unwrap();
        for kind in [PenaltyKind::Variation, PenaltyKind::RadonBV] {
            let net = if kind == PenaltyKind::RadonBV { net.clone().with_zero_tail().unwrap() } else { net.clone() };
            let once = project_constraints(&net, kind).unwrap();
            let twice = project_constraints(&once, kind).unwrap();
            prop_assert_eq!(&once, &twice);
            let x = &x[..d];
            let scale: f64 = net.neurons().iter().map(|n| (n.a * n.preactivation(x).max(0.0).powi(k as i32)).abs()).sum();
            prop_assert!(close(net.value(x), once.value(x), 1e-12, scale));
        }
    }

    #[test]
    fn subgradient_is_a_first_order_lower_model(
        seed in any::<u64>(),
        kind_ix in 0usize..3,
        dir in prop::collection::vec(-1.0..1.0f64, 64),
    ) {
        let kind = [PenaltyKind::ExtendedBarron, PenaltyKind::Variation, PenaltyKind::RadonBV][kind_ix];
        let mut rng = SeedStream::new(seed).rng("prop");
        let net = random_feasible_net(kind, 2, 2, 4, &mut rng).unwrap();
        // Smooth point: no coordinate that enters an absolute value is near 0.
        prop_assume!(net.neurons().iter().all(|n| {
            n.a.abs() > 0.05 && (kind != PenaltyKind::ExtendedBarron || (n.b.abs() > 0.05 && n.w.iter().all(|w| w.abs() > 0.05)))
        }));
        let g = penalty_subgradient(&net, kind).unwrap().to_flat();
        let theta = net.params();
        // The constrained kinds are perturbed in the outer weights only,
        // which keeps the perturbed network feasible.
        let v: Vec<f64> = if kind == PenaltyKind::ExtendedBarron {
            dir.iter().cycle().take(theta.len()).copied().collect()
        } else {
            let mut v = vec![0.0; theta.len()];
            let offset = theta.len() - net.width() * 4;
            for i in 0..net.width() {
                v[offset + 4 * i] = dir[i];
            }
            v
        };
        let p0 = penalty_value(&net, kind).unwrap();
        let slope: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        for t in [1e-3, 1e-4] {
            let mut moved = net.clone();
            moved.set_params(&theta.iter().zip(&v).map(|(p, dv)| p + t * dv).collect::<Vec<_>>()).unwrap();
            let p1 = penalty_value(&moved, kind).unwrap();
            let slack = 1e3 * t * t * p0.max(1.0) + 1e-12 * p0.max(1.0);
            prop_assert!(p1 >= p0 + t * slope - slack, "t {t}: {p1} < {p0} + {}", t * slope);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sobolev_norms_grow_with_the_order((k, d, raw, _x) in net_and_point(3, 2)) {
        let net = build(k, d, Scaling::Sum, &raw);
        let rule = QuadratureRule::tensor_gauss_legendre(6, d).unwrap();
        let norms: Vec<f64> = (0..=k).map(|m| sobolev_norm(&net, m, &rule).unwrap()).collect();
        prop_assert!(norms.windows(2).all(|w| w[1] >= w[0]), "{norms:?}");
    }

    #[test]
    fn l2_distance_obeys_the_triangle_inequality(seed in any::<u64>()) {
        let mut rng = SeedStream::new(seed).rng("prop");
        let rule = QuadratureRule::tensor_gauss_legendre(8, 2).unwrap();
        let nets: Vec<_> = (0..3)
            .map(|_| random_feasible_net(PenaltyKind::ExtendedBarron, 2, 2, 3, &mut rng).unwrap())
            .collect();
        let ab = l2_distance(&nets[0], &nets[1], &rule).unwrap();
        let bc = l2_distance(&nets[1], &nets[2], &rule).unwrap();
        let ac = l2_distance(&nets[0], &nets[2], &rule).unwrap();
        prop_assert!(ac <= (ab + bc) * (1.0 + 1e-12));
    }

    #[test]
    fn noise_is_calibrated_and_reproducible(
        seed in any::<u64>(),
        log_delta in -4.0..0.0f64,
        gaussian in any::<bool>(),
    ) {
        let delta = 10f64.powf(log_delta);
        let noise = if gaussian { NoiseKind::GaussianIid } else { NoiseKind::L2CalibratedField };
        let target = make_target(&TargetSpec::ReferenceNetwork { k: 2, d: 2, neurons: 3 }, seed).unwrap();
        let rule = QuadratureRule::lattice(128, 2, 1, seed).unwrap();
        let data = make_noisy_dataset(&target, &rule, delta, noise, seed ^ 1).unwrap();
        let sq: f64 = (0..data.len())
            .map(|i| data.weights()[i] * (data.values[i] - target.value(data.point(i))).powi(2))
            .sum();
        prop_assert!(close(sq.sqrt(), delta, 1e-9, 0.0), "{} vs {delta}", sq.sqrt());
        prop_assert!(close(data.delta_realized, delta, 1e-9, 0.0));
        let again = make_noisy_dataset(&target, &rule, delta, noise, seed ^ 1).unwrap();
        prop_assert_eq!(data, again);
    }

    #[test]
    fn target_oracles_match_central_differences(
        omega in 0.5..4.0f64,
        phase in -1.0..1.0f64,
        rate in -1.5..1.5f64,
        x in prop::collection::vec(0.05..0.95f64, 2),
    ) {
        let spec = TargetSpec::Product1d {
            k: 3,
            factors: vec![Factor1d::Sin { omega, phase }, Factor1d::Exp { rate }],
        };
        let target = make_target(&spec, 0).unwrap();
        let h = 1e-5;
        for alpha in MultiIndex::all_up_to(2, 2) {
            for j in 0..2 {
                let mut up = alpha.orders().to_vec();
                up[j] += 1;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let fd = (target.derivative(&alpha, &xp) - target.derivative(&alpha, &xm)) / (2.0 * h);
                let exact = target.derivative(&MultiIndex::new(up), &x);
                prop_assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1.0), "{fd} vs {exact}");
            }
        }
    }

    #[test]
    fn objective_splits_into_fidelity_and_penalty(seed in any::<u64>(), log_lambda in -6.0..2.0f64) {
        let lambda = 10f64.powf(log_lambda);
        let target = make_target(&TargetSpec::ReferenceNetwork { k: 2, d: 2, neurons: 3 }, seed).unwrap();
        let rule = QuadratureRule::lattice(64, 2, 1, seed).unwrap();
        let data = make_noisy_dataset(&target, &rule, 0.01, NoiseKind::GaussianIid, seed).unwrap();
        let mut rng = SeedStream::new(seed).rng("prop");
        for kind in [PenaltyKind::ExtendedBarron, PenaltyKind::Variation, PenaltyKind::RadonBV] {
            let net = random_feasible_net(kind, 2, 2, 5, &mut rng).unwrap();
            let parts = objective_parts(&net, &data, kind, lambda).unwrap();
            let expect = data.misfit(&net).powi(2) + lambda * penalty_value(&net, kind).unwrap().powi(2);
            prop_assert!(close(parts.objective, expect, 1e-10, 0.0));
            prop_assert!(close(parts.objective, parts.fidelity_sq + lambda * parts.penalty * parts.penalty, 1e-10, 0.0));
        }
    }

    #[test]
    fn embedding_inequalities_hold(seed in any::<u64>(), m in 0u32..=2, variation in any::<bool>()) {
        let kind = if variation { PenaltyKind::Variation } else { PenaltyKind::ExtendedBarron };
        let mut rng = SeedStream::new(seed).rng("prop");
        let net = random_feasible_net(kind, 2, 2, 4, &mut rng).unwrap();
        let rule = QuadratureRule::tensor_gauss_legendre(12, 2).unwrap();
        let r = check_embedding(&net, m, &rule).unwrap();
        prop_assert!(r.passed, "{r:?}");
    }

    #[test]
    fn variation_penalty_bounds_the_barron_penalty(seed in any::<u64>(), d in 1usize..=8, k in 1u32..=4) {
        let mut rng = SeedStream::new(seed).rng("prop");
        let nets: Vec<_> = (0..10).map(|_| random_feasible_net(PenaltyKind::Variation, d, k, 4, &mut rng).unwrap()).collect();
        prop_assert_eq!(norm_relation_check(&nets, k, d).unwrap().violations, 0);
    }

    #[test]
    fn constant_terms_follow_their_ratio_recursions(d in 1usize..=50, k in 1u32..=4, s_frac in 0.0..1.0f64) {
        let s = ((s_frac * k as f64) as u32).min(k - 1);
        let (sf, kf, df) = (s as f64, k as f64, d as f64);
        let barron = barron_term(d, s + 1, k) / barron_term(d, s, k);
        prop_assert!(close(barron, (sf + df) * (kf - sf).powi(2) / (sf + 1.0), 1e-12, 0.0));
        let variation = variation_term(d, s + 1, k) / variation_term(d, s, k);
        prop_assert!(close(variation, (sf + df) * (kf - sf).powi(2) / (4.0 * (sf + 1.0) * df), 1e-12, 0.0));
    }
}
