use gleason_core::boxes::{bell_beta, is_nonsignalling, random_ns_box};
use gleason_core::cj::LinearMap;
use gleason_core::hilbert::{hs_inner, max_abs_entry};
use gleason_core::operators::evaluate_box;
use gleason_core::sample;
use gleason_core::synthesis::synthesize;
use gleason_core::witness::{descend, minimize_over_products, AlternatingOptions, ProductState};
use gleason_core::{CorrelationBox, Scenario};
use proptest::prelude::*;

fn scenarios() -> impl Strategy<Value = Scenario> {
    prop_oneof![
        Just((2, 2, 2)),
        Just((2, 3, 2)),
        Just((2, 2, 3)),
        Just((3, 2, 2)),
    ]
    .prop_map(|(n, m, r)| Scenario::new(n, m, r).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kron_is_associative_and_multiplies_traces(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let a = sample::hermitian(&mut rng, &[2]);
        let b = sample::hermitian(&mut rng, &[3]);
        let d = sample::hermitian(&mut rng, &[2]);
        let left = a.kron(&b).kron(&d);
        let right = a.kron(&b.kron(&d));
        prop_assert!(max_abs_entry(&(left.matrix() - right.matrix())) < 1e-12);
        prop_assert_eq!(left.local_dims(), right.local_dims());
        let want = a.trace() * b.trace() * d.trace();
        prop_assert!((left.trace() - want).abs() < 1e-9 * (1.0 + want.abs()));
    }

    #[test]
    fn mixtures_stay_nonsignalling(s in scenarios(), s1 in any::<u64>(), s2 in any::<u64>(), w in 0.0..=1.0f64) {
        let p = random_ns_box(s, s1);
        let q = random_ns_box(s, s2);
        let mix = CorrelationBox::mixture(&[(w, &p), (1.0 - w, &q)]).unwrap();
        prop_assert!(is_nonsignalling(&mix).max_violation < 1e-12);
        prop_assert!(mix.normalization_error() < 1e-12);
    }

    #[test]
    fn bell_beta_is_affine_in_the_box(s1 in any::<u64>(), s2 in any::<u64>(), w in 0.0..=1.0f64) {
        let s = Scenario::new(3, 2, 2).unwrap();
        let p = random_ns_box(s, s1);
        let q = random_ns_box(s, s2);
        let mix = CorrelationBox::mixture(&[(w, &p), (1.0 - w, &q)]).unwrap();
        let want = w * bell_beta(&p).unwrap() + (1.0 - w) * bell_beta(&q).unwrap();
        prop_assert!((bell_beta(&mix).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn marginals_commute_with_mixing_and_nesting(s1 in any::<u64>(), s2 in any::<u64>(), w in 0.0..=1.0f64) {
        let s = Scenario::new(3, 2, 2).unwrap();
        let p = random_ns_box(s, s1);
        let q = random_ns_box(s, s2);
        let mix = CorrelationBox::mixture(&[(w, &p), (1.0 - w, &q)]).unwrap();
        let direct = mix.marginal(&[0, 2]).unwrap();
        let mixed = CorrelationBox::mixture(&[
            (w, &p.marginal(&[0, 2]).unwrap()),
            (1.0 - w, &q.marginal(&[0, 2]).unwrap()),
        ])
        .unwrap();
        prop_assert!(direct.max_abs_difference(&mixed) < 1e-12);
        let nested = p.marginal(&[0, 2]).unwrap().marginal(&[1]).unwrap();
        prop_assert!(nested.max_abs_difference(&p.marginal(&[2]).unwrap()) < 1e-12);
    }

    #[test]
    fn trace_rule_boxes_are_nonsignalling(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let o = sample::unit_trace_hermitian(&mut rng, &[2, 3]);
        let mm = sample::measurement_model(&mut rng, &[2, 3], 2, 3);
        let b = evaluate_box(&o, &mm).unwrap().correlations;
        prop_assert!(is_nonsignalling(&b).max_violation < 1e-9);
    }

    #[test]
    fn synthesis_round_trips(s in scenarios(), box_seed in any::<u64>(), seed in any::<u64>()) {
        let b = random_ns_box(s, box_seed);
        let model = synthesize(&b, seed).unwrap();
        prop_assert!(model.evaluate().unwrap().max_abs_difference(&b) < 1e-9);
        prop_assert!((model.operator.trace() - 1.0).abs() < 1e-9);
        prop_assert!(model.family.duality_error() < 1e-10);
        let back = model.evaluate().unwrap();
        for parties in [vec![0], vec![1]] {
            let m1 = back.marginal(&parties).unwrap();
            prop_assert!(m1.max_abs_difference(&b.marginal(&parties).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn dual_map_is_the_adjoint(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let lam = LinearMap::random_cptp(&mut rng, 2, 3, 2);
        let x = sample::hermitian(&mut rng, &[2]);
        let y = sample::hermitian(&mut rng, &[3]);
        let left = (y.matrix() * lam.apply(x.matrix()).unwrap()).trace();
        let right = (lam.dual().apply(y.matrix()).unwrap() * x.matrix()).trace();
        prop_assert!((left - right).norm() < 1e-10);
        let t = LinearMap::transpose(3);
        let left = (y.matrix() * t.apply(y.matrix()).unwrap()).trace();
        let right = (t.dual().apply(y.matrix()).unwrap() * y.matrix()).trace();
        prop_assert!((left - right).norm() < 1e-10);
        prop_assert!((hs_inner(&x, &x).unwrap() - x.matrix().norm_squared()).abs() < 1e-9);
    }

    #[test]
    fn product_minimum_is_scale_and_shift_equivariant(seed in any::<u64>(), a in 0.1..10.0f64, t in -3.0..3.0f64) {
        let w = sample::hermitian(&mut sample::rng(seed), &[2, 2, 2]);
        let base = minimize_over_products(&w, 4, seed).unwrap();
        let moved = minimize_over_products(&w.scaled(a).shifted(t), 4, seed).unwrap();
        prop_assert!((moved.value - (a * base.value + t)).abs() < 1e-10 * a.max(1.0));
    }

    #[test]
    fn descent_never_increases(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let w = sample::hermitian(&mut rng, &[2, 3, 2]);
        let start = ProductState::random(&mut rng, &[2, 3, 2]);
        let d = descend(&w, start, AlternatingOptions::default()).unwrap();
        for pair in d.history.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-12);
        }
        prop_assert!((d.state.expectation(&w).unwrap() - d.value).abs() < 1e-10);
    }
}
