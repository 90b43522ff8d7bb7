use proptest::prelude::*;

use tvtrack::harness::{run_experiment_with, Execution, ExperimentConfig};
use tvtrack::streamgen::{export_centers, import_centers, RandomWalkConfig};
use tvtrack::{LossConstants, QuadraticLoss, StreamingObjective, TrackerConfig, WeightScheme};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn scheme(gamma: Option<f64>) -> WeightScheme {
    gamma.map_or(WeightScheme::Uniform, |g| WeightScheme::discounted(g).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // TE(t+1) <= alpha (TE(t) + |w*_{t+1} - w*_t|), with equality in the
    // pre-drift form when mu = L.
    #[test]
    fn per_step_contraction_chain(
        seed in 0u64..1000,
        budget in 1u32..12,
        eta_frac in 0.05f64..1.0,
        gamma in prop::option::of(0.05f64..0.99),
        kappa in 1.0f64..6.0,
    ) {
        let mu = 0.1;
        let l = mu * kappa;
        let walk = RandomWalkConfig::new(100.0, 100.0, 2, seed).unwrap();
        let consts = LossConstants::new(mu, l, walk.minimizer_bound()).unwrap();
        let eta = consts.max_step() * eta_frac;
        let cfg = TrackerConfig::new(eta, budget, vec![30.0, -30.0], &consts).unwrap();
        let alpha = (1.0 - eta * mu).powi(budget as i32);
        let mut obj = StreamingObjective::new(scheme(gamma)).without_history().unwrap();
        let mut state = cfg.start();
        let mut w = walk.walk().unwrap();
        let mut prev: Option<(f64, Vec<f64>)> = None;
        for _ in 0..150 {
            let before = state.w.clone();
            obj.absorb(QuadraticLoss::new(w.next_center().to_vec(), vec![mu, l], &consts).unwrap()).unwrap();
            let target = obj.exact_minimizer().unwrap();
            state.step(&cfg, &obj).unwrap();
            let te = state.tracking_error(&obj).unwrap();
            let pre = dist(&before, &target);
            prop_assert!(te <= alpha * pre * (1.0 + 1e-9) + 1e-12);
            if let Some((te_prev, target_prev)) = &prev {
                let drift = dist(&target, target_prev);
                prop_assert!(te <= alpha * (te_prev + drift) * (1.0 + 1e-9) + 1e-12);
            }
            prev = Some((te, target));
        }
    }

    #[test]
    fn equal_curvature_contraction_is_exact(seed in 0u64..1000, budget in 1u32..8, eta_frac in 0.05f64..0.95) {
        let mu = 0.1;
        let walk = RandomWalkConfig::new(100.0, 100.0, 1, seed).unwrap();
        let consts = LossConstants::new(mu, mu, 100.0).unwrap();
        let eta = consts.max_step() * eta_frac;
        let cfg = TrackerConfig::new(eta, budget, vec![0.0], &consts).unwrap();
        let alpha = (1.0 - eta * mu).powi(budget as i32);
        let mut obj = StreamingObjective::new(WeightScheme::Uniform);
        let mut state = cfg.start();
        let mut w = walk.walk().unwrap();
        for _ in 0..100 {
            let before = state.w[0];
            obj.absorb(QuadraticLoss::isotropic(w.next_center().to_vec(), mu, &consts).unwrap()).unwrap();
            let target = obj.exact_minimizer().unwrap()[0];
            state.step(&cfg, &obj).unwrap();
            let expected = alpha * (before - target).abs();
            let te = state.tracking_error(&obj).unwrap();
            prop_assert!((te - expected).abs() <= 1e-10 * (1.0 + expected));
        }
    }
}

#[test]
fn exported_stream_replays_identically() {
    let walk = RandomWalkConfig::new(100.0, 100.0, 3, 17).unwrap();
    let mut w = walk.walk().unwrap();
    let centers: Vec<Vec<f64>> = (0..200).map(|_| w.next_center().to_vec()).collect();
    let mut buf = Vec::new();
    export_centers(&mut buf, &centers).unwrap();
    let replay = import_centers(buf.as_slice()).unwrap();
    assert_eq!(replay, centers);

    let consts = LossConstants::new(0.1, 0.1, walk.minimizer_bound()).unwrap();
    let minimizers = |cs: &[Vec<f64>]| {
        let mut obj = StreamingObjective::new(WeightScheme::discounted(0.9).unwrap());
        cs.iter()
            .map(|c| {
                obj.absorb(QuadraticLoss::isotropic(c.clone(), 0.1, &consts).unwrap()).unwrap();
                obj.exact_minimizer().unwrap()
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(minimizers(&centers), minimizers(&replay));
}

#[test]
fn aggregates_are_ordered_and_thread_independent() {
    let walk = RandomWalkConfig::new(100.0, 100.0, 1, 5).unwrap();
    let cfg = ExperimentConfig::scalar(WeightScheme::discounted(0.8).unwrap(), 0.1, 2.0, vec![3, 7], walk, 300, 40)
        .unwrap();
    let seq = run_experiment_with(&cfg, Execution::Sequential).unwrap();
    for threads in [2, 3, 8] {
        assert_eq!(run_experiment_with(&cfg, Execution::with_threads(threads)).unwrap(), seq);
    }
    for s in &seq.series {
        assert!(s.report.passed());
        for r in &s.rows {
            assert!(0.0 <= r.rms_te && r.rms_te <= r.max_te);
            assert!(r.bound >= 0.0);
        }
    }
}
