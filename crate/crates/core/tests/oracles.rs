use nhp_core::likelihood::{log_likelihood_with, mc_integral_with, score_dataset, LikelihoodConfig, SamplingScheme};
use nhp_core::sampler::{keyed_rng, sample_dataset, sample_stream, SampleConfig};
use nhp_core::synthetic::{censor, gen_ground_truth, GroundTruthSpec};
use nhp_core::trainer::{train_kind, TrainConfig};
use nhp_core::{with_model, Dataset, Event, EventStream, EventType, HawkesParams, Model, ModelKind, PointProcess};
use proptest::prelude::*;

fn homogeneous(rates: &[f64]) -> HawkesParams {
    let k = rates.len();
    HawkesParams::new(rates.to_vec(), vec![0.0; k * k], vec![1.0; k * k]).unwrap()
}

#[test]
fn homogeneous_likelihood_is_exact_for_every_sample_count() {
    let model = homogeneous(&[0.7, 1.3]);
    let stream = EventStream::new(vec![Event::new(2, 0.4), Event::new(1, 1.6)], 2.5, 2).unwrap();
    let want = 1.3f64.ln() + 0.7f64.ln() - 2.0 * 2.5;
    for n in [1, 7, 100] {
        for scheme in [SamplingScheme::Uniform, SamplingScheme::Stratified] {
            let cfg = LikelihoodConfig { scheme, eos: None };
            let r = log_likelihood_with(&model, &stream, n, &mut keyed_rng(n as u64, &[]), &cfg).unwrap();
            assert!((r.total - want).abs() < 1e-12, "{n} {scheme:?}: {} vs {want}", r.total);
        }
    }
}

#[test]
fn integral_estimate_is_unbiased_for_a_decaying_hawkes_intensity() {
    // One event of type 1 at t = 1, horizon 3: Λ = 3μ + (α/δ)(1 - e^{-2δ}).
    let model = HawkesParams::new(vec![0.5], vec![2.0], vec![3.0]).unwrap();
    let stream = EventStream::new(vec![Event::new(1, 1.0)], 3.0, 1).unwrap();
    let exact = 1.5 + 2.0 / 3.0 * (1.0 - (-6.0f64).exp());
    let cfg = LikelihoodConfig {
        scheme: SamplingScheme::Uniform,
        eos: None,
    };
    let mut rng = keyed_rng(7, &[]);
    let reps = 4000;
    let est: Vec<f64> = (0..reps)
        .map(|_| mc_integral_with(&model, &stream, 5, &mut rng, &cfg).unwrap().0)
        .collect();
    let mean = est.iter().sum::<f64>() / reps as f64;
    let sd = (est.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    assert!((mean - exact).abs() < 4.0 * sd / (reps as f64).sqrt(), "{mean} vs {exact}");
}

#[test]
fn sampled_counts_match_the_homogeneous_rate() {
    let model = homogeneous(&[1.5, 0.5]);
    let data = sample_dataset(&model, 400, &SampleConfig::horizon(5.0, 3)).unwrap();
    // Total count is Poisson(10) per stream.
    let mean = data.num_events() as f64 / 400.0;
    assert!((mean - 10.0).abs() < 4.0 * (10.0f64 / 400.0).sqrt(), "{mean}");
    let ones = data.streams().iter().flat_map(|s| s.events()).filter(|e| e.k == EventType(1)).count();
    let frac = ones as f64 / data.num_events() as f64;
    assert!((frac - 0.75).abs() < 0.03, "{frac}");
}

#[test]
fn sampling_is_a_deterministic_function_of_the_seed() {
    for kind in ModelKind::ALL {
        let model = gen_ground_truth(&GroundTruthSpec::desk(kind, 4)).unwrap();
        let a = with_model!(&model, m => sample_stream(m, &SampleConfig::max_events(30, 9))).unwrap();
        let b = with_model!(&model, m => sample_stream(m, &SampleConfig::max_events(30, 9))).unwrap();
        let c = with_model!(&model, m => sample_stream(m, &SampleConfig::max_events(30, 10))).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 30);
        assert_eq!(a.horizon(), a.last_time());
    }
}

#[test]
fn training_recovers_a_homogeneous_rate() {
    let truth = homogeneous(&[2.0]);
    let train = sample_dataset(&truth, 500, &SampleConfig::horizon(10.0, 1)).unwrap();
    let dev = sample_dataset(&truth, 100, &SampleConfig::horizon(10.0, 2)).unwrap();
    let mle = train.num_events() as f64 / (500.0 * 10.0);
    let mut cfg = TrainConfig::new(ModelKind::Hawkes, 5);
    cfg.adam.learning_rate = 0.05;
    cfg.max_epochs = 30;
    let fit = train_kind(&train, &dev, &cfg).unwrap();
    let Model::Hawkes(p) = &fit.best_params else {
        panic!("wrong kind")
    };
    // Long-run rate of a one-type Hawkes process.
    let stationary = p.mu()[0] / (1.0 - p.alpha()[0] / p.delta()[0]);
    assert!((stationary - mle).abs() / mle < 0.05, "{stationary} vs {mle}");
}

#[test]
fn true_model_outscores_a_mismatched_one() {
    let truth = gen_ground_truth(&GroundTruthSpec::desk(ModelKind::Hawkes, 21)).unwrap();
    let data = with_model!(&truth, m => sample_dataset(m, 100, &SampleConfig::max_events(50, 3))).unwrap();
    let good = with_model!(&truth, m => score_dataset(m, &data, 1)).unwrap();
    let flat = homogeneous(&[1.0; 5]);
    let bad = score_dataset(&flat, &data, 1).unwrap();
    assert!(good.per_event() > bad.per_event());
}

fn arb_dataset() -> impl Strategy<Value = Dataset> {
    prop::collection::vec(prop::collection::vec((1u32..=5, 0.01f64..10.0), 0..20), 1..5).prop_map(|streams| {
        let streams = streams
            .into_iter()
            .map(|mut evs| {
                evs.sort_by(|a, b| a.1.total_cmp(&b.1));
                evs.dedup_by(|a, b| a.1 == b.1);
                EventStream::new(evs.into_iter().map(|(k, t)| Event::new(k, t)).collect(), 10.0, 5).unwrap()
            })
            .collect();
        Dataset::new(streams, 5).unwrap()
    })
}

proptest! {
    #[test]
    fn censoring_is_order_preserving_filtering(data in arb_dataset(), mask in 0u32..32) {
        let removed: Vec<EventType> = (1..=5).filter(|k| mask & (1 << (k - 1)) != 0).map(EventType).collect();
        let kept: Vec<u32> = (1..=5).filter(|k| mask & (1 << (k - 1)) == 0).collect();
        let out = censor(&data, &removed).unwrap();
        prop_assert_eq!(out.num_types(), kept.len());
        for (before, after) in data.streams().iter().zip(out.streams()) {
            let expected: Vec<(u32, f64)> = before
                .events()
                .iter()
                .filter_map(|e| kept.iter().position(|&k| k == e.k.0).map(|i| (i as u32 + 1, e.t)))
                .collect();
            let got: Vec<(u32, f64)> = after.events().iter().map(|e| (e.k.0, e.t)).collect();
            prop_assert_eq!(got, expected);
            prop_assert_eq!(after.horizon(), before.horizon());
        }
    }

    #[test]
    fn intensities_are_positive_and_bounded_after_any_history(
        seed in 0u64..1000,
        kind in prop::sample::select(ModelKind::ALL.to_vec()),
        times in prop::collection::vec(0.01f64..5.0, 0..10),
    ) {
        let model = gen_ground_truth(&GroundTruthSpec { num_types: 3, hidden: 4, ..GroundTruthSpec::desk(kind, seed) }).unwrap();
        with_model!(&model, m => {
            let mut state = m.initial_state();
            let mut t = 0.0;
            for (i, dt) in times.iter().enumerate() {
                t += dt;
                m.observe(&mut state, Event::new(1 + (i % 3) as u32, t));
            }
            let mut bound = vec![0.0; 3];
            m.intensity_bounds(&state, &mut bound);
            let mut lam = vec![0.0; 3];
            for j in 1..20 {
                m.intensities(&state, t + 0.1 * j as f64, &mut lam);
                for (l, b) in lam.iter().zip(&bound) {
                    prop_assert!(*l > 0.0 && *l <= *b * (1.0 + 1e-9));
                }
            }
            Ok::<(), TestCaseError>(())
        })?;
    }
}
