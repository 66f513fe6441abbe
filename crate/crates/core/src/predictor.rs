//! Minimum-Bayes-risk prediction of the next event.
//!
//! Next-event times are drawn exactly from the model by thinning. The time
//! prediction is their mean (optimal under squared loss); the type
//! prediction maximizes the average of `λ_k(t) / λ(t)` over the same draws
//! (optimal under 0-1 loss).

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use rand::Rng;

use crate::error::Result;
use crate::events::{Dataset, EventType};
use crate::model::PointProcess;
use crate::sampler::{keyed_rng, sample_next, ThinningStats, ThinningVariant};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub time: f64,
    pub k: EventType,
}

/// Dataset-level scores: time RMSE and type error rate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PredictionMetrics {
    pub rmse: f64,
    pub error_rate: f64,
    pub n_predictions: usize,
}

/// One held-out event next to its prediction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictionRecord {
    pub stream: usize,
    pub index: usize,
    pub true_time: f64,
    pub predicted_time: f64,
    pub true_k: EventType,
    pub predicted_k: EventType,
}

/// Predicts the next event from `state` using `m_samples` thinning draws.
///
/// If the process can no longer fire, the time is `+∞` and the type is
/// the one with the largest intensity at the anchor.
pub fn predict_next<M, R>(model: &M, state: &M::State, m_samples: usize, rng: &mut R) -> Result<Prediction>
where
    M: PointProcess + ?Sized,
    R: Rng + ?Sized,
{
    let mut stats = ThinningStats::default();
    let mut draws = Vec::with_capacity(m_samples.max(1));
    for _ in 0..m_samples.max(1) {
        match sample_next(model, state, ThinningVariant::Aggregate, rng, &mut stats)? {
            Some(event) => draws.push(event.t),
            None => break,
        }
    }
    let time = if draws.is_empty() {
        f64::INFINITY
    } else {
        draws.iter().sum::<f64>() / draws.len() as f64
    };
    Ok(Prediction {
        time,
        k: paired_type_argmax(model, state, &draws),
    })
}

/// The type maximizing `Σ_n λ_k(t_n) / λ(t_n)` over shared draws `t_n`.
///
/// With no draws, the type with the largest intensity at the anchor.
pub fn paired_type_argmax<M: PointProcess + ?Sized>(model: &M, state: &M::State, draws: &[f64]) -> EventType {
    let k = model.num_types();
    let mut share = vec![0.0; k];
    let mut lam = vec![0.0; k];
    if draws.is_empty() {
        model.intensities(state, model.anchor(state), &mut share);
    }
    for &t in draws {
        model.intensities(state, t, &mut lam);
        let total: f64 = lam.iter().sum();
        if total > 0.0 {
            for (s, l) in share.iter_mut().zip(&lam) {
                *s += l / total;
            }
        }
    }
    EventType::from_index(argmax_first(&share))
}

/// Index of the largest value; ties go to the smallest index.
fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Predicts every event of every stream from its true history and scores the
/// predictions. The draws for event `i` of stream `s` use
/// `keyed_rng(seed, &[s, i])`.
pub fn evaluate_predictions<M: PointProcess + ?Sized>(
    model: &M,
    dataset: &Dataset,
    m_samples: usize,
    seed: u64,
) -> Result<(PredictionMetrics, Vec<PredictionRecord>)> {
    let mut records = Vec::with_capacity(dataset.num_events());
    for (s, stream) in dataset.streams().iter().enumerate() {
        let mut state = model.initial_state();
        for (i, event) in stream.events().iter().enumerate() {
            let mut rng = keyed_rng(seed, &[s as u64, i as u64]);
            let p = predict_next(model, &state, m_samples, &mut rng)?;
            records.push(PredictionRecord {
                stream: s,
                index: i,
                true_time: event.t,
                predicted_time: p.time,
                true_k: event.k,
                predicted_k: p.k,
            });
            model.observe(&mut state, *event);
        }
    }
    Ok((summarize(&records), records))
}

pub fn summarize(records: &[PredictionRecord]) -> PredictionMetrics {
    let n = records.len();
    if n == 0 {
        return PredictionMetrics::default();
    }
    let sq: f64 = records
        .iter()
        .map(|r| (r.predicted_time - r.true_time) * (r.predicted_time - r.true_time))
        .sum();
    let wrong = records.iter().filter(|r| r.predicted_k != r.true_k).count();
    PredictionMetrics {
        rmse: sqrt(sq / n as f64),
        error_rate: wrong as f64 / n as f64,
        n_predictions: n,
    }
}
