//! Log-likelihood `Σ_i log λ_{k_i}(t_i) - ∫_0^T λ(t) dt` with a Monte-Carlo
//! estimate of the integral, its gradient, and a finite-difference harness.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::events::{Dataset, EventStream, EventType};
use crate::sampler::keyed_rng;
use crate::model::{Objective, Trainable};

/// How integral sample times are drawn on `(0, H)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SamplingScheme {
    /// One uniform draw in each of `N` equal-width cells.
    #[default]
    Stratified,
    /// `N` independent uniform draws.
    Uniform,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LikelihoodConfig {
    pub scheme: SamplingScheme,
    /// Type that ends the stream. Once it occurs every intensity is zero, so
    /// the integral stops at its time and later events are ignored.
    pub eos: Option<EventType>,
}

/// Breakdown of one stream's log-likelihood, in nats.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LogLikReport {
    pub total: f64,
    /// `Σ_i log λ_{k_i}(t_i)`.
    pub event_term: f64,
    /// Estimated `∫ λ(t) dt`.
    pub integral_term: f64,
    /// `log λ_{k_i}(t_i)` per event.
    pub per_event: Vec<f64>,
    /// `Σ_i log(λ_{k_i}(t_i) / λ(t_i))`, the type-prediction part.
    pub type_term: f64,
    /// `Σ_i log λ(t_i) - ∫ λ(t) dt`, the timing part.
    pub time_term: f64,
}

impl LogLikReport {
    pub fn num_events(&self) -> usize {
        self.per_event.len()
    }
}

/// Sample count used during training: one per observed event.
pub fn train_samples(stream: &EventStream) -> usize {
    stream.len().max(1)
}

/// Sample count used for reported evaluations: ten per observed event.
pub fn eval_samples(stream: &EventStream) -> usize {
    10 * stream.len().max(1)
}

/// Sorted sample times on `(0, horizon)`.
pub fn sample_times<R: Rng + ?Sized>(horizon: f64, n: usize, scheme: SamplingScheme, rng: &mut R) -> Vec<f64> {
    let width = horizon / n as f64;
    match scheme {
        SamplingScheme::Stratified => (0..n)
            .map(|i| (i as f64 + rng.random::<f64>()) * width)
            .collect(),
        SamplingScheme::Uniform => {
            let mut t: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * horizon).collect();
            t.sort_by(f64::total_cmp);
            t
        }
    }
}

/// End of the integration window: the horizon, or the end-of-stream event.
pub fn effective_horizon(stream: &EventStream, eos: Option<EventType>) -> f64 {
    eos.and_then(|k| stream.events().iter().find(|e| e.k == k))
        .map_or(stream.horizon(), |e| e.t)
}

fn assemble(terms: crate::model::StreamTerms) -> LogLikReport {
    let event_term: f64 = terms.log_intensity.iter().sum();
    let type_term: f64 = terms
        .log_intensity
        .iter()
        .zip(&terms.log_total)
        .map(|(a, b)| a - b)
        .sum();
    let time_term = terms.log_total.iter().sum::<f64>() - terms.integral;
    LogLikReport {
        total: event_term - terms.integral,
        event_term,
        integral_term: terms.integral,
        per_event: terms.log_intensity,
        type_term,
        time_term,
    }
}

fn check_dims<M: Trainable>(model: &M, stream: &EventStream) -> Result<()> {
    let max = stream.events().iter().map(|e| e.k.0 as usize).max().unwrap_or(0);
    if max > model.num_types() {
        return Err(crate::Error::DimensionMismatch {
            model: model.num_types(),
            data: max,
        });
    }
    Ok(())
}

/// Scores `stream` against a fixed set of sample times.
pub fn log_likelihood_at<M: Trainable>(
    model: &M,
    stream: &EventStream,
    times: &[f64],
    config: &LikelihoodConfig,
    grad: Option<&mut [f64]>,
) -> Result<LogLikReport> {
    check_dims(model, stream)?;
    let horizon = effective_horizon(stream, config.eos);
    let terms = model.evaluate(stream, horizon, times, Objective::LOG_LIKELIHOOD, grad)?;
    Ok(assemble(terms))
}

/// Unbiased estimate of `Λ = ∫_0^T λ(t) dt` and of its gradient.
pub fn mc_integral<M: Trainable, R: Rng + ?Sized>(
    model: &M,
    stream: &EventStream,
    n_samples: usize,
    rng: &mut R,
) -> Result<(f64, Vec<f64>)> {
    mc_integral_with(model, stream, n_samples, rng, &LikelihoodConfig::default())
}

pub fn mc_integral_with<M: Trainable, R: Rng + ?Sized>(
    model: &M,
    stream: &EventStream,
    n_samples: usize,
    rng: &mut R,
    config: &LikelihoodConfig,
) -> Result<(f64, Vec<f64>)> {
    check_dims(model, stream)?;
    let horizon = effective_horizon(stream, config.eos);
    let times = sample_times(horizon, n_samples.max(1), config.scheme, rng);
    let mut grad = vec![0.0; model.num_params()];
    let terms = model.evaluate(stream, horizon, &times, Objective::INTEGRAL, Some(&mut grad))?;
    Ok((terms.integral, grad))
}

pub fn log_likelihood<M: Trainable, R: Rng + ?Sized>(
    model: &M,
    stream: &EventStream,
    n_samples: usize,
    rng: &mut R,
) -> Result<LogLikReport> {
    log_likelihood_with(model, stream, n_samples, rng, &LikelihoodConfig::default())
}

pub fn log_likelihood_with<M: Trainable, R: Rng + ?Sized>(
    model: &M,
    stream: &EventStream,
    n_samples: usize,
    rng: &mut R,
    config: &LikelihoodConfig,
) -> Result<LogLikReport> {
    let horizon = effective_horizon(stream, config.eos);
    let times = sample_times(horizon, n_samples.max(1), config.scheme, rng);
    log_likelihood_at(model, stream, &times, config, None)
}

/// Gradient of the sampled log-likelihood with respect to every parameter.
pub fn gradient<M: Trainable, R: Rng + ?Sized>(
    model: &M,
    stream: &EventStream,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(value_and_gradient(model, stream, n_samples, rng, &LikelihoodConfig::default())?.1)
}

pub fn value_and_gradient<M: Trainable, R: Rng + ?Sized>(
    model: &M,
    stream: &EventStream,
    n_samples: usize,
    rng: &mut R,
    config: &LikelihoodConfig,
) -> Result<(LogLikReport, Vec<f64>)> {
    let horizon = effective_horizon(stream, config.eos);
    let times = sample_times(horizon, n_samples.max(1), config.scheme, rng);
    let mut grad = vec![0.0; model.num_params()];
    let report = log_likelihood_at(model, stream, &times, config, Some(&mut grad))?;
    Ok((report, grad))
}

/// Worst disagreement between the analytic gradient and finite differences
/// of the log-likelihood, both using the same integral samples.
///
/// The finite difference is the fourth-order central stencil
/// `(-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h`. Relative error is used
/// where the gradient magnitude is at least `1e-6`, absolute error below.
pub fn finite_diff_check<M: Trainable>(
    model: &M,
    stream: &EventStream,
    step: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&step) {
        return Err(crate::Error::InvalidArgument("finite-difference step must lie in [1e-7, 1e-3]"));
    }
    let config = LikelihoodConfig::default();
    let horizon = effective_horizon(stream, config.eos);
    let times = sample_times(horizon, n_samples.max(1), config.scheme, &mut ChaCha8Rng::seed_from_u64(seed));
    let mut grad = vec![0.0; model.num_params()];
    log_likelihood_at(model, stream, &times, &config, Some(&mut grad))?;

    let base = model.params();
    let mut probe = model.clone();
    let mut shifted = base.clone();
    let mut at = |i: usize, offset: f64, shifted: &mut Vec<f64>| -> Result<f64> {
        shifted[i] = base[i] + offset;
        probe.set_params(shifted);
        let v = log_likelihood_at(&probe, stream, &times, &config, None)?.total;
        shifted[i] = base[i];
        Ok(v)
    };
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let fd = (-at(i, 2.0 * step, &mut shifted)? + 8.0 * at(i, step, &mut shifted)?
            - 8.0 * at(i, -step, &mut shifted)?
            + at(i, -2.0 * step, &mut shifted)?)
            / (12.0 * step);
        let scale = f64::max(grad[i].abs(), fd.abs());
        let err = if scale < 1e-6 {
            (grad[i] - fd).abs()
        } else {
            (grad[i] - fd).abs() / scale
        };
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Held-out score of a whole dataset.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetScore {
    pub total: f64,
    pub type_term: f64,
    pub time_term: f64,
    pub num_events: usize,
    /// Log-likelihood of each stream, in dataset order.
    pub per_stream: Vec<f64>,
    /// Events in each stream.
    pub stream_events: Vec<usize>,
}

impl DatasetScore {
    /// Nats per event; `0` for an event-free dataset.
    pub fn per_event(&self) -> f64 {
        if self.num_events == 0 {
            0.0
        } else {
            self.total / self.num_events as f64
        }
    }

    pub fn type_per_event(&self) -> f64 {
        self.type_term / self.num_events.max(1) as f64
    }

    pub fn time_per_event(&self) -> f64 {
        self.time_term / self.num_events.max(1) as f64
    }
}

/// Scores every stream with `10 · I` integral samples, stream `s` drawing
/// them from `keyed_rng(seed, &[s])`.
pub fn score_dataset<M: Trainable>(model: &M, dataset: &Dataset, seed: u64) -> Result<DatasetScore> {
    let config = LikelihoodConfig::default();
    let mut score = DatasetScore::default();
    for (s, stream) in dataset.streams().iter().enumerate() {
        let mut rng = keyed_rng(seed, &[s as u64]);
        let r = log_likelihood_with(model, stream, eval_samples(stream), &mut rng, &config)?;
        score.total += r.total;
        score.type_term += r.type_term;
        score.time_term += r.time_term;
        score.num_events += r.num_events();
        score.per_stream.push(r.total);
        score.stream_events.push(r.num_events());
    }
    Ok(score)
}
