//! Stochastic maximum-likelihood training with Adam and early stopping.
//!
//! Parameters that must stay positive are optimized through
//! `value = softplus(raw)`, so every iterate is a valid model.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::classical::{HawkesParams, SelfModulatingParams};
use crate::ctlstm::CtLstmParams;
use crate::error::{Error, Result};
use crate::events::Dataset;
use crate::likelihood::{sample_times, score_dataset, train_samples, LikelihoodConfig, SamplingScheme};
use crate::model::{Model, ModelKind, Trainable};
use crate::optim::{Adam, AdamConfig};
use crate::sampler::keyed_rng;
use crate::transfer::{sigmoid, softplus_inv, softplus_scaled};
use crate::with_model;

/// Standard deviation of the random initial neural weights.
pub const INIT_STD: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub kind: ModelKind,
    /// Hidden size of the neural model.
    pub hidden: usize,
    pub adam: AdamConfig,
    pub max_epochs: usize,
    /// Epochs without a dev improvement before stopping.
    pub patience: usize,
    /// Seeds initialization, epoch order and training samples.
    pub seed: u64,
    /// Seeds the dev-set integral samples; fixed across epochs.
    pub eval_seed: u64,
    /// Streams per gradient step.
    pub batch_size: usize,
    pub scheme: SamplingScheme,
}

impl TrainConfig {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        TrainConfig {
            kind,
            hidden: 8,
            adam: AdamConfig::default(),
            max_epochs: 50,
            patience: 3,
            seed,
            eval_seed: 1234,
            batch_size: 1,
            scheme: SamplingScheme::Stratified,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Training log-likelihood per event, averaged over the epoch's steps.
    /// Absent for epoch 0.
    pub train_ll: Option<f64>,
    /// Dev log-likelihood per event after the epoch.
    pub dev_ll: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport<M> {
    pub best_params: M,
    pub best_dev_ll: f64,
    /// Epoch 0 scores the initialization.
    pub epoch_log: Vec<EpochLog>,
    pub stopped_epoch: usize,
}

/// Fresh parameters: decomposable models start at all ones; the neural
/// model draws weights from `N(0, 0.01²)` with unit softplus scales.
pub fn init_params<R: Rng + ?Sized>(kind: ModelKind, num_types: usize, hidden: usize, rng: &mut R) -> Result<Model> {
    let k = num_types;
    Ok(match kind {
        ModelKind::Hawkes => Model::Hawkes(HawkesParams::new(vec![1.0; k], vec![1.0; k * k], vec![1.0; k * k])?),
        ModelKind::SelfModulating => Model::SelfModulating(SelfModulatingParams::new(
            vec![1.0; k],
            vec![1.0; k * k],
            vec![1.0; k * k],
            vec![1.0; k],
        )?),
        ModelKind::Neural => {
            let mut p = CtLstmParams::zeros(k, hidden);
            let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
            let scales = p.scale_range();
            for (i, v) in p.as_mut_slice().iter_mut().enumerate() {
                if !scales.contains(&i) {
                    *v = normal.sample(rng);
                }
            }
            Model::Neural(p)
        }
    })
}

/// Maps model parameters to the unconstrained space Adam works in.
struct Reparam {
    positive: Vec<bool>,
}

impl Reparam {
    fn to_raw(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(&self.positive)
            .map(|(&v, &p)| if p { softplus_inv(v) } else { v })
            .collect()
    }

    fn to_values(&self, raw: &[f64], out: &mut [f64]) {
        for ((o, &r), &p) in out.iter_mut().zip(raw).zip(&self.positive) {
            *o = if p { softplus_scaled(r, 1.0).max(f64::MIN_POSITIVE) } else { r };
        }
    }

    /// Chain rule through the softplus.
    fn to_raw_grad(&self, raw: &[f64], grad: &mut [f64]) {
        for ((g, &r), &p) in grad.iter_mut().zip(raw).zip(&self.positive) {
            if p {
                *g *= sigmoid(r);
            }
        }
    }
}

/// Trains `init` on `train`, keeping the parameters with the best dev
/// log-likelihood.
pub fn train<M: Trainable>(init: M, train: &Dataset, dev: &Dataset, config: &TrainConfig) -> Result<FitReport<M>> {
    if config.patience == 0 || !(config.adam.learning_rate > 0.0) {
        return Err(Error::InvalidArgument("patience must be >= 1 and the learning rate positive"));
    }
    let reparam = Reparam {
        positive: init.positive_mask(),
    };
    let mut model = init;
    let mut raw = reparam.to_raw(&model.params());
    let mut values = model.params();
    let mut adam = Adam::new(raw.len(), config.adam);
    let lik = LikelihoodConfig {
        scheme: config.scheme,
        eos: None,
    };

    let initial_dev = score_dataset(&model, dev, config.eval_seed)?.per_event();
    let mut log = vec![EpochLog {
        epoch: 0,
        train_ll: None,
        dev_ll: initial_dev,
    }];
    let mut best = model.clone();
    let mut best_dev = initial_dev;
    let mut stale = 0;
    let mut stopped = 0;

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut grad = vec![0.0; raw.len()];
    let mut batch_grad = vec![0.0; raw.len()];
    let batch = config.batch_size.max(1);

    for epoch in 1..=config.max_epochs {
        let mut rng = keyed_rng(config.seed, &[epoch as u64]);
        order.shuffle(&mut rng);
        let mut ll_sum = 0.0;
        let mut events = 0usize;
        for chunk in order.chunks(batch) {
            batch_grad.fill(0.0);
            for &s in chunk {
                let stream = &train.streams()[s];
                let times = sample_times(stream.horizon(), train_samples(stream), lik.scheme, &mut rng);
                grad.fill(0.0);
                let report = crate::likelihood::log_likelihood_at(&model, stream, &times, &lik, Some(&mut grad))?;
                if !report.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(Error::NonFinite { stream: s });
                }
                ll_sum += report.total;
                events += report.num_events();
                for (b, g) in batch_grad.iter_mut().zip(&grad) {
                    *b -= g;
                }
            }
            reparam.to_raw_grad(&raw, &mut batch_grad);
            adam.step(&mut raw, &batch_grad);
            reparam.to_values(&raw, &mut values);
            model.set_params(&values);
        }
        let dev_ll = score_dataset(&model, dev, config.eval_seed)?.per_event();
        log.push(EpochLog {
            epoch,
            train_ll: Some(ll_sum / events.max(1) as f64),
            dev_ll,
        });
        stopped = epoch;
        if dev_ll > best_dev {
            best_dev = dev_ll;
            best = model.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    Ok(FitReport {
        best_params: best,
        best_dev_ll: best_dev,
        epoch_log: log,
        stopped_epoch: stopped,
    })
}

/// Initializes a model of `config.kind` and trains it.
pub fn train_kind(train_set: &Dataset, dev: &Dataset, config: &TrainConfig) -> Result<FitReport<Model>> {
    let mut rng = keyed_rng(config.seed, &[0, u64::MAX]);
    let init = init_params(config.kind, train_set.num_types(), config.hidden, &mut rng)?;
    with_model!(init, m => {
        let fit = train(m, train_set, dev, config)?;
        Ok(FitReport {
            best_params: wrap(fit.best_params),
            best_dev_ll: fit.best_dev_ll,
            epoch_log: fit.epoch_log,
            stopped_epoch: fit.stopped_epoch,
        })
    })
}

/// Lifts a concrete model into [`Model`].
pub trait IntoModel {
    fn into_model(self) -> Model;
}

impl IntoModel for HawkesParams {
    fn into_model(self) -> Model {
        Model::Hawkes(self)
    }
}

impl IntoModel for SelfModulatingParams {
    fn into_model(self) -> Model {
        Model::SelfModulating(self)
    }
}

impl IntoModel for CtLstmParams {
    fn into_model(self) -> Model {
        Model::Neural(self)
    }
}

fn wrap<M: IntoModel>(m: M) -> Model {
    m.into_model()
}

/// Trains independently on each prefix of `train_set` and scores the best
/// parameters on `held_out`. Returns `(prefix size, ll per event)` rows.
pub fn learning_curve(
    train_set: &Dataset,
    dev: &Dataset,
    held_out: &Dataset,
    prefix_sizes: &[usize],
    config: &TrainConfig,
) -> Result<Vec<(usize, f64)>> {
    if prefix_sizes.windows(2).any(|w| w[0] > w[1]) || prefix_sizes.iter().any(|&n| n > train_set.len()) {
        return Err(Error::InvalidArgument("prefix sizes must ascend and not exceed the training set"));
    }
    prefix_sizes
        .iter()
        .map(|&n| {
            let fit = train_kind(&train_set.prefix(n), dev, config)?;
            let score = with_model!(&fit.best_params, m => score_dataset(m, held_out, config.eval_seed))?;
            Ok((n, score.per_event()))
        })
        .collect()
}
