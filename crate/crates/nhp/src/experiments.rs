//! Synthetic experiment drivers: pilot cross-fitting with intensity
//! recovery, the censoring study, and the superposition harness.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nhp_core::likelihood::score_dataset;
use nhp_core::sampler::keyed_rng;
use nhp_core::synthetic::{
    censor, gen_ground_truth, gen_synthetic, intensity_mse, GroundTruthSpec, Splits, GENERATOR_HIDDEN,
};
use nhp_core::trainer::{train_kind, FitReport, TrainConfig};
use nhp_core::{with_model, Dataset, EventType, Model, ModelKind, Result};
use rand::seq::SliceRandom;
use serde::Serialize;

/// Data sizes and optimizer settings shared by the experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scale {
    pub num_types: usize,
    /// Train, dev and test stream counts.
    pub counts: (usize, usize, usize),
    pub length_range: (usize, usize),
    /// Hidden size of the ground-truth neural generator.
    pub generator_hidden: usize,
    /// Hidden size of fitted neural models.
    pub fit_hidden: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Worker threads for independent fits.
    pub threads: usize,
}

impl Scale {
    /// 800/100/100 streams of 20 to 100 events, `K = 5`, `D = 8`. Ten times
    /// fewer streams means ten times fewer steps per epoch than the paper
    /// split, so the epoch budget and patience are generous: with patience
    /// 5, neural fits often stopped on an early plateau.
    pub fn desk() -> Self {
        Scale {
            num_types: 5,
            counts: (800, 100, 100),
            length_range: (20, 100),
            generator_hidden: GENERATOR_HIDDEN,
            fit_hidden: 8,
            learning_rate: 1e-3,
            max_epochs: 300,
            patience: 20,
            threads: 1,
        }
    }

    /// The original 8000/1000/1000 split.
    pub fn paper() -> Self {
        Scale {
            counts: (8000, 1000, 1000),
            ..Scale::desk()
        }
    }

    fn spec(&self, kind: ModelKind, seed: u64) -> GroundTruthSpec {
        GroundTruthSpec {
            num_types: self.num_types,
            counts: self.counts,
            length_range: self.length_range,
            hidden: self.generator_hidden,
            ..GroundTruthSpec::desk(kind, seed)
        }
    }

    pub fn train_config(&self, kind: ModelKind, seed: u64) -> TrainConfig {
        let mut c = TrainConfig::new(kind, seed);
        c.hidden = self.fit_hidden;
        c.adam.learning_rate = self.learning_rate;
        c.max_epochs = self.max_epochs;
        c.patience = self.patience;
        c
    }
}

/// Runs `jobs` on up to `threads` worker threads, returning results in job
/// order. With one thread the jobs run inline.
pub fn run_parallel<T, F>(jobs: Vec<F>, threads: usize) -> Vec<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let n = jobs.len();
    if threads <= 1 || n <= 1 {
        return jobs.into_iter().map(|f| f()).collect();
    }
    let slots: Vec<Mutex<Option<F>>> = jobs.into_iter().map(|f| Mutex::new(Some(f))).collect();
    let results: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let job = slots[i].lock().unwrap().take().expect("each job runs once");
                *results[i].lock().unwrap() = Some(job());
            });
        }
    });
    results
        .into_iter()
        .map(|r| r.into_inner().unwrap().expect("every job finished"))
        .collect()
}

fn fit_seed(base: u64, generator: ModelKind, fitted: ModelKind) -> u64 {
    base.wrapping_mul(31).wrapping_add(10 * generator as u64 + fitted as u64 + 1)
}

/// Held-out log-likelihood per event of one fitted model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PilotCell {
    pub generator: &'static str,
    pub fitted: &'static str,
    pub test_ll_per_event: f64,
    /// Intensity MSE on the test streams as a fraction of the true
    /// intensity's variance.
    pub intensity_mse: f64,
    pub stopped_epoch: usize,
    pub best_dev_ll_per_event: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRow {
    pub generator: &'static str,
    pub test_ll_per_event: f64,
}

/// Stream-level comparison of the fitted neural and Hawkes models.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StreamWins {
    pub generator: &'static str,
    /// Fraction of test streams where the neural fit scores higher.
    pub neural_over_hawkes: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PilotReport {
    pub seed: u64,
    pub cells: Vec<PilotCell>,
    pub oracle: Vec<OracleRow>,
    pub stream_wins: Vec<StreamWins>,
    #[serde(skip)]
    pub fits: Vec<(ModelKind, ModelKind, Model)>,
}

impl PilotReport {
    pub fn cell(&self, generator: ModelKind, fitted: ModelKind) -> Option<&PilotCell> {
        self.cells
            .iter()
            .find(|c| c.generator == generator.name() && c.fitted == fitted.name())
    }

    pub fn oracle(&self, generator: ModelKind) -> Option<f64> {
        self.oracle
            .iter()
            .find(|o| o.generator == generator.name())
            .map(|o| o.test_ll_per_event)
    }

    pub fn wins(&self, generator: ModelKind) -> Option<f64> {
        self.stream_wins
            .iter()
            .find(|w| w.generator == generator.name())
            .map(|w| w.neural_over_hawkes)
    }
}

/// Ground truth and data for one generator kind.
pub fn pilot_data(kind: ModelKind, seed: u64, scale: &Scale) -> Result<(Model, Splits)> {
    let spec = scale.spec(kind, seed.wrapping_add(kind as u64));
    let truth = gen_ground_truth(&spec)?;
    let splits = with_model!(&truth, m => gen_synthetic(m, &spec))?;
    Ok((truth, splits))
}

/// For each generator kind: draws a ground-truth model and its data, fits
/// every kind in `fitted`, and scores the fits and the truth on the test
/// set.
pub fn pilot_experiment(
    seed: u64,
    scale: &Scale,
    generators: &[ModelKind],
    fitted: &[ModelKind],
) -> Result<PilotReport> {
    let data = generators
        .iter()
        .map(|&g| pilot_data(g, seed, scale).map(|d| (g, d)))
        .collect::<Result<Vec<_>>>()?;

    let mut jobs = Vec::new();
    for (g, (_, splits)) in &data {
        for &f in fitted {
            let cfg = scale.train_config(f, fit_seed(seed, *g, f));
            let g = *g;
            jobs.push(move || train_kind(&splits.train, &splits.dev, &cfg).map(|fit| (g, f, fit)));
        }
    }
    let fits: Vec<(ModelKind, ModelKind, FitReport<Model>)> =
        run_parallel(jobs, scale.threads).into_iter().collect::<Result<_>>()?;

    let eval_seed = TrainConfig::new(ModelKind::Hawkes, 0).eval_seed;
    let mut report = PilotReport {
        seed,
        cells: Vec::new(),
        oracle: Vec::new(),
        stream_wins: Vec::new(),
        fits: Vec::new(),
    };
    for (g, (truth, splits)) in &data {
        let oracle = with_model!(truth, m => score_dataset(m, &splits.test, eval_seed))?;
        report.oracle.push(OracleRow {
            generator: g.name(),
            test_ll_per_event: oracle.per_event(),
        });
        let mut per_stream: Vec<(ModelKind, Vec<f64>)> = Vec::new();
        for (_, f, fit) in fits.iter().filter(|(gg, _, _)| gg == g) {
            let score = with_model!(&fit.best_params, m => score_dataset(m, &splits.test, eval_seed))?;
            report.cells.push(PilotCell {
                generator: g.name(),
                fitted: f.name(),
                test_ll_per_event: score.per_event(),
                intensity_mse: intensity_mse(truth, &fit.best_params, &splits.test)?,
                stopped_epoch: fit.stopped_epoch,
                best_dev_ll_per_event: fit.best_dev_ll,
            });
            per_stream.push((*f, score.per_stream));
            report.fits.push((*g, *f, fit.best_params.clone()));
        }
        let find = |k: ModelKind| per_stream.iter().find(|(f, _)| *f == k).map(|(_, v)| v);
        if let (Some(n), Some(h)) = (find(ModelKind::Neural), find(ModelKind::Hawkes)) {
            let wins = n.iter().zip(h).filter(|(a, b)| a > b).count();
            report.stream_wins.push(StreamWins {
                generator: g.name(),
                neural_over_hawkes: wins as f64 / n.len().max(1) as f64,
            });
        }
    }
    Ok(report)
}

/// One censoring pattern, named by the set of removed types.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MissingRow {
    pub removed: String,
    pub kept_types: usize,
    pub sempp_ll_per_event: f64,
    pub nsmmpp_ll_per_event: f64,
}

/// Every censoring pattern that keeps at least one type: `2^K - 1` sets,
/// listed by removed types. The first entry removes nothing.
pub fn all_patterns(num_types: usize) -> Vec<Vec<EventType>> {
    let full = (1u32 << num_types) - 1;
    (0..full)
        .map(|mask| {
            (0..num_types as u32)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| EventType(b + 1))
                .collect()
        })
        .collect()
}

/// `n` distinct patterns that remove at least one type, chosen by `seed`.
pub fn sample_patterns(num_types: usize, n: usize, seed: u64) -> Vec<Vec<EventType>> {
    let mut censored: Vec<_> = all_patterns(num_types).into_iter().filter(|p| !p.is_empty()).collect();
    censored.shuffle(&mut keyed_rng(seed, &[7]));
    censored.truncate(n);
    censored
}

fn pattern_name(removed: &[EventType]) -> String {
    let ids: Vec<String> = removed.iter().map(|t| t.0.to_string()).collect();
    format!("{{{}}}", ids.join(","))
}

/// Fits Hawkes and neural models to censored views of data from a random
/// `K`-type Hawkes process and scores both on the censored test set.
pub fn missing_data_experiment(seed: u64, patterns: &[Vec<EventType>], scale: &Scale) -> Result<Vec<MissingRow>> {
    if patterns.iter().any(|p| p.len() >= scale.num_types) {
        return Err(nhp_core::Error::InvalidArgument("a censoring pattern must keep at least one type"));
    }
    let (_, splits) = pilot_data(ModelKind::Hawkes, seed, scale)?;
    let eval_seed = TrainConfig::new(ModelKind::Hawkes, 0).eval_seed;
    let views = patterns
        .iter()
        .map(|p| -> Result<(Dataset, Dataset, Dataset)> {
            Ok((censor(&splits.train, p)?, censor(&splits.dev, p)?, censor(&splits.test, p)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut jobs = Vec::new();
    for (i, (train, dev, test)) in views.iter().enumerate() {
        for kind in [ModelKind::Hawkes, ModelKind::Neural] {
            let cfg = scale.train_config(kind, seed.wrapping_mul(1009).wrapping_add(2 * i as u64 + kind as u64));
            jobs.push(move || -> Result<f64> {
                let fit = train_kind(train, dev, &cfg)?;
                Ok(with_model!(&fit.best_params, m => score_dataset(m, test, eval_seed))?.per_event())
            });
        }
    }
    let scores = run_parallel(jobs, scale.threads).into_iter().collect::<Result<Vec<_>>>()?;
    Ok(patterns
        .iter()
        .zip(scores.chunks(2))
        .map(|(p, s)| MissingRow {
            removed: pattern_name(p),
            kept_types: scale.num_types - p.len(),
            sempp_ll_per_event: s[0],
            nsmmpp_ll_per_event: s[1],
        })
        .collect())
}
