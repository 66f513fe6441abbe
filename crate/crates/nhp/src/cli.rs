//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for bad flags or inputs, 2 when the numerics
//! fail (intensity underflow, thinning bound violation, non-finite loss).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nhp_core::likelihood::{finite_diff_check, score_dataset};
use nhp_core::predictor::evaluate_predictions;
use nhp_core::sampler::{keyed_rng, sample_dataset, SampleConfig, StopRule, ThinningVariant};
use nhp_core::synthetic::{gen_ground_truth, superposition_check, GroundTruthSpec};
use nhp_core::trainer::{train_kind, TrainConfig};
use nhp_core::{with_model, EventStream, ModelKind, Trainable};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::experiments::{all_patterns, missing_data_experiment, pilot_experiment, sample_patterns, Scale};
use crate::io;

#[derive(Parser, Debug)]
#[command(name = "nhp", version, about = "Hawkes, self-modulating and neural Hawkes point processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model to a training stream file with early stopping on a dev file.
    Train(TrainArgs),
    /// Score a stream file under a model.
    Eval(EvalArgs),
    /// Draw streams from a model by thinning.
    Sample(SampleArgs),
    /// Predict every next event from its true history.
    Predict(PredictArgs),
    /// Run one of the synthetic studies.
    Experiment(ExperimentArgs),
    /// Compare analytic and finite-difference gradients on a random instance.
    Gradcheck(GradcheckArgs),
    /// Print a model's trainable parameter count.
    Paramcount(ParamcountArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Sempp,
    Dsmpp,
    Nsmmpp,
}

impl From<Kind> for ModelKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Sempp => ModelKind::Hawkes,
            Kind::Dsmpp => ModelKind::SelfModulating,
            Kind::Nsmmpp => ModelKind::Neural,
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    kind: Kind,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Hidden size of the neural model.
    #[arg(long = "D", default_value_t = 8)]
    hidden: usize,
    #[arg(long, default_value_t = 1234)]
    eval_seed: u64,
    #[arg(long, default_value_t = 50)]
    max_epochs: usize,
    #[arg(long, default_value_t = 3)]
    patience: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    /// Parameter file to write.
    #[arg(long)]
    out: PathBuf,
    /// Epoch log CSV (epoch, train_ll, dev_ll).
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Seeds the integral sample times.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Variant {
    Aggregate,
    PerType,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    /// Observation window; each stream covers `(0, T]`.
    #[arg(long = "T", conflicts_with = "max_events", required_unless_present = "max_events")]
    horizon: Option<f64>,
    /// Stop each stream after this many events instead.
    #[arg(long)]
    max_events: Option<usize>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "aggregate")]
    variant: Variant,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Thinning draws per prediction.
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-event CSV of true and predicted times and types.
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Pilot,
    Missing,
    Superposition,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScaleName {
    Desk,
    Paper,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "desk")]
    scale: ScaleName,
    /// Run all 31 censoring patterns instead of 5 sampled ones.
    #[arg(long)]
    all_patterns: bool,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Hidden size of the ground-truth neural generator.
    #[arg(long = "generator-D")]
    generator_hidden: Option<usize>,
    /// Directory for the JSON report and CSV tables.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long)]
    kind: Kind,
    #[arg(long = "K")]
    num_types: usize,
    #[arg(long = "D", default_value_t = 4)]
    hidden: usize,
    #[arg(long)]
    seed: u64,
    /// Largest stream length; the actual length is drawn from 1 to this.
    #[arg(long, default_value_t = 20)]
    events: usize,
    #[arg(long, default_value_t = 3e-4)]
    step: f64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

#[derive(Args, Debug)]
struct ParamcountArgs {
    #[arg(long)]
    kind: Kind,
    #[arg(long = "K")]
    num_types: usize,
    #[arg(long = "D", default_value_t = 1)]
    hidden: usize,
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code. Diagnostics go to stderr, results to stdout or `--out`.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {}", msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: "));
            return 1;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match dispatch(cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn header(command: &str, seed: u64, config: Value) -> Value {
    json!({ "command": command, "seed": seed, "config": config })
}

fn dispatch(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Train(a) => train(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Sample(a) => sample(a, out),
        Command::Predict(a) => predict(a, out),
        Command::Experiment(a) => experiment(a, out),
        Command::Gradcheck(a) => gradcheck(a, out),
        Command::Paramcount(a) => {
            let kind = ModelKind::from(a.kind);
            if a.num_types == 0 || a.hidden == 0 {
                return Err(CliError::Usage("--K and --D must be at least 1".into()));
            }
            writeln!(out, "{}", kind.param_count(a.num_types, a.hidden))?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct EpochRow {
    epoch: usize,
    train_ll: Option<f64>,
    dev_ll: f64,
}

fn train(a: TrainArgs, out: &mut dyn Write) -> CliResult<()> {
    let train = io::read_streams(&a.train)?;
    let dev = io::read_streams(&a.dev)?;
    if dev.num_types() != train.num_types() {
        return Err(CliError::Usage("train and dev files declare different K".into()));
    }
    let mut cfg = TrainConfig::new(a.kind.into(), a.seed);
    cfg.hidden = a.hidden;
    cfg.eval_seed = a.eval_seed;
    cfg.max_epochs = a.max_epochs;
    cfg.patience = a.patience;
    cfg.adam.learning_rate = a.learning_rate;
    let head = header(
        "train",
        a.seed,
        json!({
            "kind": cfg.kind.name(), "D": cfg.hidden, "eval_seed": cfg.eval_seed,
            "max_epochs": cfg.max_epochs, "patience": cfg.patience,
            "learning_rate": cfg.adam.learning_rate, "beta1": cfg.adam.beta1,
            "beta2": cfg.adam.beta2, "epsilon": cfg.adam.epsilon,
            "threads": a.threads,
        }),
    );
    let fit = train_kind(&train, &dev, &cfg)?;
    io::write_json(&a.out, &io::model_to_json(&fit.best_params))?;
    if let Some(log) = &a.log {
        let rows: Vec<EpochRow> = fit
            .epoch_log
            .iter()
            .map(|e| EpochRow {
                epoch: e.epoch,
                train_ll: e.train_ll,
                dev_ll: e.dev_ll,
            })
            .collect();
        io::write_csv(log, &rows, Some(&head))?;
    }
    writeln!(out, "# {head}")?;
    writeln!(
        out,
        "{}",
        json!({ "best_dev_ll_per_event": fit.best_dev_ll, "stopped_epoch": fit.stopped_epoch })
    )?;
    Ok(())
}

fn emit(out: &mut dyn Write, path: Option<&Path>, head: &Value, body: Value) -> CliResult<()> {
    let mut doc = body;
    doc["provenance"] = head.clone();
    match path {
        Some(p) => io::write_json(p, &doc),
        None => {
            writeln!(out, "# {head}")?;
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("reports serialize"))?;
            Ok(())
        }
    }
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = io::read_model(&a.model)?;
    let data = io::read_streams(&a.data)?;
    if data.num_types() > model.num_types() {
        return Err(nhp_core::Error::DimensionMismatch {
            model: model.num_types(),
            data: data.num_types(),
        }
        .into());
    }
    let score = with_model!(&model, m => score_dataset(m, &data, a.seed))?;
    let per_stream: Vec<Value> = score
        .per_stream
        .iter()
        .zip(&score.stream_events)
        .map(|(&t, &n)| json!({ "total": t, "events": n, "per_event": if n > 0 { t / n as f64 } else { 0.0 } }))
        .collect();
    let head = header("eval", a.seed, json!({ "model": a.model, "data": a.data, "threads": a.threads }));
    let body = json!({
        "total": score.total,
        "type_term": score.type_term,
        "time_term": score.time_term,
        "events": score.num_events,
        "total_per_event": score.per_event(),
        "type_term_per_event": score.type_per_event(),
        "time_term_per_event": score.time_per_event(),
        "streams": per_stream,
    });
    emit(out, a.out.as_deref(), &head, body)
}

fn sample(a: SampleArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = io::read_model(&a.model)?;
    let stop = match (a.horizon, a.max_events) {
        (Some(t), _) if t > 0.0 && t.is_finite() => StopRule::Horizon(t),
        (Some(_), _) => return Err(CliError::Usage("--T must be positive and finite".into())),
        (None, Some(n)) => StopRule::MaxEvents(n),
        (None, None) => return Err(CliError::Usage("one of --T or --max-events is required".into())),
    };
    let variant = match a.variant {
        Variant::Aggregate => ThinningVariant::Aggregate,
        Variant::PerType => ThinningVariant::PerType,
    };
    let cfg = SampleConfig {
        stop,
        seed: a.seed,
        variant,
        eos: None,
    };
    let data = with_model!(&model, m => sample_dataset(m, a.n, &cfg))?;
    let head = header(
        "sample",
        a.seed,
        json!({ "model": a.model, "T": a.horizon, "max_events": a.max_events, "n": a.n,
                "variant": format!("{:?}", variant), "threads": a.threads }),
    );
    let mut file = io::create(&a.out)?;
    io::write_streams(&mut file, &data, Some(&head))?;
    file.flush()?;
    writeln!(out, "wrote {} streams, {} events to {}", data.len(), data.num_events(), a.out.display())?;
    Ok(())
}

#[derive(Serialize)]
struct RecordRow {
    stream: usize,
    index: usize,
    true_time: f64,
    predicted_time: f64,
    true_type: u32,
    predicted_type: u32,
}

fn predict(a: PredictArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = io::read_model(&a.model)?;
    let data = io::read_streams(&a.data)?;
    if data.num_types() > model.num_types() {
        return Err(nhp_core::Error::DimensionMismatch {
            model: model.num_types(),
            data: data.num_types(),
        }
        .into());
    }
    if a.m == 0 {
        return Err(CliError::Usage("--m must be at least 1".into()));
    }
    let (metrics, records) = with_model!(&model, p => evaluate_predictions(p, &data, a.m, a.seed))?;
    let head = header("predict", a.seed, json!({ "model": a.model, "data": a.data, "m": a.m, "threads": a.threads }));
    if let Some(path) = &a.records {
        let rows: Vec<RecordRow> = records
            .iter()
            .map(|r| RecordRow {
                stream: r.stream,
                index: r.index,
                true_time: r.true_time,
                predicted_time: r.predicted_time,
                true_type: r.true_k.0,
                predicted_type: r.predicted_k.0,
            })
            .collect();
        io::write_csv(path, &rows, Some(&head))?;
    }
    let body = json!({
        "rmse": metrics.rmse,
        "error_rate": metrics.error_rate,
        "predictions": metrics.n_predictions,
    });
    emit(out, a.out.as_deref(), &head, body)
}

fn experiment(a: ExperimentArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut scale = match a.scale {
        ScaleName::Desk => Scale::desk(),
        ScaleName::Paper => Scale::paper(),
    };
    scale.threads = a.threads.max(1);
    if let Some(e) = a.max_epochs {
        scale.max_epochs = e;
    }
    if let Some(p) = a.patience {
        scale.patience = p;
    }
    if let Some(lr) = a.learning_rate {
        scale.learning_rate = lr;
    }
    if let Some(d) = a.generator_hidden {
        if d == 0 {
            return Err(CliError::Usage("--generator-D must be at least 1".into()));
        }
        scale.generator_hidden = d;
    }
    let head = header(
        "experiment",
        a.seed,
        json!({
            "mode": format!("{:?}", a.mode).to_lowercase(), "K": scale.num_types,
            "counts": [scale.counts.0, scale.counts.1, scale.counts.2],
            "length_range": [scale.length_range.0, scale.length_range.1],
            "D": scale.fit_hidden, "generator_D": scale.generator_hidden, "learning_rate": scale.learning_rate,
            "max_epochs": scale.max_epochs, "patience": scale.patience,
            "all_patterns": a.all_patterns, "threads": scale.threads,
        }),
    );
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::Io {
        path: a.out.display().to_string(),
        source: e,
    })?;
    let summary = match a.mode {
        Mode::Pilot => {
            let kinds = ModelKind::ALL;
            let report = pilot_experiment(a.seed, &scale, &kinds, &kinds)?;
            io::write_csv(&a.out.join("pilot_grid.csv"), &report.cells, Some(&head))?;
            io::write_csv(&a.out.join("pilot_oracle.csv"), &report.oracle, Some(&head))?;
            let mut doc = serde_json::to_value(&report).expect("reports serialize");
            doc["provenance"] = head.clone();
            io::write_json(&a.out.join("pilot.json"), &doc)?;
            json!({ "cells": report.cells.len(), "out": a.out })
        }
        Mode::Missing => {
            let patterns = if a.all_patterns {
                all_patterns(scale.num_types)
            } else {
                sample_patterns(scale.num_types, 5, a.seed)
            };
            let rows = missing_data_experiment(a.seed, &patterns, &scale)?;
            io::write_csv(&a.out.join("missing.csv"), &rows, Some(&head))?;
            let wins = rows.iter().filter(|r| r.nsmmpp_ll_per_event >= r.sempp_ll_per_event).count();
            let doc = json!({ "rows": rows, "neural_wins": wins, "provenance": head });
            io::write_json(&a.out.join("missing.json"), &doc)?;
            json!({ "patterns": rows.len(), "neural_wins": wins, "out": a.out })
        }
        Mode::Superposition => {
            let r = superposition_check(a.seed)?;
            let doc = json!({
                "passed": r.passed(),
                "decomposable_max_diff": r.decomposable_max_diff,
                "rigged_max_rel_dev": r.rigged_max_rel_dev,
                "unrigged_max_rel_dev": r.unrigged_max_rel_dev,
                "interleavings": r.interleavings,
                "violations": r.violations,
                "provenance": head,
            });
            io::write_json(&a.out.join("superposition.json"), &doc)?;
            json!({ "passed": r.passed(), "out": a.out })
        }
    };
    writeln!(out, "# {head}")?;
    writeln!(out, "{summary}")?;
    Ok(())
}

/// Random model of `kind` with a random stream of up to `max_events`
/// events sampled from it, the window extended past the last event.
pub fn gradcheck_instance(
    kind: ModelKind,
    num_types: usize,
    hidden: usize,
    max_events: usize,
    seed: u64,
) -> CliResult<(nhp_core::Model, EventStream)> {
    let spec = GroundTruthSpec {
        num_types,
        hidden,
        ..GroundTruthSpec::desk(kind, seed)
    };
    let model = gen_ground_truth(&spec)?;
    let mut rng = keyed_rng(seed, &[1]);
    let n = rng.random_range(1..=max_events.max(1));
    let cfg = SampleConfig::max_events(n, seed);
    let drawn = with_model!(&model, m => nhp_core::sampler::sample_stream_with(
        m, &cfg, &mut rng, &mut Default::default()))?;
    let horizon = drawn.last_time() + rng.random_range(0.1..1.0);
    let stream = EventStream::new(drawn.into_events(), horizon, num_types)?;
    Ok((model, stream))
}

fn gradcheck(a: GradcheckArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.num_types == 0 || a.hidden == 0 {
        return Err(CliError::Usage("--K and --D must be at least 1".into()));
    }
    let kind = ModelKind::from(a.kind);
    let (model, stream) = gradcheck_instance(kind, a.num_types, a.hidden, a.events, a.seed)?;
    let n = 2 * stream.len().max(1);
    let err = with_model!(&model, m => finite_diff_check(m, &stream, a.step, n, a.seed))?;
    let head = header(
        "gradcheck",
        a.seed,
        json!({ "kind": kind.name(), "K": a.num_types, "D": a.hidden, "events": stream.len(),
                "params": with_model!(&model, m => m.num_params()), "step": a.step }),
    );
    writeln!(out, "# {head}")?;
    let verdict = if err <= a.tolerance { "PASS" } else { "FAIL" };
    writeln!(out, "max_rel_error {err:.3e} {verdict}")?;
    Ok(())
}
