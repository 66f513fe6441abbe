//! Synthetic studies: random ground-truth models, generated datasets,
//! censoring, intensity recovery, and the superposition harness.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::classical::{HawkesParams, SelfModulatingParams};
use crate::ctlstm::{CtLstmParams, Gate};
use crate::error::{Error, Result};
use crate::events::{Dataset, Event, EventStream, EventType};
use crate::model::{Model, ModelKind, PointProcess};
use crate::sampler::{keyed_rng, sample_stream_with, SampleConfig, ThinningStats};
use crate::transfer::softplus_scaled;
use crate::with_model;

/// Hidden size of generated neural models.
pub const GENERATOR_HIDDEN: usize = 8;

/// Probe times per held-out stream when comparing intensities.
pub const MSE_PROBES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundTruthSpec {
    pub kind: ModelKind,
    pub num_types: usize,
    pub seed: u64,
    /// Inclusive range of stream lengths in events.
    pub length_range: (usize, usize),
    /// Train, dev and test stream counts.
    pub counts: (usize, usize, usize),
    pub hidden: usize,
}

impl GroundTruthSpec {
    /// Desk-scale defaults: `K = 5`, lengths 20 to 100, 800/100/100 streams.
    pub fn desk(kind: ModelKind, seed: u64) -> Self {
        GroundTruthSpec {
            kind,
            num_types: 5,
            seed,
            length_range: (20, 100),
            counts: (800, 100, 100),
            hidden: GENERATOR_HIDDEN,
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.length_range;
        if self.num_types == 0 || self.hidden == 0 {
            return Err(Error::InvalidArgument("K and D must be positive"));
        }
        if lo == 0 || lo > hi || hi > 10_000 {
            return Err(Error::InvalidArgument("length range must lie within [1, 10000]"));
        }
        if self.counts.0 == 0 || self.counts.1 == 0 || self.counts.2 == 0 {
            return Err(Error::InvalidArgument("stream counts must be positive"));
        }
        Ok(())
    }
}

fn uniform_vec<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..=hi)).collect()
}

/// Draws a random generating model.
///
/// Hawkes: `μ, α ~ U[0, 1]`, `δ ~ U[10, 20]`. Self-modulating: `μ, α ~
/// U[-1, 1]`, `δ ~ U[10, 20]`, unit scales. Neural: every weight `~ U[-1,
/// 1]`, with each scale passed through a softplus to keep it positive.
pub fn gen_ground_truth(spec: &GroundTruthSpec) -> Result<Model> {
    spec.validate()?;
    let k = spec.num_types;
    let mut rng = keyed_rng(spec.seed, &[u64::MAX]);
    Ok(match spec.kind {
        ModelKind::Hawkes => {
            let mu = uniform_vec(&mut rng, k, 0.0, 1.0);
            let alpha = uniform_vec(&mut rng, k * k, 0.0, 1.0);
            let delta = uniform_vec(&mut rng, k * k, 10.0, 20.0);
            Model::Hawkes(HawkesParams::new(mu, alpha, delta)?)
        }
        ModelKind::SelfModulating => {
            let mu = uniform_vec(&mut rng, k, -1.0, 1.0);
            let alpha = uniform_vec(&mut rng, k * k, -1.0, 1.0);
            let delta = uniform_vec(&mut rng, k * k, 10.0, 20.0);
            Model::SelfModulating(SelfModulatingParams::new(mu, alpha, delta, vec![1.0; k])?)
        }
        ModelKind::Neural => {
            let mut p = CtLstmParams::zeros(k, spec.hidden);
            for v in p.as_mut_slice() {
                *v = rng.random_range(-1.0..=1.0);
            }
            for s in p.scale_mut() {
                *s = softplus_scaled(*s, 1.0);
            }
            Model::Neural(p)
        }
    })
}

/// Train, dev and test sets sampled from one model.
#[derive(Clone, Debug, PartialEq)]
pub struct Splits {
    pub train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
}

/// Samples every stream to a length drawn uniformly from the spec's range;
/// its horizon is its last event time. Stream `i` of split `s` (0 train,
/// 1 dev, 2 test) uses `keyed_rng(seed, &[s, i])`.
pub fn gen_synthetic<M: PointProcess + ?Sized>(model: &M, spec: &GroundTruthSpec) -> Result<Splits> {
    spec.validate()?;
    let (lo, hi) = spec.length_range;
    let mut stats = ThinningStats::default();
    let mut split = |which: u64, count: usize| -> Result<Dataset> {
        let streams = (0..count)
            .map(|i| {
                let mut rng = keyed_rng(spec.seed, &[which, i as u64]);
                let len = rng.random_range(lo..=hi);
                sample_stream_with(model, &SampleConfig::max_events(len, spec.seed), &mut rng, &mut stats)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset::from_parts_unchecked(streams, model.num_types()))
    };
    Ok(Splits {
        train: split(0, spec.counts.0)?,
        dev: split(1, spec.counts.1)?,
        test: split(2, spec.counts.2)?,
    })
}

/// Deletes every event whose type is in `removed` and renumbers the
/// surviving types densely in their original order. Horizons are kept.
pub fn censor(dataset: &Dataset, removed: &[EventType]) -> Result<Dataset> {
    let k = dataset.num_types();
    if let Some(bad) = removed.iter().find(|t| t.0 == 0 || t.0 as usize > k) {
        return Err(Error::TypeCountMismatch {
            stream: 0,
            expected: k,
            found: bad.0 as usize,
        });
    }
    let mut map = vec![None; k + 1];
    let mut next = 0u32;
    for old in 1..=k as u32 {
        if !removed.contains(&EventType(old)) {
            next += 1;
            map[old as usize] = Some(EventType(next));
        }
    }
    let streams = dataset
        .streams()
        .iter()
        .map(|s| {
            let events = s
                .events()
                .iter()
                .filter_map(|e| map[e.k.0 as usize].map(|k| Event { k, t: e.t }))
                .collect();
            EventStream::from_parts_unchecked(events, s.horizon())
        })
        .collect();
    Ok(Dataset::from_parts_unchecked(streams, next as usize))
}

/// `(t_i, λ(t_i))` at `MSE_PROBES` evenly spaced interior times, each
/// conditioned on the events strictly before it.
fn probe_intensities<M: PointProcess + ?Sized>(model: &M, stream: &EventStream, out: &mut Vec<Vec<f64>>) {
    let k = model.num_types();
    let mut state = model.initial_state();
    let mut next = 0;
    let events = stream.events();
    for p in 0..MSE_PROBES {
        let t = stream.horizon() * (p as f64 + 0.5) / MSE_PROBES as f64;
        while next < events.len() && events[next].t < t {
            model.observe(&mut state, events[next]);
            next += 1;
        }
        let mut lam = vec![0.0; k];
        model.intensities(&state, t, &mut lam);
        out.push(lam);
    }
}

/// Mean squared error of `fitted` against `truth` intensities on held-out
/// probe times, as a fraction of the variance of the true intensity. The
/// fraction is computed per type and averaged over the types.
pub fn intensity_mse(truth: &Model, fitted: &Model, held_out: &Dataset) -> Result<f64> {
    let k = truth.num_types();
    if fitted.num_types() != k || held_out.num_types() != k {
        return Err(Error::DimensionMismatch {
            model: fitted.num_types(),
            data: k,
        });
    }
    let mut true_lam = Vec::new();
    let mut fit_lam = Vec::new();
    for stream in held_out.streams() {
        with_model!(truth, m => probe_intensities(m, stream, &mut true_lam));
        with_model!(fitted, m => probe_intensities(m, stream, &mut fit_lam));
    }
    let n = true_lam.len() as f64;
    if n == 0.0 {
        return Err(Error::InvalidArgument("no held-out streams to probe"));
    }
    let mut ratio_sum = 0.0;
    for j in 0..k {
        let mean = true_lam.iter().map(|l| l[j]).sum::<f64>() / n;
        let var = true_lam.iter().map(|l| (l[j] - mean) * (l[j] - mean)).sum::<f64>() / n;
        let mse = true_lam
            .iter()
            .zip(&fit_lam)
            .map(|(a, b)| (a[j] - b[j]) * (a[j] - b[j]))
            .sum::<f64>()
            / n;
        ratio_sum += if var > 0.0 { mse / var } else { mse };
    }
    Ok(ratio_sum / k as f64)
}

/// Outcome of [`superposition_check`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuperpositionReport {
    /// Largest absolute intensity difference for the block-diagonal
    /// self-modulating model; must be exactly zero.
    pub decomposable_max_diff: f64,
    /// Largest relative deviation for the gate-rigged neural model.
    pub rigged_max_rel_dev: f64,
    /// Largest relative deviation for an unrigged neural model.
    pub unrigged_max_rel_dev: f64,
    pub interleavings: usize,
    /// Human-readable descriptions of failed probes.
    pub violations: Vec<alloc::string::String>,
}

impl SuperpositionReport {
    pub const RIGGED_TOLERANCE: f64 = 1e-6;
    pub const POWER_THRESHOLD: f64 = 1e-3;

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const INTERLEAVINGS: usize = 100;
const PROBES_PER_INTERLEAVING: usize = 20;

/// Between 1 and `max_count - 1` events of the given types on `(0, horizon)`.
fn random_stream<R: Rng + ?Sized>(rng: &mut R, types: &[u32], max_count: usize, horizon: f64) -> Vec<Event> {
    let count = rng.random_range(1..max_count);
    let mut times: Vec<f64> = (0..count).map(|_| rng.random_range(0.01..horizon)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .into_iter()
        .map(|t| Event::new(types[rng.random_range(0..types.len())], t))
        .collect()
}

fn merge(a: &[Event], b: &[Event]) -> Vec<Event> {
    let mut all: Vec<Event> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.t.total_cmp(&y.t));
    all.dedup_by(|x, y| x.t == y.t);
    all
}

/// Intensities of all types at `t`, conditioned on the events before `t`.
fn intensities_at<M: PointProcess + ?Sized>(model: &M, history: &[Event], t: f64) -> Vec<f64> {
    let mut state = model.initial_state();
    for e in history.iter().take_while(|e| e.t < t) {
        model.observe(&mut state, *e);
    }
    let mut out = vec![0.0; model.num_types()];
    model.intensities(&state, t, &mut out);
    out
}

/// Four types in two blocks, `{1, 2}` and `{3, 4}`, with no cross-block
/// influence.
fn block_diagonal_model<R: Rng + ?Sized>(rng: &mut R) -> Result<SelfModulatingParams> {
    let k = 4;
    let block = |t: usize| t / 2;
    let mut alpha = vec![0.0; k * k];
    let mut delta = vec![1.0; k * k];
    for src in 0..k {
        for dst in 0..k {
            if block(src) == block(dst) {
                alpha[src * k + dst] = rng.random_range(-1.0..1.0);
                delta[src * k + dst] = rng.random_range(0.5..3.0);
            }
        }
    }
    SelfModulatingParams::new(uniform_vec(rng, k, -1.0, 1.0), alpha, delta, uniform_vec(rng, k, 0.5, 2.0))
}

/// Neural model with `K = 3` in which type-3 events cannot affect the
/// intensities of types 1 and 2.
///
/// Hidden unit `D - 1` is a flag that only the type-3 embedding sets. The
/// remaining units `S` read only each other, and a type-3 event drives
/// their forget gates fully open and their input gates fully shut, so
/// their memory passes through the event unchanged. Their output gates
/// and decay rates depend on biases alone. Types 1 and 2 project from `S`
/// only.
fn rigged_neural<R: Rng + ?Sized>(rng: &mut R, hidden: usize) -> CtLstmParams {
    let d = hidden;
    let flag = d - 1;
    let insulated = 3;
    let mut p = CtLstmParams::zeros(3, d);
    for v in p.as_mut_slice() {
        *v = rng.random_range(-1.0..1.0);
    }
    for s in p.scale_mut() {
        *s = rng.random_range(0.5..2.0);
    }
    for row in 0..=3 {
        let e = &mut p.embed_mut()[row * d..(row + 1) * d];
        if row == insulated {
            e.fill(0.0);
            e[flag] = 1.0;
        } else {
            e[flag] = 0.0;
        }
    }
    for gate in Gate::ALL {
        for s in 0..flag {
            let u_row = &mut p.u_mut(gate)[s * d..(s + 1) * d];
            u_row[flag] = 0.0;
            let u_mass: f64 = u_row.iter().map(|x| x.abs()).sum();
            let bias = p.bias(gate)[s];
            let w_row = &mut p.w_mut(gate)[s * d..(s + 1) * d];
            match gate {
                Gate::Output | Gate::Decay => {
                    w_row.fill(0.0);
                    p.u_mut(gate)[s * d..(s + 1) * d].fill(0.0);
                }
                Gate::Forget | Gate::TargetForget => w_row[flag] = 37.0 + u_mass + bias.abs(),
                Gate::Input | Gate::TargetInput => w_row[flag] = -(37.0 + u_mass + bias.abs()),
                Gate::Candidate => {}
            }
        }
    }
    for k in 0..2 {
        p.proj_mut()[k * d + flag] = 0.0;
    }
    p
}

fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / f64::max(a.abs(), b.abs()).max(f64::MIN_POSITIVE)
}

/// Largest relative change in the intensities of types 1 and 2 when
/// random type-3 events are inserted into random type-1/2 histories.
fn insulation_deviation<M: PointProcess + ?Sized, R: Rng + ?Sized>(model: &M, rng: &mut R) -> f64 {
    let horizon = 10.0;
    let mut worst: f64 = 0.0;
    for _ in 0..INTERLEAVINGS {
        let base = random_stream(rng, &[1, 2], 15, horizon);
        let noise = random_stream(rng, &[3], 10, horizon);
        let mixed = merge(&base, &noise);
        for _ in 0..PROBES_PER_INTERLEAVING {
            let t = rng.random_range(0.0..horizon + 2.0);
            let a = intensities_at(model, &base, t);
            let b = intensities_at(model, &mixed, t);
            worst = worst.max(rel_dev(a[0], b[0])).max(rel_dev(a[1], b[1]));
        }
    }
    worst
}

/// Checks that independent sub-processes stay independent when their
/// streams are superposed, for a block-diagonal self-modulating model
/// (exactly) and a gate-rigged neural model (to `1e-6` relative). An
/// unrigged neural model must deviate by at least `1e-3`, showing the probe
/// has power.
pub fn superposition_check(seed: u64) -> Result<SuperpositionReport> {
    use alloc::format;
    let mut rng = keyed_rng(seed, &[0]);
    let mut report = SuperpositionReport {
        interleavings: INTERLEAVINGS,
        ..Default::default()
    };

    let dsm = block_diagonal_model(&mut rng)?;
    for _ in 0..INTERLEAVINGS {
        let a = random_stream(&mut rng, &[1, 2], 15, 10.0);
        let b = random_stream(&mut rng, &[3, 4], 15, 10.0);
        let mixed = merge(&a, &b);
        for _ in 0..PROBES_PER_INTERLEAVING {
            let t = rng.random_range(0.0..12.0);
            let full = intensities_at(&dsm, &mixed, t);
            let left = intensities_at(&dsm, &a, t);
            let right = intensities_at(&dsm, &b, t);
            for j in 0..4 {
                let sub = if j < 2 { left[j] } else { right[j] };
                report.decomposable_max_diff = report.decomposable_max_diff.max((full[j] - sub).abs());
            }
        }
    }
    if report.decomposable_max_diff != 0.0 {
        report
            .violations
            .push(format!("block-diagonal intensities differ by {:e}", report.decomposable_max_diff));
    }

    let rigged = rigged_neural(&mut rng, GENERATOR_HIDDEN);
    report.rigged_max_rel_dev = insulation_deviation(&rigged, &mut rng);
    if report.rigged_max_rel_dev > SuperpositionReport::RIGGED_TOLERANCE {
        report
            .violations
            .push(format!("rigged neural deviation {:e} exceeds 1e-6", report.rigged_max_rel_dev));
    }

    let mut plain = CtLstmParams::zeros(3, GENERATOR_HIDDEN);
    for v in plain.as_mut_slice() {
        *v = rng.random_range(-1.0..1.0);
    }
    for s in plain.scale_mut() {
        *s = rng.random_range(0.5..2.0);
    }
    report.unrigged_max_rel_dev = insulation_deviation(&plain, &mut rng);
    if report.unrigged_max_rel_dev < SuperpositionReport::POWER_THRESHOLD {
        report
            .violations
            .push(format!("unrigged neural deviation {:e} is below 1e-3", report.unrigged_max_rel_dev));
    }
    Ok(report)
}
