//! Drawing event streams by thinning.
//!
//! Proposals come from a homogeneous Poisson process whose rate bounds the
//! model's intensity on the whole interval after the last event; each
//! proposal at time `t` is kept with probability `λ(t) / λ*`. The bound is
//! recomputed after every accepted event.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::events::{Dataset, Event, EventStream, EventType};
use crate::model::PointProcess;

/// Proposals allowed per accepted event before giving up.
pub const MAX_PROPOSALS: u64 = 10_000_000;

/// Relative slack tolerated when auditing `λ(t) <= λ*`.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ThinningVariant {
    /// One thinning race per type; the earliest accepted time wins.
    PerType,
    /// Thin the summed intensity and pick the type at the accepted time.
    #[default]
    Aggregate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    /// Keep events in `(0, T]`; the stream horizon is `T`.
    Horizon(f64),
    /// Stop after this many events; the horizon is the last event time.
    MaxEvents(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleConfig {
    pub stop: StopRule,
    pub seed: u64,
    pub variant: ThinningVariant,
    /// A type after which nothing more can happen.
    pub eos: Option<EventType>,
}

impl SampleConfig {
    pub fn horizon(horizon: f64, seed: u64) -> Self {
        SampleConfig {
            stop: StopRule::Horizon(horizon),
            seed,
            variant: ThinningVariant::default(),
            eos: None,
        }
    }

    pub fn max_events(count: usize, seed: u64) -> Self {
        SampleConfig {
            stop: StopRule::MaxEvents(count),
            seed,
            variant: ThinningVariant::default(),
            eos: None,
        }
    }
}

/// Counters collected while thinning.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ThinningStats {
    pub proposals: u64,
    pub accepted: u64,
    /// Largest `λ(t) / λ*` seen at any proposal.
    pub max_ratio: f64,
}

fn audit(intensity: f64, bound: f64, t: f64, stats: &mut ThinningStats) -> Result<()> {
    stats.proposals += 1;
    if bound > 0.0 {
        stats.max_ratio = stats.max_ratio.max(intensity / bound);
    }
    if intensity > bound * (1.0 + BOUND_SLACK) {
        return Err(Error::BoundViolation { time: t, intensity, bound });
    }
    Ok(())
}

/// Draws the next event after the state's anchor, or `None` when every
/// intensity bound is zero and no further event can occur.
pub fn sample_next<M, R>(
    model: &M,
    state: &M::State,
    variant: ThinningVariant,
    rng: &mut R,
    stats: &mut ThinningStats,
) -> Result<Option<Event>>
where
    M: PointProcess + ?Sized,
    R: Rng + ?Sized,
{
    let k = model.num_types();
    let mut bounds = vec![0.0; k];
    let mut lam = vec![0.0; k];
    model.intensity_bounds(state, &mut bounds);
    let start = model.anchor(state);
    match variant {
        ThinningVariant::Aggregate => {
            let total: f64 = bounds.iter().sum();
            if !(total > 0.0) {
                return Ok(None);
            }
            let gap = Exp::new(total).map_err(|_| Error::InvalidArgument("non-finite intensity bound"))?;
            let mut t = start;
            for _ in 0..MAX_PROPOSALS {
                t += gap.sample(rng);
                let u = rng.random::<f64>() * total;
                model.intensities(state, t, &mut lam);
                audit(lam.iter().sum(), total, t, stats)?;
                let mut acc = 0.0;
                for (j, &l) in lam.iter().enumerate() {
                    acc += l;
                    if u < acc {
                        stats.accepted += 1;
                        return Ok(Some(Event {
                            k: EventType::from_index(j),
                            t,
                        }));
                    }
                }
            }
            Err(Error::ProposalLimit {
                proposals: MAX_PROPOSALS,
            })
        }
        ThinningVariant::PerType => {
            let mut best: Option<Event> = None;
            for (j, &bound) in bounds.iter().enumerate() {
                if !(bound > 0.0) {
                    continue;
                }
                let gap = Exp::new(bound).map_err(|_| Error::InvalidArgument("non-finite intensity bound"))?;
                let mut t = start;
                let mut accepted = false;
                for _ in 0..MAX_PROPOSALS {
                    t += gap.sample(rng);
                    let u = rng.random::<f64>() * bound;
                    model.intensities(state, t, &mut lam);
                    audit(lam[j], bound, t, stats)?;
                    if u <= lam[j] {
                        accepted = true;
                        break;
                    }
                }
                if !accepted {
                    return Err(Error::ProposalLimit {
                        proposals: MAX_PROPOSALS,
                    });
                }
                if best.is_none_or(|b| t < b.t) {
                    best = Some(Event {
                        k: EventType::from_index(j),
                        t,
                    });
                }
            }
            if best.is_some() {
                stats.accepted += 1;
            }
            Ok(best)
        }
    }
}

/// Samples one stream from the BOS state.
pub fn sample_stream<M: PointProcess + ?Sized>(model: &M, config: &SampleConfig) -> Result<EventStream> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    sample_stream_with(model, config, &mut rng, &mut ThinningStats::default())
}

pub fn sample_stream_with<M, R>(
    model: &M,
    config: &SampleConfig,
    rng: &mut R,
    stats: &mut ThinningStats,
) -> Result<EventStream>
where
    M: PointProcess + ?Sized,
    R: Rng + ?Sized,
{
    let mut state = model.initial_state();
    let mut events = Vec::new();
    loop {
        if let StopRule::MaxEvents(n) = config.stop {
            if events.len() >= n {
                break;
            }
        }
        let Some(event) = sample_next(model, &state, config.variant, rng, stats)? else {
            break;
        };
        if let StopRule::Horizon(h) = config.stop {
            if event.t > h {
                break;
            }
        }
        model.observe(&mut state, event);
        events.push(event);
        if config.eos == Some(event.k) {
            break;
        }
    }
    let horizon = match config.stop {
        StopRule::Horizon(h) => h,
        StopRule::MaxEvents(_) => events.last().map_or(f64::MIN_POSITIVE, |e| e.t),
    };
    Ok(EventStream::from_parts_unchecked(events, horizon))
}

/// Generator keyed by a base seed and up to three indices (stream,
/// position, ...), so independent jobs never share random numbers.
pub fn keyed_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    for (i, p) in path.iter().take(3).enumerate() {
        key[8 * (i + 1)..8 * (i + 2)].copy_from_slice(&p.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Samples `count` independent streams, stream `i` using `keyed_rng(seed, &[i])`.
pub fn sample_dataset<M: PointProcess + ?Sized>(model: &M, count: usize, config: &SampleConfig) -> Result<Dataset> {
    let mut stats = ThinningStats::default();
    let streams = (0..count)
        .map(|i| sample_stream_with(model, config, &mut keyed_rng(config.seed, &[i as u64]), &mut stats))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset::from_parts_unchecked(streams, model.num_types()))
}
