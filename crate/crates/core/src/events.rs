//! Typed event streams observed on a window `[0, T]`.

use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// An event type id. In-stream events use `1..=K`; `0` is the
/// beginning-of-stream marker that models read before the first event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventType(pub u32);

impl EventType {
    pub const BOS: EventType = EventType(0);

    /// Zero-based slot of an in-stream type, for indexing per-type arrays.
    #[inline]
    pub fn index(self) -> usize {
        debug_assert!(self.0 >= 1, "BOS has no per-type slot");
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(index: usize) -> Self {
        EventType(index as u32 + 1)
    }

    pub fn is_bos(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub k: EventType,
    pub t: f64,
}

impl Event {
    pub fn new(k: u32, t: f64) -> Self {
        Event {
            k: EventType(k),
            t,
        }
    }
}

/// Events with strictly increasing times inside `(0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EventStream {
    events: Vec<Event>,
    horizon: f64,
}

impl EventStream {
    /// Validates ordering, type range and window membership.
    pub fn new(events: Vec<Event>, horizon: f64, num_types: usize) -> Result<Self> {
        Self::validated(events, horizon, num_types, 0)
    }

    /// Like [`EventStream::new`], with `stream` used in error reports.
    pub fn validated(
        events: Vec<Event>,
        horizon: f64,
        num_types: usize,
        stream: usize,
    ) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::BadHorizon { stream, horizon });
        }
        let mut last = 0.0;
        for (index, e) in events.iter().enumerate() {
            if e.k.0 == 0 || e.k.0 as usize > num_types {
                return Err(Error::TypeOutOfRange {
                    stream,
                    index,
                    k: e.k.0,
                    num_types,
                });
            }
            if index > 0 && e.t <= last {
                return Err(Error::NonIncreasingTimes { stream, index });
            }
            if !(e.t > 0.0 && e.t <= horizon) {
                return Err(Error::TimeOutOfRange {
                    stream,
                    index,
                    time: e.t,
                    horizon,
                });
            }
            last = e.t;
        }
        Ok(EventStream { events, horizon })
    }

    /// Builds a stream without validation. Callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(events: Vec<Event>, horizon: f64) -> Self {
        EventStream { events, horizon }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last_time(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.t)
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }
}

/// A collection of streams over a shared type space `1..=K`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    streams: Vec<EventStream>,
    num_types: usize,
}

impl Dataset {
    pub fn new(streams: Vec<EventStream>, num_types: usize) -> Result<Self> {
        if num_types == 0 {
            return Err(Error::InvalidArgument("dataset needs at least one event type"));
        }
        let streams = streams
            .into_iter()
            .enumerate()
            .map(|(i, s)| EventStream::validated(s.events, s.horizon, num_types, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { streams, num_types })
    }

    pub fn empty(num_types: usize) -> Self {
        Dataset {
            streams: Vec::new(),
            num_types,
        }
    }

    pub fn streams(&self) -> &[EventStream] {
        &self.streams
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    pub fn num_events(&self) -> usize {
        self.streams.iter().map(EventStream::len).sum()
    }

    /// The first `n` streams.
    pub fn prefix(&self, n: usize) -> Dataset {
        Dataset {
            streams: self.streams[..n.min(self.streams.len())].to_vec(),
            num_types: self.num_types,
        }
    }

    pub(crate) fn from_parts_unchecked(streams: Vec<EventStream>, num_types: usize) -> Self {
        Dataset { streams, num_types }
    }
}

/// Shuffles the streams under `seed` and cuts them into train/dev/test.
///
/// Dev and test sizes are `floor(n * fraction)`; the remainder goes to train.
pub fn split_dataset(
    dataset: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    let (a, b, c) = fractions;
    if a < 0.0 || b < 0.0 || c < 0.0 || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(
            "split fractions must be non-negative and sum to 1",
        ));
    }
    let n = dataset.len();
    // The epsilon keeps products like 0.7 * 10 = 6.999... from flooring down.
    let n_dev = libm::floor(n as f64 * b + 1e-9) as usize;
    let n_test = libm::floor(n as f64 * c + 1e-9) as usize;
    let n_train = n - n_dev - n_test;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |ids: &[usize]| {
        Dataset::from_parts_unchecked(
            ids.iter().map(|&i| dataset.streams[i].clone()).collect(),
            dataset.num_types,
        )
    };
    Ok((
        pick(&order[..n_train]),
        pick(&order[n_train..n_train + n_dev]),
        pick(&order[n_train + n_dev..]),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn stream(times: &[f64], horizon: f64) -> EventStream {
        let events = times.iter().map(|&t| Event::new(1, t)).collect();
        EventStream::new(events, horizon, 2).unwrap()
    }

    #[test]
    fn rejects_non_increasing_times() {
        let err = EventStream::new(vec![Event::new(1, 2.0), Event::new(1, 1.0)], 3.0, 2);
        assert_eq!(
            err.unwrap_err(),
            Error::NonIncreasingTimes {
                stream: 0,
                index: 1
            }
        );
    }

    #[test]
    fn rejects_ties_and_out_of_window_times() {
        assert!(EventStream::new(vec![Event::new(1, 1.0), Event::new(2, 1.0)], 3.0, 2).is_err());
        assert!(matches!(
            EventStream::new(vec![Event::new(1, 3.5)], 3.0, 2),
            Err(Error::TimeOutOfRange { .. })
        ));
        assert!(matches!(
            EventStream::new(vec![Event::new(1, 0.0)], 3.0, 2),
            Err(Error::TimeOutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_types_outside_range() {
        assert!(matches!(
            EventStream::new(vec![Event::new(3, 1.0)], 3.0, 2),
            Err(Error::TypeOutOfRange { k: 3, .. })
        ));
        assert!(matches!(
            EventStream::new(vec![Event::new(0, 1.0)], 3.0, 2),
            Err(Error::TypeOutOfRange { k: 0, .. })
        ));
    }

    #[test]
    fn empty_stream_is_valid() {
        let s = EventStream::new(vec![], 1.0, 2).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.horizon(), 1.0);
    }

    #[test]
    fn dataset_reports_offending_stream() {
        let good = stream(&[0.5], 1.0);
        let bad = EventStream::from_parts_unchecked(vec![Event::new(1, 0.7), Event::new(1, 0.2)], 1.0);
        let err = Dataset::new(vec![good, bad], 2).unwrap_err();
        assert_eq!(
            err,
            Error::NonIncreasingTimes {
                stream: 1,
                index: 1
            }
        );
    }

    #[test]
    fn split_sizes_and_determinism() {
        let streams = (0..10).map(|i| stream(&[0.1 + i as f64 * 0.01], 1.0)).collect();
        let data = Dataset::new(streams, 2).unwrap();
        let (tr, dv, te) = split_dataset(&data, (0.8, 0.1, 0.1), 7).unwrap();
        assert_eq!((tr.len(), dv.len(), te.len()), (8, 1, 1));
        let again = split_dataset(&data, (0.8, 0.1, 0.1), 7).unwrap();
        assert_eq!((tr.clone(), dv.clone(), te.clone()), again);

        let mut seen: Vec<f64> = tr
            .streams()
            .iter()
            .chain(dv.streams())
            .chain(te.streams())
            .map(|s| s.events()[0].t)
            .collect();
        seen.sort_by(f64::total_cmp);
        seen.dedup();
        assert_eq!(seen.len(), 10);

        let (tr, dv, te) = split_dataset(&data, (1.0, 0.0, 0.0), 1).unwrap();
        assert_eq!((tr.len(), dv.len(), te.len()), (10, 0, 0));
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let data = Dataset::empty(1);
        assert!(split_dataset(&data, (0.5, 0.2, 0.2), 0).is_err());
        assert!(split_dataset(&data, (1.2, -0.1, -0.1), 0).is_err());
    }
}
