use thiserror::Error;

/// Errors raised by the models, the sampler and the training loop.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("stream {stream}: non-increasing times at index {index}")]
    NonIncreasingTimes { stream: usize, index: usize },
    #[error("stream {stream}: event type {k} at index {index} outside 1..={num_types}")]
    TypeOutOfRange {
        stream: usize,
        index: usize,
        k: u32,
        num_types: usize,
    },
    #[error("stream {stream}: event time {time} at index {index} outside (0, {horizon}]")]
    TimeOutOfRange {
        stream: usize,
        index: usize,
        time: f64,
        horizon: f64,
    },
    #[error("stream {stream}: horizon {horizon} is not a positive finite number")]
    BadHorizon { stream: usize, horizon: f64 },
    #[error("stream {stream} declares {found} event types, dataset has {expected}")]
    TypeCountMismatch {
        stream: usize,
        expected: usize,
        found: usize,
    },
    #[error("model has {model} event types, data has {data}")]
    DimensionMismatch { model: usize, data: usize },
    #[error("query time {time} is not after the last history time {last}")]
    QueryBeforeHistory { time: f64, last: f64 },
    #[error("intensity of observed event {index} (type {k}) underflowed to zero")]
    IntensityUnderflow { index: usize, k: u32 },
    #[error("thinning bound violated: intensity {intensity} exceeds bound {bound} at time {time}")]
    BoundViolation {
        time: f64,
        intensity: f64,
        bound: f64,
    },
    #[error("no event accepted after {proposals} thinning proposals")]
    ProposalLimit { proposals: u64 },
    #[error("non-finite objective on training stream {stream}")]
    NonFinite { stream: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IntensityUnderflow { .. }
                | Error::BoundViolation { .. }
                | Error::ProposalLimit { .. }
                | Error::NonFinite { .. }
        )
    }
}
