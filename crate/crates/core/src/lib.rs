//! Generative models of typed event streams in continuous time.
//!
//! Three intensity models share one interface ([`PointProcess`] and
//! [`Trainable`]): the multivariate Hawkes process, the decomposable
//! self-modulating process, and the neural Hawkes process driven by a
//! continuous-time LSTM. On top of them sit Monte-Carlo maximum-likelihood
//! training, thinning-based sampling and minimum-Bayes-risk prediction.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
// `!(x > 0.0)` is deliberate throughout: NaN must fail positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod backprop;
pub mod classical;
pub mod ctlstm;
pub mod error;
pub mod events;
pub mod likelihood;
pub mod model;
pub mod optim;
pub mod predictor;
pub mod sampler;
pub mod synthetic;
pub mod trainer;
pub mod transfer;

pub use classical::{HawkesParams, SelfModulatingParams};
pub use ctlstm::CtLstmParams;
pub use error::{Error, Result};
pub use events::{split_dataset, Dataset, Event, EventStream, EventType};
pub use model::{Model, ModelKind, Objective, PointProcess, StreamTerms, Trainable};
