//! The interface shared by every point-process model.
//!
//! A model is driven by a *state* that summarizes the history up to the most
//! recent event (its anchor time). Intensities are defined for times after
//! the anchor until the next event arrives.

use alloc::vec::Vec;

use crate::error::Result;
use crate::events::{Event, EventStream};

pub trait PointProcess {
    type State: Clone;

    fn num_types(&self) -> usize;

    /// State after reading the beginning-of-stream marker at time 0.
    fn initial_state(&self) -> Self::State;

    /// Folds an event at `event.t > anchor` into the state.
    fn observe(&self, state: &mut Self::State, event: Event);

    /// Time of the last event read (0 for the initial state).
    fn anchor(&self, state: &Self::State) -> f64;

    /// Writes `λ_k(t)` for every type into `out`, for `t >= anchor`.
    fn intensities(&self, state: &Self::State, t: f64, out: &mut [f64]);

    /// Writes per-type constants `λ*_k >= λ_k(t)` valid for all `t > anchor`.
    fn intensity_bounds(&self, state: &Self::State, out: &mut [f64]);

    fn total_intensity(&self, state: &Self::State, t: f64, scratch: &mut [f64]) -> f64 {
        self.intensities(state, t, scratch);
        scratch.iter().sum()
    }
}

/// Coefficients of the differentiated objective
/// `event_weight * Σ_i log λ_{k_i}(t_i) - integral_weight * Λ̂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Objective {
    pub event_weight: f64,
    pub integral_weight: f64,
}

impl Objective {
    pub const LOG_LIKELIHOOD: Objective = Objective {
        event_weight: 1.0,
        integral_weight: 1.0,
    };

    /// Gradient of `+Λ̂` alone.
    pub const INTEGRAL: Objective = Objective {
        event_weight: 0.0,
        integral_weight: -1.0,
    };
}

/// Per-stream quantities from one forward pass.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StreamTerms {
    /// `log λ_{k_i}(t_i)` per event.
    pub log_intensity: Vec<f64>,
    /// `log λ(t_i)` per event, with `λ = Σ_k λ_k`.
    pub log_total: Vec<f64>,
    /// `H / N Σ_n λ(τ_n)` over the supplied sample times.
    pub integral: f64,
}

/// A model with a flat parameter vector and exact reverse-mode gradients.
pub trait Trainable: PointProcess + Clone {
    fn num_params(&self) -> usize;

    fn params(&self) -> Vec<f64>;

    fn set_params(&mut self, values: &[f64]);

    /// Parameters that must stay strictly positive.
    fn positive_mask(&self) -> Vec<bool>;

    /// Runs the model over `stream`, scoring every event exactly and
    /// estimating `∫_0^H λ(t) dt` as `H / N Σ λ(τ_n)` over the sorted
    /// `sample_times` in `(0, H)`. Events after `horizon` are ignored.
    ///
    /// When `grad` is given, the gradient of `objective` is **added** to it.
    fn evaluate(
        &self,
        stream: &EventStream,
        horizon: f64,
        sample_times: &[f64],
        objective: Objective,
        grad: Option<&mut [f64]>,
    ) -> Result<StreamTerms>;
}

/// The three model families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Self-exciting multivariate Hawkes process.
    Hawkes,
    /// Decomposable self-modulating process.
    SelfModulating,
    /// Neural Hawkes process.
    Neural,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Hawkes, ModelKind::SelfModulating, ModelKind::Neural];

    /// Short name used in files and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Hawkes => "sempp",
            ModelKind::SelfModulating => "dsmpp",
            ModelKind::Neural => "nsmmpp",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ModelKind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Trainable parameter count for `K` types and hidden size `D`.
    pub fn param_count(self, num_types: usize, hidden: usize) -> usize {
        match self {
            ModelKind::Hawkes => crate::classical::HawkesParams::param_count(num_types),
            ModelKind::SelfModulating => crate::classical::SelfModulatingParams::param_count(num_types),
            ModelKind::Neural => crate::ctlstm::param_count(num_types, hidden),
        }
    }
}

/// A model of any family.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Hawkes(crate::classical::HawkesParams),
    SelfModulating(crate::classical::SelfModulatingParams),
    Neural(crate::ctlstm::CtLstmParams),
}

/// Runs `$body` with `$m` bound to the concrete model inside a [`Model`].
#[macro_export]
macro_rules! with_model {
    ($model:expr, $m:ident => $body:expr) => {
        match $model {
            $crate::model::Model::Hawkes($m) => $body,
            $crate::model::Model::SelfModulating($m) => $body,
            $crate::model::Model::Neural($m) => $body,
        }
    };
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Hawkes(_) => ModelKind::Hawkes,
            Model::SelfModulating(_) => ModelKind::SelfModulating,
            Model::Neural(_) => ModelKind::Neural,
        }
    }

    pub fn num_types(&self) -> usize {
        with_model!(self, m => m.num_types())
    }

    pub fn num_params(&self) -> usize {
        with_model!(self, m => m.num_params())
    }
}
