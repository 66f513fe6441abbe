//! Decomposable intensity models: the self-exciting Hawkes process and its
//! self-modulating generalization with a scaled-softplus transfer.
//!
//! Both share the activation
//!
//! ```text
//! λ̃_k(t) = μ_k + Σ_{h: t_h < t} α[k_h][k] exp(-δ[k_h][k] (t - t_h))
//! ```
//!
//! with `α` and `δ` stored row-major, row = source type, column = target type.
//! The Hawkes process uses `λ_k = λ̃_k`; the self-modulating process uses
//! `λ_k = s_k log(1 + exp(λ̃_k / s_k))`.

use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, log};

use crate::error::{Error, Result};
use crate::events::{Event, EventStream, EventType};
use crate::model::{Objective, PointProcess, StreamTerms, Trainable};
use crate::transfer::{softplus_ds, softplus_dx, softplus_scaled};

/// Base rates, excitation and decay shared by both decomposable models.
#[derive(Clone, Debug, PartialEq)]
struct Kernel {
    k: usize,
    mu: Vec<f64>,
    alpha: Vec<f64>,
    delta: Vec<f64>,
}

impl Kernel {
    fn new(mu: Vec<f64>, alpha: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        let k = mu.len();
        if k == 0 || alpha.len() != k * k || delta.len() != k * k {
            return Err(Error::InvalidArgument("mu must be K, alpha and delta K x K"));
        }
        if delta.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidArgument("decay rates must be positive"));
        }
        if mu.iter().chain(&alpha).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("parameters must be finite"));
        }
        Ok(Kernel { k, mu, alpha, delta })
    }

    #[inline]
    fn at(&self, source: EventType, target: usize) -> usize {
        source.index() * self.k + target
    }

    /// `λ̃_k(t)` for every type, summing over events strictly before `t`.
    fn activations(&self, history: &[Event], t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.mu);
        for e in history.iter().take_while(|e| e.t < t) {
            let row = e.k.index() * self.k;
            let dt = t - e.t;
            for (target, x) in out.iter_mut().enumerate() {
                let i = row + target;
                *x += self.alpha[i] * exp(-self.delta[i] * dt);
            }
        }
    }

    fn activation(&self, history: &[Event], t: f64, target: usize) -> f64 {
        let mut x = self.mu[target];
        for e in history.iter().take_while(|e| e.t < t) {
            let i = self.at(e.k, target);
            x += self.alpha[i] * exp(-self.delta[i] * (t - e.t));
        }
        x
    }

    /// Activation bound on `(t_start, ∞)`: inhibiting terms dropped, exciting
    /// terms frozen at `t_start` since they only decay afterwards.
    fn bound_activations(&self, history: &[Event], t_start: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.mu);
        for e in history.iter().take_while(|e| e.t <= t_start) {
            let row = e.k.index() * self.k;
            let dt = t_start - e.t;
            for (target, x) in out.iter_mut().enumerate() {
                let i = row + target;
                let a = self.alpha[i];
                if a > 0.0 {
                    *x += a * exp(-self.delta[i] * dt);
                }
            }
        }
    }

    /// Adds `coeff * ∂λ̃_target(t)/∂θ` into the `(mu, alpha, delta)` blocks of `grad`.
    fn accumulate(&self, history: &[Event], t: f64, target: usize, coeff: f64, grad: &mut [f64]) {
        let kk = self.k * self.k;
        let (g_mu, rest) = grad.split_at_mut(self.k);
        let (g_alpha, rest) = rest.split_at_mut(kk);
        let g_delta = &mut rest[..kk];
        g_mu[target] += coeff;
        for e in history.iter().take_while(|e| e.t < t) {
            let i = self.at(e.k, target);
            let dt = t - e.t;
            let decay = exp(-self.delta[i] * dt);
            g_alpha[i] += coeff * decay;
            g_delta[i] -= coeff * self.alpha[i] * dt * decay;
        }
    }

    fn num_params(&self) -> usize {
        self.k + 2 * self.k * self.k
    }

    fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        v.extend_from_slice(&self.mu);
        v.extend_from_slice(&self.alpha);
        v.extend_from_slice(&self.delta);
        v
    }

    fn set_params(&mut self, values: &[f64]) {
        let kk = self.k * self.k;
        self.mu.copy_from_slice(&values[..self.k]);
        self.alpha.copy_from_slice(&values[self.k..self.k + kk]);
        self.delta
            .copy_from_slice(&values[self.k + kk..self.k + 2 * kk]);
    }
}

/// History consumed so far by a decomposable model.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HistoryState {
    pub history: Vec<Event>,
}

fn check_query(history: &[Event], t: f64) -> Result<()> {
    let last = history.last().map_or(0.0, |e| e.t);
    if history.is_empty() || t > last {
        Ok(())
    } else {
        Err(Error::QueryBeforeHistory { time: t, last })
    }
}

/// Transfer from activation to intensity, with its derivatives.
trait Transfer {
    fn apply(&self, x: f64, target: usize) -> f64;
    /// `(dλ/dx, dλ/ds)`; the second is meaningless for the identity.
    fn slopes(&self, x: f64, target: usize) -> (f64, f64);
}

/// The multivariate Hawkes process with non-negative base rates and
/// excitations.
#[derive(Clone, Debug, PartialEq)]
pub struct HawkesParams {
    kernel: Kernel,
}

impl HawkesParams {
    pub fn new(mu: Vec<f64>, alpha: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if mu.iter().chain(&alpha).any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(
                "Hawkes base rates and excitations must be non-negative",
            ));
        }
        Ok(HawkesParams {
            kernel: Kernel::new(mu, alpha, delta)?,
        })
    }

    pub fn mu(&self) -> &[f64] {
        &self.kernel.mu
    }

    pub fn alpha(&self) -> &[f64] {
        &self.kernel.alpha
    }

    pub fn delta(&self) -> &[f64] {
        &self.kernel.delta
    }

    /// `λ_k(t)` given the events strictly before `t`.
    pub fn intensity(&self, history: &[Event], t: f64, k: EventType) -> Result<f64> {
        check_query(history, t)?;
        Ok(self.kernel.activation(history, t, k.index()))
    }

    /// Per-type intensity bounds valid for every `t > t_start`.
    pub fn upper_bound(&self, history: &[Event], t_start: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.kernel.k];
        self.kernel.bound_activations(history, t_start, &mut out);
        out
    }

    pub fn param_count(num_types: usize) -> usize {
        num_types + 2 * num_types * num_types
    }
}

impl Transfer for HawkesParams {
    #[inline]
    fn apply(&self, x: f64, _: usize) -> f64 {
        x
    }

    #[inline]
    fn slopes(&self, _: f64, _: usize) -> (f64, f64) {
        (1.0, 0.0)
    }
}

/// The decomposable self-modulating process: Hawkes activations of either
/// sign passed through a per-type scaled softplus.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfModulatingParams {
    kernel: Kernel,
    scale: Vec<f64>,
}

impl SelfModulatingParams {
    pub fn new(mu: Vec<f64>, alpha: Vec<f64>, delta: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        let kernel = Kernel::new(mu, alpha, delta)?;
        if scale.len() != kernel.k || scale.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidArgument("softplus scales must be K positive values"));
        }
        Ok(SelfModulatingParams { kernel, scale })
    }

    pub fn mu(&self) -> &[f64] {
        &self.kernel.mu
    }

    pub fn alpha(&self) -> &[f64] {
        &self.kernel.alpha
    }

    pub fn delta(&self) -> &[f64] {
        &self.kernel.delta
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn intensity(&self, history: &[Event], t: f64, k: EventType) -> Result<f64> {
        check_query(history, t)?;
        let x = self.kernel.activation(history, t, k.index());
        Ok(softplus_scaled(x, self.scale[k.index()]))
    }

    pub fn upper_bound(&self, history: &[Event], t_start: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.kernel.k];
        self.kernel.bound_activations(history, t_start, &mut out);
        for (x, &s) in out.iter_mut().zip(&self.scale) {
            *x = softplus_scaled(*x, s);
        }
        out
    }

    pub fn param_count(num_types: usize) -> usize {
        2 * num_types + 2 * num_types * num_types
    }
}

impl Transfer for SelfModulatingParams {
    #[inline]
    fn apply(&self, x: f64, target: usize) -> f64 {
        softplus_scaled(x, self.scale[target])
    }

    #[inline]
    fn slopes(&self, x: f64, target: usize) -> (f64, f64) {
        let s = self.scale[target];
        (softplus_dx(x, s), softplus_ds(x, s))
    }
}

macro_rules! decomposable_process {
    ($ty:ty) => {
        impl PointProcess for $ty {
            type State = HistoryState;

            fn num_types(&self) -> usize {
                self.kernel.k
            }

            fn initial_state(&self) -> HistoryState {
                HistoryState::default()
            }

            fn observe(&self, state: &mut HistoryState, event: Event) {
                state.history.push(event);
            }

            fn anchor(&self, state: &HistoryState) -> f64 {
                state.history.last().map_or(0.0, |e| e.t)
            }

            fn intensities(&self, state: &HistoryState, t: f64, out: &mut [f64]) {
                self.kernel.activations(&state.history, t, out);
                for (target, x) in out.iter_mut().enumerate() {
                    *x = self.apply(*x, target);
                }
            }

            fn intensity_bounds(&self, state: &HistoryState, out: &mut [f64]) {
                let t_start = self.anchor(state);
                self.kernel.bound_activations(&state.history, t_start, out);
                for (target, x) in out.iter_mut().enumerate() {
                    *x = self.apply(*x, target);
                }
            }
        }
    };
}

decomposable_process!(HawkesParams);
decomposable_process!(SelfModulatingParams);

/// Shared forward/backward pass over one stream. Gradient layout is
/// `[mu | alpha | delta | scale?]`.
fn evaluate_decomposable<M: Transfer>(
    model: &M,
    kernel: &Kernel,
    has_scale: bool,
    stream: &EventStream,
    horizon: f64,
    sample_times: &[f64],
    objective: Objective,
    mut grad: Option<&mut [f64]>,
) -> Result<StreamTerms> {
    let k = kernel.k;
    let events: &[Event] = {
        let all = stream.events();
        let n = all.partition_point(|e| e.t <= horizon);
        &all[..n]
    };
    let scale_offset = kernel.num_params();
    let mut terms = StreamTerms {
        log_intensity: Vec::with_capacity(events.len()),
        log_total: Vec::with_capacity(events.len()),
        integral: 0.0,
    };
    let mut act = vec![0.0; k];

    for (i, e) in events.iter().enumerate() {
        let history = &events[..i];
        kernel.activations(history, e.t, &mut act);
        let target = e.k.index();
        let mut total = 0.0;
        for (j, &x) in act.iter().enumerate() {
            total += model.apply(x, j);
        }
        let lam = model.apply(act[target], target);
        if !(lam > 0.0) {
            return Err(Error::IntensityUnderflow { index: i, k: e.k.0 });
        }
        terms.log_intensity.push(log(lam));
        terms.log_total.push(log(total));
        if let Some(g) = grad.as_deref_mut() {
            if objective.event_weight != 0.0 {
                let coeff = objective.event_weight / lam;
                let (dx, ds) = model.slopes(act[target], target);
                kernel.accumulate(history, e.t, target, coeff * dx, g);
                if has_scale {
                    g[scale_offset + target] += coeff * ds;
                }
            }
        }
    }

    if !sample_times.is_empty() {
        let weight = horizon / sample_times.len() as f64;
        let mut sum = 0.0;
        let mut seen = 0;
        for &tau in sample_times {
            while seen < events.len() && events[seen].t < tau {
                seen += 1;
            }
            let history = &events[..seen];
            kernel.activations(history, tau, &mut act);
            for (target, &x) in act.iter().enumerate() {
                sum += model.apply(x, target);
                if let Some(g) = grad.as_deref_mut() {
                    if objective.integral_weight != 0.0 {
                        let coeff = -objective.integral_weight * weight;
                        let (dx, ds) = model.slopes(x, target);
                        kernel.accumulate(history, tau, target, coeff * dx, g);
                        if has_scale {
                            g[scale_offset + target] += coeff * ds;
                        }
                    }
                }
            }
        }
        terms.integral = weight * sum;
    }
    Ok(terms)
}

impl Trainable for HawkesParams {
    fn num_params(&self) -> usize {
        self.kernel.num_params()
    }

    fn params(&self) -> Vec<f64> {
        self.kernel.params()
    }

    fn set_params(&mut self, values: &[f64]) {
        self.kernel.set_params(values);
    }

    fn positive_mask(&self) -> Vec<bool> {
        vec![true; self.num_params()]
    }

    fn evaluate(
        &self,
        stream: &EventStream,
        horizon: f64,
        sample_times: &[f64],
        objective: Objective,
        grad: Option<&mut [f64]>,
    ) -> Result<StreamTerms> {
        evaluate_decomposable(
            self,
            &self.kernel,
            false,
            stream,
            horizon,
            sample_times,
            objective,
            grad,
        )
    }
}

impl Trainable for SelfModulatingParams {
    fn num_params(&self) -> usize {
        self.kernel.num_params() + self.kernel.k
    }

    fn params(&self) -> Vec<f64> {
        let mut v = self.kernel.params();
        v.extend_from_slice(&self.scale);
        v
    }

    fn set_params(&mut self, values: &[f64]) {
        let n = self.kernel.num_params();
        self.kernel.set_params(&values[..n]);
        self.scale.copy_from_slice(&values[n..n + self.kernel.k]);
    }

    fn positive_mask(&self) -> Vec<bool> {
        let k = self.kernel.k;
        let mut mask = vec![false; k + k * k];
        mask.extend(core::iter::repeat_n(true, k * k + k));
        mask
    }

    fn evaluate(
        &self,
        stream: &EventStream,
        horizon: f64,
        sample_times: &[f64],
        objective: Objective,
        grad: Option<&mut [f64]>,
    ) -> Result<StreamTerms> {
        evaluate_decomposable(
            self,
            &self.kernel,
            true,
            stream,
            horizon,
            sample_times,
            objective,
            grad,
        )
    }
}
