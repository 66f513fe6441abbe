//! Continuous-time LSTM and the neural Hawkes intensity.
//!
//! Between events every memory cell decays exponentially from a start value
//! toward a target value:
//!
//! ```text
//! c(t) = c̄ + (c_start - c̄) exp(-δ (t - t_anchor))
//! h(t) = o ⊙ (2σ(2c(t)) - 1)
//! λ_k(t) = s_k log(1 + exp(w_k·h(t) / s_k))
//! ```
//!
//! At each event the decayed `c(t)` and `h(t)` feed seven gates (input,
//! forget, candidate, output, target-input, target-forget, decay) that reset
//! `c_start`, `c̄`, `δ` and `o`. Event types enter through a shared
//! `(K+1) × D` embedding whose row 0 is the beginning-of-stream marker.

use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, tanh};

use crate::error::{Error, Result};
use crate::events::{Event, EventType};
use crate::model::PointProcess;
use crate::transfer::{sigmoid, softplus_scaled};

/// Exponent cap for `exp(-δ Δt)`; beyond it the factor is treated as fixed.
pub const MAX_DECAY_EXPONENT: f64 = 700.0;

pub const NUM_GATES: usize = 7;

/// Gate blocks in parameter-vector order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Candidate = 2,
    Output = 3,
    TargetInput = 4,
    TargetForget = 5,
    Decay = 6,
}

impl Gate {
    pub const ALL: [Gate; NUM_GATES] = [
        Gate::Input,
        Gate::Forget,
        Gate::Candidate,
        Gate::Output,
        Gate::TargetInput,
        Gate::TargetForget,
        Gate::Decay,
    ];

    /// Lower-case name used in parameter files.
    pub fn name(self) -> &'static str {
        match self {
            Gate::Input => "input",
            Gate::Forget => "forget",
            Gate::Candidate => "candidate",
            Gate::Output => "output",
            Gate::TargetInput => "target_input",
            Gate::TargetForget => "target_forget",
            Gate::Decay => "decay",
        }
    }
}

/// `(K+1)·D + 7·(2D² + D) + K·D + K`.
pub const fn param_count(num_types: usize, hidden: usize) -> usize {
    (num_types + 1) * hidden
        + NUM_GATES * (2 * hidden * hidden + hidden)
        + num_types * hidden
        + num_types
}

/// All trainable weights in one flat vector:
/// `[embed | (W, U, d) per gate | w | s]`.
///
/// The decay-rate transfer uses a fixed softplus scale that is stored but
/// not trained.
#[derive(Clone, Debug, PartialEq)]
pub struct CtLstmParams {
    num_types: usize,
    hidden: usize,
    theta: Vec<f64>,
    decay_scale: f64,
}

impl CtLstmParams {
    /// Zero weights and unit softplus scales.
    pub fn zeros(num_types: usize, hidden: usize) -> Self {
        let mut p = CtLstmParams {
            num_types,
            hidden,
            theta: vec![0.0; param_count(num_types, hidden)],
            decay_scale: 1.0,
        };
        p.scale_mut().fill(1.0);
        p
    }

    pub fn from_vec(num_types: usize, hidden: usize, theta: Vec<f64>, decay_scale: f64) -> Result<Self> {
        if num_types == 0 || hidden == 0 {
            return Err(Error::InvalidArgument("K and D must be positive"));
        }
        if theta.len() != param_count(num_types, hidden) {
            return Err(Error::InvalidArgument("parameter vector has the wrong length"));
        }
        if !(decay_scale > 0.0) {
            return Err(Error::InvalidArgument("decay scale must be positive"));
        }
        let p = CtLstmParams {
            num_types,
            hidden,
            theta,
            decay_scale,
        };
        if p.scale().iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidArgument("softplus scales must be positive"));
        }
        Ok(p)
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn decay_scale(&self) -> f64 {
        self.decay_scale
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn gate_offset(&self, gate: Gate) -> usize {
        let d = self.hidden;
        (self.num_types + 1) * d + gate as usize * (2 * d * d + d)
    }

    pub(crate) fn embed_range(&self) -> core::ops::Range<usize> {
        0..(self.num_types + 1) * self.hidden
    }

    pub(crate) fn w_range(&self, gate: Gate) -> core::ops::Range<usize> {
        let o = self.gate_offset(gate);
        o..o + self.hidden * self.hidden
    }

    pub(crate) fn u_range(&self, gate: Gate) -> core::ops::Range<usize> {
        let o = self.gate_offset(gate) + self.hidden * self.hidden;
        o..o + self.hidden * self.hidden
    }

    pub(crate) fn bias_range(&self, gate: Gate) -> core::ops::Range<usize> {
        let o = self.gate_offset(gate) + 2 * self.hidden * self.hidden;
        o..o + self.hidden
    }

    pub(crate) fn proj_range(&self) -> core::ops::Range<usize> {
        let o = (self.num_types + 1) * self.hidden
            + NUM_GATES * (2 * self.hidden * self.hidden + self.hidden);
        o..o + self.num_types * self.hidden
    }

    pub(crate) fn scale_range(&self) -> core::ops::Range<usize> {
        let o = self.proj_range().end;
        o..o + self.num_types
    }

    /// Embedding row of a type id (0 = BOS).
    pub fn embedding(&self, k: EventType) -> &[f64] {
        let d = self.hidden;
        let o = k.0 as usize * d;
        &self.theta[o..o + d]
    }

    pub fn embed(&self) -> &[f64] {
        &self.theta[self.embed_range()]
    }

    pub fn embed_mut(&mut self) -> &mut [f64] {
        let r = self.embed_range();
        &mut self.theta[r]
    }

    /// Row-major `D × D` input matrix of a gate.
    pub fn w(&self, gate: Gate) -> &[f64] {
        &self.theta[self.w_range(gate)]
    }

    pub fn w_mut(&mut self, gate: Gate) -> &mut [f64] {
        let r = self.w_range(gate);
        &mut self.theta[r]
    }

    /// Row-major `D × D` recurrent matrix of a gate.
    pub fn u(&self, gate: Gate) -> &[f64] {
        &self.theta[self.u_range(gate)]
    }

    pub fn u_mut(&mut self, gate: Gate) -> &mut [f64] {
        let r = self.u_range(gate);
        &mut self.theta[r]
    }

    pub fn bias(&self, gate: Gate) -> &[f64] {
        &self.theta[self.bias_range(gate)]
    }

    pub fn bias_mut(&mut self, gate: Gate) -> &mut [f64] {
        let r = self.bias_range(gate);
        &mut self.theta[r]
    }

    /// Row-major `K × D` intensity projection.
    pub fn proj(&self) -> &[f64] {
        &self.theta[self.proj_range()]
    }

    pub fn proj_mut(&mut self) -> &mut [f64] {
        let r = self.proj_range();
        &mut self.theta[r]
    }

    pub fn scale(&self) -> &[f64] {
        &self.theta[self.scale_range()]
    }

    pub fn scale_mut(&mut self) -> &mut [f64] {
        let r = self.scale_range();
        &mut self.theta[r]
    }

    /// Pre-activation `W x + U h + d` of one gate.
    fn preactivation(&self, gate: Gate, x: &[f64], h: &[f64], out: &mut [f64]) {
        let d = self.hidden;
        let w = self.w(gate);
        let u = self.u(gate);
        out.copy_from_slice(self.bias(gate));
        for (row, o) in out.iter_mut().enumerate() {
            let wr = &w[row * d..(row + 1) * d];
            let ur = &u[row * d..(row + 1) * d];
            *o += dot(wr, x) + dot(ur, h);
        }
    }

    fn gates(&self, k: EventType, h: &[f64]) -> GateValues {
        let d = self.hidden;
        let x = self.embedding(k);
        let mut pre = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
        for gate in Gate::ALL {
            self.preactivation(gate, x, h, &mut pre[gate as usize]);
        }
        let [pi, pf, pz, po, pib, pfb, pd] = pre;
        let sig = |v: Vec<f64>| v.into_iter().map(sigmoid).collect::<Vec<_>>();
        GateValues {
            input: sig(pi),
            forget: sig(pf),
            candidate: pz.into_iter().map(|p| 2.0 * sigmoid(p) - 1.0).collect(),
            output: sig(po),
            target_input: sig(pib),
            target_forget: sig(pfb),
            decay_pre: pd,
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug)]
pub(crate) struct GateValues {
    pub input: Vec<f64>,
    pub forget: Vec<f64>,
    pub candidate: Vec<f64>,
    pub output: Vec<f64>,
    pub target_input: Vec<f64>,
    pub target_forget: Vec<f64>,
    pub decay_pre: Vec<f64>,
}

/// LSTM configuration on the interval following one event.
#[derive(Clone, Debug, PartialEq)]
pub struct CellState {
    /// Cells just after the update.
    pub c_start: Vec<f64>,
    /// Steady-state cells approached as time passes.
    pub c_target: Vec<f64>,
    /// Per-cell decay rates, strictly positive.
    pub decay: Vec<f64>,
    /// Output gate in `(0, 1)`.
    pub out_gate: Vec<f64>,
    /// Time of the event that produced this state.
    pub t_anchor: f64,
}

/// Cells and hidden state at a query time.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayedState {
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

/// `exp(-δ Δt)` with the exponent capped.
#[inline]
pub(crate) fn decay_factor(rate: f64, dt: f64) -> f64 {
    exp(-f64::min(rate * dt, MAX_DECAY_EXPONENT))
}

impl CellState {
    fn decay_into(&self, t: f64, c: &mut [f64], h: &mut [f64]) {
        let dt = t - self.t_anchor;
        for d in 0..self.c_start.len() {
            let target = self.c_target[d];
            let cd = target + (self.c_start[d] - target) * decay_factor(self.decay[d], dt);
            c[d] = cd;
            h[d] = self.out_gate[d] * tanh(cd);
        }
    }

    /// Steady-state hidden vector, `o ⊙ (2σ(2c̄) - 1)`.
    pub fn steady_hidden(&self) -> Vec<f64> {
        self.out_gate
            .iter()
            .zip(&self.c_target)
            .map(|(o, c)| o * tanh(*c))
            .collect()
    }
}

/// Cells and hidden state at `t >= state.t_anchor`.
pub fn decay(state: &CellState, t: f64) -> Result<DecayedState> {
    if t < state.t_anchor {
        return Err(Error::QueryBeforeHistory {
            time: t,
            last: state.t_anchor,
        });
    }
    let d = state.c_start.len();
    let mut out = DecayedState {
        c: vec![0.0; d],
        h: vec![0.0; d],
    };
    state.decay_into(t, &mut out.c, &mut out.h);
    Ok(out)
}

fn apply_update(params: &CtLstmParams, c_in: &[f64], h_in: &[f64], c_target_prev: &[f64], k: EventType, t: f64) -> (CellState, GateValues) {
    let g = params.gates(k, h_in);
    let dim = params.hidden;
    let mut next = CellState {
        c_start: vec![0.0; dim],
        c_target: vec![0.0; dim],
        decay: vec![0.0; dim],
        out_gate: g.output.clone(),
        t_anchor: t,
    };
    for d in 0..dim {
        next.c_start[d] = g.forget[d] * c_in[d] + g.input[d] * g.candidate[d];
        next.c_target[d] = g.target_forget[d] * c_target_prev[d] + g.target_input[d] * g.candidate[d];
        next.decay[d] = softplus_scaled(g.decay_pre[d], params.decay_scale);
    }
    (next, g)
}

/// State after reading BOS at time 0 from zero cells and hidden state.
pub fn init_state(params: &CtLstmParams) -> CellState {
    let zero = vec![0.0; params.hidden];
    apply_update(params, &zero, &zero, &zero, EventType::BOS, 0.0).0
}

/// Reads event `k` at time `t > state.t_anchor`.
pub fn update(params: &CtLstmParams, state: &CellState, k: EventType, t: f64) -> Result<CellState> {
    if !(t > state.t_anchor) {
        return Err(Error::QueryBeforeHistory {
            time: t,
            last: state.t_anchor,
        });
    }
    if k.0 as usize > params.num_types {
        return Err(Error::InvalidArgument("event type outside the model's range"));
    }
    let decayed = decay(state, t)?;
    Ok(apply_update(params, &decayed.c, &decayed.h, &state.c_target, k, t).0)
}

pub(crate) fn update_with_gates(
    params: &CtLstmParams,
    decayed: &DecayedState,
    c_target_prev: &[f64],
    k: EventType,
    t: f64,
) -> (CellState, GateValues) {
    apply_update(params, &decayed.c, &decayed.h, c_target_prev, k, t)
}

/// `λ_k = f_k(w_k · h)` for every type.
pub fn intensity(params: &CtLstmParams, decayed: &DecayedState) -> Vec<f64> {
    let mut out = vec![0.0; params.num_types];
    intensity_into(params, &decayed.h, &mut out);
    out
}

fn intensity_into(params: &CtLstmParams, h: &[f64], out: &mut [f64]) {
    let d = params.hidden;
    let proj = params.proj();
    for (k, (o, &s)) in out.iter_mut().zip(params.scale()).enumerate() {
        *o = softplus_scaled(dot(&proj[k * d..(k + 1) * d], h), s);
    }
}

/// Per-type bounds valid on `(t_anchor, ∞)`: each `c_d(t)` moves
/// monotonically between `c_start[d]` and `c_target[d]`, so every summand of
/// `w_k · h(t)` is bounded by its larger endpoint value.
pub fn neural_upper_bound(params: &CtLstmParams, state: &CellState) -> Vec<f64> {
    let mut out = vec![0.0; params.num_types];
    bound_into(params, state, &mut out);
    out
}

fn bound_into(params: &CtLstmParams, state: &CellState, out: &mut [f64]) {
    let d = params.hidden;
    let proj = params.proj();
    let start: Vec<f64> = state.c_start.iter().map(|&c| tanh(c)).collect();
    let target: Vec<f64> = state.c_target.iter().map(|&c| tanh(c)).collect();
    for (k, (o, &s)) in out.iter_mut().zip(params.scale()).enumerate() {
        let row = &proj[k * d..(k + 1) * d];
        let mut x = 0.0;
        for j in 0..d {
            let a = row[j] * state.out_gate[j];
            x += f64::max(a * start[j], a * target[j]);
        }
        *o = softplus_scaled(x, s);
    }
}

impl PointProcess for CtLstmParams {
    type State = CellState;

    fn num_types(&self) -> usize {
        self.num_types
    }

    fn initial_state(&self) -> CellState {
        init_state(self)
    }

    fn observe(&self, state: &mut CellState, event: Event) {
        let d = self.hidden;
        let mut c = vec![0.0; d];
        let mut h = vec![0.0; d];
        state.decay_into(event.t, &mut c, &mut h);
        *state = apply_update(self, &c, &h, &state.c_target, event.k, event.t).0;
    }

    fn anchor(&self, state: &CellState) -> f64 {
        state.t_anchor
    }

    fn intensities(&self, state: &CellState, t: f64, out: &mut [f64]) {
        let d = self.hidden;
        let mut c = vec![0.0; d];
        let mut h = vec![0.0; d];
        state.decay_into(t, &mut c, &mut h);
        intensity_into(self, &h, out);
    }

    fn intensity_bounds(&self, state: &CellState, out: &mut [f64]) {
        bound_into(self, state, out);
    }
}
