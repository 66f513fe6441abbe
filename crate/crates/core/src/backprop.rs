//! Reverse-mode gradient of the neural Hawkes objective.
//!
//! The forward pass keeps every cell state and the gate values of every
//! update. Query points (observed events and integral samples) are
//! differentiated on the spot: their adjoints only touch the state that
//! governs their interval. A single backward sweep over the updates then
//! carries those adjoints through `decay → update → decay → ...`.

use alloc::vec;
use alloc::vec::Vec;

use libm::{log, tanh};

use crate::ctlstm::{decay_factor, update_with_gates, CellState, CtLstmParams, DecayedState, Gate, GateValues, MAX_DECAY_EXPONENT};
use crate::error::{Error, Result};
use crate::events::{EventStream, EventType};
use crate::model::{Objective, PointProcess, StreamTerms, Trainable};
use crate::transfer::{sigmoid, softplus_ds, softplus_dx, softplus_scaled};

/// Adjoint of one `CellState`.
#[derive(Clone)]
struct StateAdjoint {
    c_start: Vec<f64>,
    c_target: Vec<f64>,
    decay: Vec<f64>,
    out_gate: Vec<f64>,
}

impl StateAdjoint {
    fn zeros(d: usize) -> Self {
        StateAdjoint {
            c_start: vec![0.0; d],
            c_target: vec![0.0; d],
            decay: vec![0.0; d],
            out_gate: vec![0.0; d],
        }
    }
}

/// Inputs consumed by one update, kept for the backward sweep.
struct UpdateRecord {
    k: EventType,
    h_in: Vec<f64>,
    c_in: Vec<f64>,
    gates: GateValues,
}

/// Pushes `dL/dh(t)` and an extra `dL/dc(t)` back into the adjoint of the
/// state that produced `c(t)` by decaying for `dt`.
fn backprop_decay(state: &CellState, dt: f64, dh: &[f64], dc_extra: &[f64], adj: &mut StateAdjoint) {
    for d in 0..state.c_start.len() {
        let rate = state.decay[d];
        let e = decay_factor(rate, dt);
        let gap = state.c_start[d] - state.c_target[d];
        let c = state.c_target[d] + gap * e;
        let th = tanh(c);
        let o = state.out_gate[d];
        let dc = dc_extra[d] + dh[d] * o * (1.0 - th * th);
        adj.out_gate[d] += dh[d] * th;
        adj.c_start[d] += dc * e;
        adj.c_target[d] += dc * (1.0 - e);
        if rate * dt < MAX_DECAY_EXPONENT {
            adj.decay[d] -= dc * dt * gap * e;
        }
    }
}

/// Differentiates `Σ_k dl_dlam[k] λ_k(h)` into the projection/scale blocks of
/// `grad` and returns `dL/dh`.
fn backprop_intensity(params: &CtLstmParams, h: &[f64], dl_dlam: &[f64], grad: &mut [f64], dh: &mut [f64]) {
    let d = params.hidden();
    let proj = params.proj();
    let proj_off = params.proj_range().start;
    let scale_off = params.scale_range().start;
    dh.fill(0.0);
    for (k, &g) in dl_dlam.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let s = params.scale()[k];
        let row = &proj[k * d..(k + 1) * d];
        let a: f64 = row.iter().zip(h).map(|(w, h)| w * h).sum();
        let ga = g * softplus_dx(a, s);
        grad[scale_off + k] += g * softplus_ds(a, s);
        for j in 0..d {
            grad[proj_off + k * d + j] += ga * h[j];
            dh[j] += ga * row[j];
        }
    }
}

fn decayed_at(state: &CellState, t: f64) -> DecayedState {
    crate::ctlstm::decay(state, t).expect("query times follow their anchor")
}

impl Trainable for CtLstmParams {
    fn num_params(&self) -> usize {
        self.as_slice().len()
    }

    fn params(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }

    fn set_params(&mut self, values: &[f64]) {
        self.as_mut_slice().copy_from_slice(values);
    }

    fn positive_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_params()];
        for i in self.scale_range() {
            mask[i] = true;
        }
        mask
    }

    fn evaluate(
        &self,
        stream: &EventStream,
        horizon: f64,
        sample_times: &[f64],
        objective: Objective,
        mut grad: Option<&mut [f64]>,
    ) -> Result<StreamTerms> {
        let k_types = self.num_types();
        let dim = self.hidden();
        let events = {
            let all = stream.events();
            &all[..all.partition_point(|e| e.t <= horizon)]
        };
        let want_grad = grad.is_some();

        let mut terms = StreamTerms {
            log_intensity: Vec::with_capacity(events.len()),
            log_total: Vec::with_capacity(events.len()),
            integral: 0.0,
        };
        let zero = vec![0.0; dim];
        let bos_in = DecayedState {
            c: zero.clone(),
            h: zero.clone(),
        };
        let (s0, g0) = update_with_gates(self, &bos_in, &zero, EventType::BOS, 0.0);
        let mut states = vec![s0];
        let mut records = Vec::new();
        if want_grad {
            records.push(UpdateRecord {
                k: EventType::BOS,
                h_in: zero.clone(),
                c_in: zero.clone(),
                gates: g0,
            });
        }
        let mut adjoints: Vec<StateAdjoint> = Vec::new();
        if want_grad {
            adjoints.push(StateAdjoint::zeros(dim));
        }

        let weight = if sample_times.is_empty() {
            0.0
        } else {
            horizon / sample_times.len() as f64
        };
        let mut lam = vec![0.0; k_types];
        let mut dl_dlam = vec![0.0; k_types];
        let mut dh = vec![0.0; dim];
        let mut integral_sum = 0.0;
        let mut next_sample = 0;

        // Integral samples in the interval governed by the newest state.
        let mut drain_samples = |upto: f64,
                                 states: &Vec<CellState>,
                                 adjoints: &mut Vec<StateAdjoint>,
                                 grad: &mut Option<&mut [f64]>,
                                 next_sample: &mut usize,
                                 lam: &mut [f64],
                                 dl_dlam: &mut [f64],
                                 dh: &mut [f64]| {
            let state = states.last().unwrap();
            while *next_sample < sample_times.len() && sample_times[*next_sample] <= upto {
                let tau = sample_times[*next_sample];
                *next_sample += 1;
                let dec = decayed_at(state, tau);
                for (k, l) in lam.iter_mut().enumerate() {
                    let a: f64 = self.proj()[k * dim..(k + 1) * dim]
                        .iter()
                        .zip(&dec.h)
                        .map(|(w, h)| w * h)
                        .sum();
                    *l = softplus_scaled(a, self.scale()[k]);
                }
                integral_sum += lam.iter().sum::<f64>();
                if let Some(g) = grad.as_deref_mut() {
                    if objective.integral_weight != 0.0 {
                        dl_dlam.fill(-objective.integral_weight * weight);
                        backprop_intensity(self, &dec.h, dl_dlam, g, dh);
                        let adj = adjoints.last_mut().unwrap();
                        backprop_decay(state, tau - state.t_anchor, dh, &zero, adj);
                    }
                }
            }
        };

        for (i, e) in events.iter().enumerate() {
            drain_samples(
                e.t,
                &states,
                &mut adjoints,
                &mut grad,
                &mut next_sample,
                &mut lam,
                &mut dl_dlam,
                &mut dh,
            );
            let state = states.last().unwrap();
            let dec = decayed_at(state, e.t);
            self.intensities(state, e.t, &mut lam);
            let target = e.k.index();
            let lk = lam[target];
            if !(lk > 0.0) {
                return Err(Error::IntensityUnderflow { index: i, k: e.k.0 });
            }
            terms.log_intensity.push(log(lk));
            terms.log_total.push(log(lam.iter().sum::<f64>()));
            if let Some(g) = grad.as_deref_mut() {
                if objective.event_weight != 0.0 {
                    dl_dlam.fill(0.0);
                    dl_dlam[target] = objective.event_weight / lk;
                    backprop_intensity(self, &dec.h, &dl_dlam, g, &mut dh);
                    let adj = adjoints.last_mut().unwrap();
                    backprop_decay(state, e.t - state.t_anchor, &dh, &zero, adj);
                }
            }
            let (next, gates) = update_with_gates(self, &dec, &state.c_target, e.k, e.t);
            if want_grad {
                records.push(UpdateRecord {
                    k: e.k,
                    h_in: dec.h,
                    c_in: dec.c,
                    gates,
                });
                adjoints.push(StateAdjoint::zeros(dim));
            }
            states.push(next);
        }
        drain_samples(
            f64::INFINITY,
            &states,
            &mut adjoints,
            &mut grad,
            &mut next_sample,
            &mut lam,
            &mut dl_dlam,
            &mut dh,
        );
        terms.integral = weight * integral_sum;

        if let Some(g) = grad {
            self.backward(&states, &records, adjoints, g);
        }
        Ok(terms)
    }
}

impl CtLstmParams {
    /// Sweeps the updates in reverse, turning state adjoints into parameter
    /// gradients and into adjoints of the preceding state.
    fn backward(&self, states: &[CellState], records: &[UpdateRecord], mut adjoints: Vec<StateAdjoint>, grad: &mut [f64]) {
        let dim = self.hidden();
        let mut pre = [(); 7].map(|_| vec![0.0; dim]);
        let mut dx = vec![0.0; dim];
        let mut dh_in = vec![0.0; dim];
        let mut dc_in = vec![0.0; dim];
        let mut dc_target_prev = vec![0.0; dim];

        for j in (0..records.len()).rev() {
            let rec = &records[j];
            let g = &rec.gates;
            let adj = &adjoints[j];
            let c_target_prev: &[f64] = if j == 0 { &[] } else { &states[j - 1].c_target };
            let [p_i, p_f, p_z, p_o, p_ib, p_fb, p_d] = &mut pre;
            for d in 0..dim {
                let gc0 = adj.c_start[d];
                let gcb = adj.c_target[d];
                let cbar_prev = if j == 0 { 0.0 } else { c_target_prev[d] };
                let (i, f, z, o, ib, fb) = (
                    g.input[d],
                    g.forget[d],
                    g.candidate[d],
                    g.output[d],
                    g.target_input[d],
                    g.target_forget[d],
                );
                let dz = gc0 * i + gcb * ib;
                p_i[d] = gc0 * z * i * (1.0 - i);
                p_f[d] = gc0 * rec.c_in[d] * f * (1.0 - f);
                p_z[d] = dz * 0.5 * (1.0 - z * z);
                p_o[d] = adj.out_gate[d] * o * (1.0 - o);
                p_ib[d] = gcb * z * ib * (1.0 - ib);
                p_fb[d] = gcb * cbar_prev * fb * (1.0 - fb);
                p_d[d] = adj.decay[d] * sigmoid(g.decay_pre[d] / self.decay_scale());
                dc_in[d] = gc0 * f;
                dc_target_prev[d] = gcb * fb;
            }

            let x = self.embedding(rec.k);
            dx.fill(0.0);
            dh_in.fill(0.0);
            for gate in Gate::ALL {
                let dpre = &pre[gate as usize];
                let w_off = self.w_range(gate).start;
                let u_off = self.u_range(gate).start;
                let b_off = self.bias_range(gate).start;
                let w = self.w(gate);
                let u = self.u(gate);
                for r in 0..dim {
                    let gp = dpre[r];
                    if gp == 0.0 {
                        continue;
                    }
                    grad[b_off + r] += gp;
                    for c in 0..dim {
                        grad[w_off + r * dim + c] += gp * x[c];
                        grad[u_off + r * dim + c] += gp * rec.h_in[c];
                        dx[c] += gp * w[r * dim + c];
                        dh_in[c] += gp * u[r * dim + c];
                    }
                }
            }
            let e_off = rec.k.0 as usize * dim;
            for c in 0..dim {
                grad[e_off + c] += dx[c];
            }

            if j > 0 {
                let prev = &states[j - 1];
                let dt = states[j].t_anchor - prev.t_anchor;
                let prev_adj = &mut adjoints[j - 1];
                backprop_decay(prev, dt, &dh_in, &dc_in, prev_adj);
                for d in 0..dim {
                    prev_adj.c_target[d] += dc_target_prev[d];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Event;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(rng: &mut ChaCha8Rng, k: usize, d: usize) -> CtLstmParams {
        let mut p = CtLstmParams::zeros(k, d);
        for v in p.as_mut_slice() {
            *v = rng.random_range(-1.0..1.0);
        }
        for s in p.scale_mut() {
            *s = rng.random_range(0.3..1.5);
        }
        p
    }

    fn random_stream(rng: &mut ChaCha8Rng, k: u32, n: usize) -> EventStream {
        let mut t = 0.0;
        let events: Vec<Event> = (0..n)
            .map(|_| {
                t += rng.random_range(0.05..0.8);
                Event::new(rng.random_range(1..=k), t)
            })
            .collect();
        EventStream::new(events, t + 0.5, k as usize).unwrap()
    }

    fn objective_value(p: &CtLstmParams, s: &EventStream, taus: &[f64]) -> f64 {
        let terms = p.evaluate(s, s.horizon(), taus, Objective::LOG_LIKELIHOOD, None).unwrap();
        terms.log_intensity.iter().sum::<f64>() - terms.integral
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..3 {
            let p = random_params(&mut rng, 2, 4);
            let s = random_stream(&mut rng, 2, 10);
            let mut taus: Vec<f64> = (0..15).map(|_| rng.random_range(0.0..s.horizon())).collect();
            taus.sort_by(f64::total_cmp);
            let mut grad = vec![0.0; p.num_params()];
            p.evaluate(&s, s.horizon(), &taus, Objective::LOG_LIKELIHOOD, Some(&mut grad))
                .unwrap();
            let h = 1e-6;
            for i in 0..p.num_params() {
                let mut plus = p.clone();
                plus.as_mut_slice()[i] += h;
                let mut minus = p.clone();
                minus.as_mut_slice()[i] -= h;
                let fd = (objective_value(&plus, &s, &taus) - objective_value(&minus, &s, &taus)) / (2.0 * h);
                let err = (fd - grad[i]).abs() / f64::max(1.0, fd.abs());
                assert!(err < 1e-6, "param {i}: analytic {} vs fd {fd}", grad[i]);
            }
        }
    }

    #[test]
    fn forward_matches_stepwise_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_params(&mut rng, 3, 5);
        let s = random_stream(&mut rng, 3, 12);
        let terms = p.evaluate(&s, s.horizon(), &[], Objective::LOG_LIKELIHOOD, None).unwrap();
        let mut state = p.initial_state();
        let mut lam = vec![0.0; 3];
        for (i, e) in s.events().iter().enumerate() {
            p.intensities(&state, e.t, &mut lam);
            assert_eq!(terms.log_intensity[i], log(lam[e.k.index()]));
            p.observe(&mut state, *e);
        }
    }
}
