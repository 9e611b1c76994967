//! Reverse-mode traversal of the unrolled network.
//!
//! Every layer is differentiated exactly through its recurrences, with the Gaussian
//! surrogate standing in for the Heaviside derivative. Writing `gX` for `dE/dX`:
//!
//! ```text
//! gO[t] = delta[t] + gR[t+1]                 (O[t] feeds R[t+1] with weight 1)
//! gV[t] = eps[t] gO[t] + lambda gV[t+1]
//! gR[t] = -V_th gV[t] + theta gR[t+1]
//! gI[t] = gV[t]
//! ```
//!
//! Expanding `gR[t+1]` shows that `gV[t+1]` reaches `gV[t]` with the factor
//! `kappa[t] = lambda - V_th eps[t]`; products of `kappa` give the weight-gradient sum over
//! earlier traces. The synapse filters are differentiated by running the trace adjoint
//! backwards through the feedback taps, which covers the full recursive dependence of
//! `F[t-p]` on the coefficients. Adjoints reaching the previous layer pass through every
//! feedforward tap `b_q`, so an error at `t + q` flows back to a spike at `t`. Adjoints
//! beyond the horizon are zero.

use crate::error::{Error, Result};
use crate::network::{Matrix, NetworkSpec};
use crate::neuron::surrogate_grad;
use crate::spikes::Trace;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterGrads {
    pub feedback: Vec<f64>,
    pub feedforward: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Matrix,
    /// `None` for channels whose filter is not trainable.
    pub filters: Vec<Option<FilterGrads>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

impl Gradients {
    pub fn zeros_like(net: &NetworkSpec) -> Self {
        let layers = net
            .layers()
            .iter()
            .map(|l| LayerGrads {
                weights: Matrix::zeros(l.n_out(), l.n_in()),
                filters: l
                    .filters()
                    .iter()
                    .map(|f| {
                        f.trainable().then(|| FilterGrads {
                            feedback: vec![0.0; f.feedback().len()],
                            feedforward: vec![0.0; f.feedforward().len()],
                        })
                    })
                    .collect(),
            })
            .collect();
        Gradients { layers }
    }

    /// Flattened in the same order as [`NetworkSpec::params`].
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            for f in l.filters.iter().flatten() {
                out.extend_from_slice(&f.feedback);
                out.extend_from_slice(&f.feedforward);
            }
        }
        out
    }

    fn for_each_mut(&mut self, mut op: impl FnMut(&mut f64)) {
        for l in &mut self.layers {
            l.weights.as_mut_slice().iter_mut().for_each(&mut op);
            for f in l.filters.iter_mut().flatten() {
                f.feedback.iter_mut().for_each(&mut op);
                f.feedforward.iter_mut().for_each(&mut op);
            }
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        let flat = other.to_vec();
        let mut k = 0;
        self.for_each_mut(|x| {
            *x += flat[k];
            k += 1;
        });
    }

    pub fn scale(&mut self, s: f64) {
        self.for_each_mut(|x| *x *= s);
    }

    pub fn norm(&self) -> f64 {
        self.to_vec().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Rescales to global norm `max_norm` if it is larger. Returns the norm before clipping.
    pub fn clip_norm(&mut self, max_norm: f64) -> f64 {
        let n = self.norm();
        if n > max_norm && n > 0.0 {
            self.scale(max_norm / n);
        }
        n
    }

    pub fn is_zero(&self) -> bool {
        self.to_vec().iter().all(|&x| x == 0.0)
    }

    /// `dE/da_{j,p}` at layer `layer`, `p` counted from 1. `None` if the filter is fixed.
    pub fn d_alpha(&self, layer: usize, channel: usize, p: usize) -> Option<f64> {
        let f = self.layers.get(layer)?.filters.get(channel)?.as_ref()?;
        f.feedback.get(p.checked_sub(1)?).copied()
    }

    /// `dE/db_{j,q}` at layer `layer`, `q` counted from 0. `None` if the filter is fixed.
    pub fn d_beta(&self, layer: usize, channel: usize, q: usize) -> Option<f64> {
        let f = self.layers.get(layer)?.filters.get(channel)?.as_ref()?;
        f.feedforward.get(q).copied()
    }
}

/// Gradients of the loss with respect to every weight and trainable filter coefficient,
/// given `d_out = dE/dO` at the last layer and a recorded trajectory.
pub fn backward(net: &NetworkSpec, state: &crate::network::SimState, d_out: &Trace) -> Result<Gradients> {
    let horizon = state.horizon();
    if state.layers.len() != net.layers().len() {
        return Err(Error::shape("recorded layers", net.layers().len(), state.layers.len()));
    }
    if d_out.horizon() != horizon || d_out.channels() != net.n_out() {
        return Err(Error::shape(
            "output adjoint",
            format!("{horizon}x{}", net.n_out()),
            format!("{}x{}", d_out.horizon(), d_out.channels()),
        ));
    }
    for (l, s) in state.layers.iter().enumerate() {
        if s.v.horizon() != horizon {
            return Err(Error::shape(
                "recorded layer horizon",
                horizon,
                format!("{} at layer {l}", s.v.horizon()),
            ));
        }
    }

    let mut grads = Gradients::zeros_like(net);
    let mut upstream = d_out.clone();

    for l in (0..net.layers().len()).rev() {
        let spec = &net.layers()[l];
        let st = &state.layers[l];
        let x = if l == 0 { &state.input } else { &state.layers[l - 1].o };
        let (n_in, n_out) = (spec.n_in(), spec.n_out());
        let p = *spec.neuron();

        // membrane and reset adjoints, newest first
        let mut g_current = Trace::zeros(horizon, n_out);
        let mut gv_next = vec![0.0; n_out];
        let mut gr_next = vec![0.0; n_out];
        #[cfg(debug_assertions)]
        let mut gr_next2 = vec![0.0; n_out];
        for t in (0..horizon).rev() {
            for i in 0..n_out {
                let eps = surrogate_grad(st.v.get(t, i), &p);
                let delta = upstream.get(t, i);
                let g_o = delta + gr_next[i];
                let gv = eps * g_o + p.lambda * gv_next[i];
                #[cfg(debug_assertions)]
                {
                    // gV[t] = kappa[t] gV[t+1] + eps[t] (delta[t] + theta gR[t+2])
                    let kappa = p.lambda - p.v_th * eps;
                    let via_kappa = kappa * gv_next[i] + eps * (delta + p.theta * gr_next2[i]);
                    debug_assert!(
                        (via_kappa - gv).abs() <= 1e-9 * (1.0 + gv.abs()),
                        "kappa identity violated at layer {l}, t={t}, i={i}: {via_kappa} vs {gv}"
                    );
                    gr_next2[i] = gr_next[i];
                }
                let gr = -p.v_th * gv + p.theta * gr_next[i];
                g_current.set(t, i, gv);
                gv_next[i] = gv;
                gr_next[i] = gr;
            }
        }

        // I = W F: weight gradient and adjoint of the synapse traces
        let w = spec.weights();
        let dw = &mut grads.layers[l].weights;
        let mut g_f = Trace::zeros(horizon, n_in);
        for t in 0..horizon {
            let f_row = st.f.row(t);
            for i in 0..n_out {
                let gi = g_current.get(t, i);
                if gi == 0.0 {
                    continue;
                }
                for (d, f) in dw.row_mut(i).iter_mut().zip(f_row) {
                    *d += gi * f;
                }
                for (g, wij) in g_f.row_mut(t).iter_mut().zip(w.row(i)) {
                    *g += gi * wij;
                }
            }
        }

        // run the trace adjoint back through the feedback taps
        for (j, coeffs) in spec.filters().iter().enumerate() {
            let fb = coeffs.feedback();
            if fb.is_empty() {
                continue;
            }
            for t in (0..horizon).rev() {
                let mut acc = g_f.get(t, j);
                for (k, a) in fb.iter().enumerate() {
                    let s = t + k + 1;
                    if s >= horizon {
                        break;
                    }
                    acc += a * g_f.get(s, j);
                }
                g_f.set(t, j, acc);
            }
        }

        for (j, coeffs) in spec.filters().iter().enumerate() {
            if let Some(fg) = grads.layers[l].filters[j].as_mut() {
                for (k, d) in fg.feedback.iter_mut().enumerate() {
                    let lag = k + 1;
                    *d = (lag..horizon).map(|t| g_f.get(t, j) * st.f.get(t - lag, j)).sum();
                }
                for (q, d) in fg.feedforward.iter_mut().enumerate() {
                    *d = (q..horizon).map(|t| g_f.get(t, j) * x.get(t - q, j)).sum();
                }
            }
            debug_assert_eq!(coeffs.trainable(), grads.layers[l].filters[j].is_some());
        }

        if l > 0 {
            let mut g_x = Trace::zeros(horizon, n_in);
            for t in 0..horizon {
                for (j, coeffs) in spec.filters().iter().enumerate() {
                    let mut acc = 0.0;
                    for (q, b) in coeffs.feedforward().iter().enumerate() {
                        if t + q >= horizon {
                            break;
                        }
                        acc += b * g_f.get(t + q, j);
                    }
                    g_x.set(t, j, acc);
                }
            }
            upstream = g_x;
        }
    }
    Ok(grads)
}
