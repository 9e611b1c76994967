//! Layered forward simulation of the IIR spiking network.
//!
//! Per layer and step `t`:
//!
//! ```text
//! F_j[t] = sum_p a_{j,p} F_j[t-p] + sum_q b_{j,q} O^{prev}_j[t-q]   (one state per input axon)
//! I_i[t] = sum_j w_{i,j} F_j[t]
//! R_i[t] = theta R_i[t-1] + O_i[t-1]
//! V_i[t] = lambda V_i[t-1] + I_i[t] - V_th R_i[t]
//! O_i[t] = U(V_i[t] - V_th)
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterCoeffs;
use crate::neuron::{spike, spike_probability, NeuronParams};
use crate::spikes::{SpikeTensor, Trace};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "matrix",
                format!("{rows}x{cols}"),
                format!("{} values", data.len()),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn scale(&mut self, k: f64) {
        for x in &mut self.data {
            *x *= k;
        }
    }
}

/// How `O[t]` is produced from the membrane potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpikeMode {
    /// Binary threshold; what training and inference use.
    #[default]
    Hard,
    /// `O[t]` is the continuous spike probability. Makes the whole unrolled graph
    /// differentiable so finite differences can check the backward pass.
    Soft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    weights: Matrix,
    filters: Vec<FilterCoeffs>,
    neuron: NeuronParams,
}

impl LayerSpec {
    /// `weights` is `[n_out x n_in]`; one filter per input channel, shared by every neuron.
    pub fn new(weights: Matrix, filters: Vec<FilterCoeffs>, neuron: NeuronParams) -> Result<Self> {
        if filters.len() != weights.cols() {
            return Err(Error::shape(
                "layer filters",
                format!("{} (one per input channel)", weights.cols()),
                filters.len(),
            ));
        }
        if let Some(first) = filters.first() {
            let orders = (first.feedback_order(), first.feedforward_order());
            if let Some(bad) = filters
                .iter()
                .find(|f| (f.feedback_order(), f.feedforward_order()) != orders)
            {
                return Err(Error::shape(
                    "layer filter orders",
                    format!("{orders:?} for every channel"),
                    format!("{:?}", (bad.feedback_order(), bad.feedforward_order())),
                ));
            }
        }
        for f in &filters {
            if !f.is_stable() {
                return Err(Error::UnstableFilter {
                    modulus: f.max_pole_modulus(),
                });
            }
        }
        neuron.validate()?;
        Ok(LayerSpec {
            weights,
            filters,
            neuron,
        })
    }

    /// Weights uniform in `[-gain/sqrt(n_in), gain/sqrt(n_in)]`; `filter` copied to every channel.
    pub fn random<R: Rng + ?Sized>(
        n_in: usize,
        n_out: usize,
        filter: &FilterCoeffs,
        neuron: NeuronParams,
        gain: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if n_in == 0 || n_out == 0 {
            return Err(Error::param(
                "layer size",
                "layers need at least one input and one neuron",
            ));
        }
        let bound = gain / (n_in as f64).sqrt();
        let data = (0..n_in * n_out).map(|_| rng.random_range(-bound..=bound)).collect();
        LayerSpec::new(Matrix::from_vec(n_out, n_in, data)?, vec![filter.clone(); n_in], neuron)
    }

    pub fn n_in(&self) -> usize {
        self.weights.cols()
    }

    pub fn n_out(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    pub fn filters(&self) -> &[FilterCoeffs] {
        &self.filters
    }

    pub fn neuron(&self) -> &NeuronParams {
        &self.neuron
    }

    /// Synapse traces `F[t, j]` for every input channel.
    pub fn filter_traces(&self, input: &Trace) -> Trace {
        let horizon = input.horizon();
        let n_in = self.n_in();
        let mut f = Trace::zeros(horizon, n_in);
        for t in 0..horizon {
            for (j, coeffs) in self.filters.iter().enumerate() {
                let mut acc = 0.0;
                for (q, b) in coeffs.feedforward().iter().enumerate() {
                    if q > t {
                        break;
                    }
                    acc += b * input.get(t - q, j);
                }
                for (p, a) in coeffs.feedback().iter().enumerate() {
                    if p + 1 > t {
                        break;
                    }
                    acc += a * f.get(t - p - 1, j);
                }
                f.set(t, j, acc);
            }
        }
        f
    }

    /// Runs the layer over `input` (shape `[T x n_in]`), recording every state variable.
    pub fn run(&self, input: &Trace, mode: SpikeMode) -> Result<LayerState> {
        if input.channels() != self.n_in() {
            return Err(Error::shape("layer input channels", self.n_in(), input.channels()));
        }
        let horizon = input.horizon();
        let n_out = self.n_out();
        let f = self.filter_traces(input);

        let mut current = Trace::zeros(horizon, n_out);
        for t in 0..horizon {
            let ft = f.row(t);
            for (i, slot) in current.row_mut(t).iter_mut().enumerate() {
                *slot = dot(self.weights.row(i), ft);
            }
        }

        let NeuronParams {
            lambda, theta, v_th, ..
        } = self.neuron;
        let mut v = Trace::zeros(horizon, n_out);
        let mut r = Trace::zeros(horizon, n_out);
        let mut o = Trace::zeros(horizon, n_out);
        for t in 0..horizon {
            for i in 0..n_out {
                let (v_prev, r_prev, o_prev) = if t > 0 {
                    (v.get(t - 1, i), r.get(t - 1, i), o.get(t - 1, i))
                } else {
                    (0.0, 0.0, 0.0)
                };
                let rt = theta * r_prev + o_prev;
                let vt = lambda * v_prev + current.get(t, i) - v_th * rt;
                let ot = match mode {
                    SpikeMode::Hard => spike(vt, v_th) as u8 as f64,
                    SpikeMode::Soft => spike_probability(vt, &self.neuron),
                };
                r.set(t, i, rt);
                v.set(t, i, vt);
                o.set(t, i, ot);
            }
        }
        Ok(LayerState { f, current, v, r, o })
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Recorded trajectory of one layer over the full horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    /// Synapse traces `[T x n_in]`.
    pub f: Trace,
    /// Weighted input `[T x n_out]`.
    pub current: Trace,
    /// Membrane potential `[T x n_out]`.
    pub v: Trace,
    /// Reset trace `[T x n_out]`.
    pub r: Trace,
    /// Output activity `[T x n_out]`: 0/1 in hard mode, probabilities in soft mode.
    pub o: Trace,
}

/// Full network trajectory, kept for backpropagation through time.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub input: Trace,
    pub layers: Vec<LayerState>,
    pub mode: SpikeMode,
}

impl SimState {
    pub fn horizon(&self) -> usize {
        self.input.horizon()
    }

    pub fn output(&self) -> &Trace {
        &self.layers.last().expect("network has at least one layer").o
    }

    pub fn output_spikes(&self) -> SpikeTensor {
        self.output().to_spikes()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::param("layers", "network needs at least one layer"));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].n_out() != pair[1].n_in() {
                return Err(Error::Shape {
                    context: "layer chaining",
                    expected: format!("layer {} n_in = {}", k + 1, pair[0].n_out()),
                    actual: pair[1].n_in().to_string(),
                });
            }
        }
        Ok(NetworkSpec { layers })
    }

    /// Builds a randomly initialised network from widths `[n_0, n_1, ..., n_L]`,
    /// one filter prototype per layer.
    pub fn random<R: Rng + ?Sized>(
        sizes: &[usize],
        filters: &[FilterCoeffs],
        neuron: NeuronParams,
        gain: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::param("sizes", "need an input width and at least one layer"));
        }
        if filters.len() != sizes.len() - 1 {
            return Err(Error::shape("per-layer filters", sizes.len() - 1, filters.len()));
        }
        let layers = sizes
            .windows(2)
            .zip(filters)
            .map(|(w, f)| LayerSpec::random(w[0], w[1], f, neuron, gain, rng))
            .collect::<Result<Vec<_>>>()?;
        NetworkSpec::new(layers)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerSpec] {
        &mut self.layers
    }

    pub fn n_in(&self) -> usize {
        self.layers[0].n_in()
    }

    pub fn n_out(&self) -> usize {
        self.layers.last().map(LayerSpec::n_out).unwrap_or(0)
    }

    /// Widths `[n_0, n_1, ..., n_L]`.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.n_in())
            .chain(self.layers.iter().map(LayerSpec::n_out))
            .collect()
    }

    pub fn simulate(&self, input: &Trace, mode: SpikeMode) -> Result<SimState> {
        if input.channels() != self.n_in() {
            return Err(Error::shape("network input channels", self.n_in(), input.channels()));
        }
        let mut layers: Vec<LayerState> = Vec::with_capacity(self.layers.len());
        for spec in &self.layers {
            let state = match layers.last() {
                Some(prev) => spec.run(&prev.o, mode)?,
                None => spec.run(input, mode)?,
            };
            layers.push(state);
        }
        Ok(SimState {
            input: input.clone(),
            layers,
            mode,
        })
    }

    /// Number of trainable scalars: every weight plus the coefficients of trainable filters.
    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| {
                l.weights.as_slice().len()
                    + l.filters
                        .iter()
                        .filter(|f| f.trainable())
                        .map(FilterCoeffs::num_coeffs)
                        .sum::<usize>()
            })
            .sum()
    }

    /// Trainable parameters flattened in canonical order: per layer, weights row-major,
    /// then for each trainable input channel its feedback then feedforward coefficients.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            for f in l.filters.iter().filter(|f| f.trainable()) {
                out.extend_from_slice(f.feedback());
                out.extend_from_slice(f.feedforward());
            }
        }
        out
    }

    /// Inverse of [`NetworkSpec::params`]. Does not check filter stability.
    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::shape("parameter vector", self.num_params(), values.len()));
        }
        let mut k = 0;
        for l in &mut self.layers {
            let n = l.weights.as_slice().len();
            l.weights.as_mut_slice().copy_from_slice(&values[k..k + n]);
            k += n;
            for f in l.filters.iter_mut().filter(|f| f.trainable()) {
                let (fb, ff) = f.coeffs_mut();
                fb.copy_from_slice(&values[k..k + fb.len()]);
                k += fb.len();
                ff.copy_from_slice(&values[k..k + ff.len()]);
                k += ff.len();
            }
        }
        Ok(())
    }

    /// Applies the radial pole clamp to every trainable filter; returns how many clamped.
    pub fn clamp_filters(&mut self) -> usize {
        let mut clamped = 0;
        for (l, layer) in self.layers.iter_mut().enumerate() {
            for (j, f) in layer.filters.iter_mut().enumerate() {
                if f.trainable() && f.clamp_poles() {
                    log::info!("clamped unstable filter at layer {l}, channel {j}");
                    clamped += 1;
                }
            }
        }
        clamped
    }
}

/// Hard-mode run of a single layer on binary input.
pub fn layer_forward(spec: &LayerSpec, input: &SpikeTensor) -> Result<LayerState> {
    spec.run(&input.to_trace(), SpikeMode::Hard)
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub output: SpikeTensor,
    pub state: Option<SimState>,
}

/// Hard-mode network run. `record` keeps the full trajectory for training.
pub fn network_forward(net: &NetworkSpec, input: &SpikeTensor, record: bool) -> Result<ForwardOutput> {
    let state = net.simulate(&input.to_trace(), SpikeMode::Hard)?;
    Ok(ForwardOutput {
        output: state.output_spikes(),
        state: record.then_some(state),
    })
}
