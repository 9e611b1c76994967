//! Spiking neural networks whose synapses and membranes are IIR filters, trained by
//! backpropagation through time with a surrogate spike gradient.
//!
//! A layer filters each input spike train with an IIR kernel, mixes the filtered traces
//! through a weight matrix and feeds the result into leaky integrate-and-fire neurons with
//! an adaptive reset. Kernel coefficients can be trained alongside the weights.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod data;
pub mod encoders;
pub mod error;
pub mod filter;
pub mod network;
pub mod neuron;
pub mod rng;
pub mod spikes;
pub mod training;

pub use error::{Error, Result};
pub use filter::{dual_exp_kernel, FilterCoeffs};
pub use network::{layer_forward, network_forward, LayerSpec, Matrix, NetworkSpec, SimState, SpikeMode};
pub use neuron::{spike_probability, surrogate_grad, NeuronParams};
pub use spikes::{SpikeTensor, Trace};
